#include "report_audit/cli.hpp"

int main(int argc, char** argv) { return raudit::cli::main(argc, argv); }
