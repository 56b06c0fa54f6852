#include "sfdl/cli.hpp"

int main(int argc, char** argv) { return sfdl::cli_run(argc, argv); }
