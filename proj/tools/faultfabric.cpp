#include <iostream>

#include "faultfabric/cli/cli.hpp"

int main(int argc, char** argv) { return faultfabric::cli::cli_main(argc, argv, std::cout, std::cerr); }
