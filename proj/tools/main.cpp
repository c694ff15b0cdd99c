#include <iostream>

#include "ibert/cli/commands.hpp"

int main(int argc, char** argv) { return ibert::cli::run_cli(argc, argv, std::cout, std::cerr); }
