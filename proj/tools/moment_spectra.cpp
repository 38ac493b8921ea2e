#include <iostream>

#include "momspec/cli/commands.hpp"

int main(int argc, char** argv) { return momspec::cli::run_cli(argc, argv, std::cout, std::cerr); }
