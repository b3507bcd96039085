#include <iostream>

#include "lmd/cli/commands.hpp"

int main(int argc, char** argv) { return lmd::cli::run(argc, argv, std::cout, std::cerr); }
