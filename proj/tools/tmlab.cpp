#include <iostream>

#include "tmlab/cli/commands.hpp"

int main(int argc, char** argv) { return tmlab::cli::dispatch(argc, argv, std::cout, std::cerr); }
