#include <iostream>

#include "koopdim/cli.hpp"

int main(int argc, char** argv) { return koopdim::cli_main(argc, argv, std::cout, std::cerr); }
