#include <iostream>

#include "lipreach/cli.hpp"

int main(int argc, char** argv) { return lipreach::cli::main(argc, argv, std::cout, std::cerr); }
