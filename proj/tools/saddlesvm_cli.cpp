#include <iostream>

#include "saddlesvm/cli.hpp"

int main(int argc, char** argv) { return saddlesvm::run_cli(argc, argv, std::cout, std::cerr); }
