#include "mopar/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mopar::run_cli(argc, argv, std::cout, std::cerr); }
