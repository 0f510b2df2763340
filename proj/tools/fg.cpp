#include <iostream>

#include "fg/app/commands.hpp"

int main(int argc, char** argv) { return fg::run_cli(argc, argv, std::cout, std::cerr); }
