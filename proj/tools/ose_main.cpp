#include <iostream>

#include "ose/cli.hpp"

int main(int argc, char** argv) { return ose::run_cli(argc, argv, std::cout, std::cerr); }
