#include "sda/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sda::run_cli(argc, argv, std::cout, std::cerr); }
