#include <iostream>

#include "bnpirt/cli.hpp"

int main(int argc, char** argv) { return bnpirt::run_cli(argc, argv, std::cout, std::cerr); }
