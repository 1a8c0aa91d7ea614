#include "deepcars/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return deepcars::run_cli(argc, argv, std::cout, std::cerr); }
