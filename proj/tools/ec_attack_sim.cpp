#include <iostream>

#include "ecsim/cli.hpp"

int main(int argc, char** argv) { return ecsim::run_cli(argc, argv, std::cout, std::cerr); }
