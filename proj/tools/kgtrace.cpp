#include "kgtrace/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return kgt::run_cli(argc, argv, std::cout, std::cerr); }
