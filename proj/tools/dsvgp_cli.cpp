#include "dsvgp/harness/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dsvgp::run_cli(argc, argv, std::cout, std::cerr); }
