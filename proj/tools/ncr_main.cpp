#include "ncr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ncr::cli::run(argc, argv, std::cout, std::cerr); }
