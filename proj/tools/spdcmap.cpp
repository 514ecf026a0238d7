#include <iostream>

#include "spdcmap/cli.hpp"

int main(int argc, char** argv) { return spdcmap::cli::run(argc, argv, std::cout, std::cerr); }
