// SPDX-License-Identifier: MIT
#include "bht/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bht::cli::run(argc, argv, std::cout, std::cerr); }
