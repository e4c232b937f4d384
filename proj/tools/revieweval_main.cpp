#include "revieweval/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return revieweval::cli::run(argc, argv, std::cout, std::cerr); }
