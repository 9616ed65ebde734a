#include <iostream>

#include "inmo/cli.hpp"

int main(int argc, char** argv) { return inmo::cli::run(argc, argv, std::cout, std::cerr); }
