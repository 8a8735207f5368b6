#include "mckelm/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mckelm::cli::run(argc, argv, std::cout, std::cerr); }
