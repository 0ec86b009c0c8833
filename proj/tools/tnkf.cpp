#include <iostream>

#include "tnkf/cli.hpp"

int main(int argc, char** argv) { return tnkf::cli::run(argc, argv, std::cout, std::cerr); }
