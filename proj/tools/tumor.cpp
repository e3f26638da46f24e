#include <iostream>

#include "tumor/cli.hpp"

int main(int argc, char** argv) { return tumor::cli::run_cli(argc, argv, std::cout, std::cerr); }
