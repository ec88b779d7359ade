#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return tradediff::cli::dispatch(argc, argv, std::cout, std::cerr); }
