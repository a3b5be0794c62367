#include <iostream>

#include "mfl/cli.hpp"

int main(int argc, char** argv) { return mfl::cli::main_entry(argc, argv, std::cout, std::cerr); }
