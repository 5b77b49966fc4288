#include <iostream>

#include "decswitch_cli/commands.hpp"

int main(int argc, char** argv) { return decswitch::cli::run(argc, argv, std::cout, std::cerr); }
