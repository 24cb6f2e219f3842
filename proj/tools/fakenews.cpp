#include <iostream>

#include "fakenews/cli.hpp"

int main(int argc, char** argv) { return fakenews::run_cli(argc, argv, std::cout, std::cerr); }
