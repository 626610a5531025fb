#include <iostream>

#include "misi/cli.hpp"

int main(int argc, char** argv) { return misi::run_cli(argc, argv, std::cout, std::cerr); }
