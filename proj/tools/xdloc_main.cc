#include <iostream>

#include "xdloc/cli.h"

int main(int argc, char** argv) { return xdloc::run_cli(argc, argv, std::cout, std::cerr); }
