#include <iostream>

#include "tlidar/cli.hpp"

int main(int argc, char** argv) { return tlidar::cli_main(argc, argv, std::cout, std::cerr); }
