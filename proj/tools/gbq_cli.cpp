#include <iostream>

#include "gbq/cli.hpp"

int main(int argc, char** argv) { return gbq::run_cli(argc, argv, std::cout, std::cerr); }
