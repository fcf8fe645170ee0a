#include <iostream>

#include "marc/cli.hpp"

int main(int argc, char** argv) { return marc::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
