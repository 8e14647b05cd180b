#include <iostream>

#include "smanon/cli.hpp"

int main(int argc, char** argv) { return smanon::run(argc, argv, std::cout, std::cerr); }
