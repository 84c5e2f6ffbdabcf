#include <iostream>

#include "team/cli/app.hpp"

int main(int argc, char** argv) { return team::cli::run(argc, argv, std::cout, std::cerr); }
