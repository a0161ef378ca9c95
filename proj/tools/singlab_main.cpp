#include <iostream>

#include "singlab/cli/app.hpp"

int main(int argc, char** argv) { return singlab::cli::run_main(argc, argv, std::cout, std::cerr); }
