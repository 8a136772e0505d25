#include <iostream>

#include "stockrag/pipeline.hpp"

int main(int argc, char** argv) { return stockrag::cli::main(argc, argv, std::cout, std::cerr); }
