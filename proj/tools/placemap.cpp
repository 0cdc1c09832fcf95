#include <iostream>

#include "placemap/cli.hpp"

int main(int argc, char** argv) {
  return placemap::cli::run(argc, argv, std::cout, std::cerr);
}
