#include <iostream>

#include "dcl/cli.hpp"

int main(int argc, char** argv) {
  return dcl::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
