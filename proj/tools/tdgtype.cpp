#include <iostream>

#include "tdgtype/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tdgtype::run_cli(args, std::cout, std::cerr);
}
