#include <iostream>
#include <string>
#include <vector>

#include "ldec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ldec::run_cli(args, std::cout, std::cerr);
}
