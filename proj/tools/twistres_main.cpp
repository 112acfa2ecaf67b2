#include <iostream>
#include <string>
#include <vector>

#include "twistres/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return twistres::run_cli(args, std::cout, std::cerr);
}
