#include <iostream>
#include <string>
#include <vector>

#include "fedelim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fedelim::run_cli(args, std::cout, std::cerr);
}
