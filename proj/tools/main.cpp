#include <iostream>
#include <vector>

#include "litefat/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return litefat::cli::run_command(args, std::cout, std::cerr);
}
