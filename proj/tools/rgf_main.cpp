#include <iostream>
#include <string>
#include <vector>

#include "rgf/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return rgf::cli_run(args, std::cout, std::cerr);
}
