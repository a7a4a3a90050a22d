#include <iostream>
#include <string>
#include <vector>

#include "dyncond/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dyncond::cli::run(args, std::cout, std::cerr);
}
