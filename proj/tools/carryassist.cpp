#include <iostream>
#include <string>
#include <vector>

#include "carry/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return carry::cli::run(args, std::cout, std::cerr);
}
