#include <iostream>
#include <string>
#include <vector>

#include "rprec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rprec::cli::run(args, std::cout, std::cerr);
}
