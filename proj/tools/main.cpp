#include <iostream>
#include <string>
#include <vector>

#include "framelabel/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return framelabel::cli::run(args, std::cout, std::cerr);
}
