#include <iostream>
#include <string>
#include <vector>

#include "grouprl/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return grouprl::cli::run(args, std::cout, std::cerr);
}
