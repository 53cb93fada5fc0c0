#include <iostream>
#include <string>
#include <vector>

#include "wevbg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return wevbg::cli_dispatch(args, std::cout, std::cerr);
}
