#include <clocale>
#include <iostream>
#include <string>
#include <vector>

#include "pcam/cli.hpp"

int main(int argc, char** argv) {
  // Output must not depend on the host locale ('.' decimals always).
  std::setlocale(LC_ALL, "C");
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcam::cli_run(args, std::cout, std::cerr);
}
