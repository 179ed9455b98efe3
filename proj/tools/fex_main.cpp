#include "fex/cli.hpp"

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  return fex::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
