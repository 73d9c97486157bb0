#include <string>
#include <vector>

#include "pcreg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcreg::run_cli(args);
}
