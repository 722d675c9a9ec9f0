#include <string>
#include <vector>

#include "specperturb/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return specperturb::cli::run(args);
}
