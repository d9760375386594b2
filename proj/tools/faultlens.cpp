#include <string>
#include <vector>

#include "faultlens/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return faultlens::cli::run(args, faultlens::cli::Environment::system());
}
