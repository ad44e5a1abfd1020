#include <string>
#include <vector>

#include "sgfem/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sgfem::cli::run(args);
}
