#include <vector>

#include "imagehd/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return imagehd::cli_main(args);
}
