#include <string>
#include <vector>

#include "varinit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return varinit::dispatch(args);
}
