#include <iostream>

#include "echolab/cli/run.hpp"

int main(int argc, char** argv) {
  return echolab::cli::run_command({argv + 1, argv + argc}, std::cout, std::cerr);
}
