#include <iostream>
#include <string>
#include <vector>

#include "wickmps/cli.hpp"

int main(int argc, char** argv) {
  return wickmps::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
