#include <iostream>
#include <string>
#include <vector>

#include "oflc/cli.hpp"

int main(int argc, char** argv) {
  return oflc::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
