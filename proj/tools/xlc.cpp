#include <iostream>

#include "xlc/cli.hpp"

int main(int argc, char** argv) {
  return xlc::cli_dispatch(argc, argv, std::cout, std::cerr);
}
