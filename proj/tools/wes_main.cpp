#include <iostream>

#include "wes/cli.hpp"

int main(int argc, char** argv) {
  return wes::cli::dispatch(argc, argv, std::cout, std::cerr);
}
