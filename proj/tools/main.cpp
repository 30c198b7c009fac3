#include <iostream>

#include "cli.hpp"
#include "liodom/nn/tensor.hpp"

int main(int argc, char** argv) {
  liodom::nn::tune_allocator();
  return liodom::cli_dispatch({argv + 1, argv + argc}, std::cout, std::cerr);
}
