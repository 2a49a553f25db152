#include <iostream>
#include <string>
#include <vector>

#include "shadowsim_app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shadowsim::run_app(std::move(args), std::cout, std::cerr);
}
