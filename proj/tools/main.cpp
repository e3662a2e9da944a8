// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include "cli.h"

#include <iostream>

int main(int argc, char** argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  return femkit::cli::run(args, std::cout, std::cerr);
}
