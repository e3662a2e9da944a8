// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace femkit::cli
{

/// Exit codes of the command line tool.
enum Exit
{
  ok = 0,
  usage = 1,
  failure = 2
};

/// Run the tool with the given arguments (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// IR document for every compilable form of a forms file. `skipped`
/// receives the names of forms that are not of full arity.
std::string compile_file(const std::string& path, int degree,
                         std::vector<std::string>* skipped = nullptr,
                         std::string* pseudocode = nullptr, int* kernels = nullptr);

} // namespace femkit::cli
