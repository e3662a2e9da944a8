// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <string>

/// Messages to stderr, filtered by the FEMKIT_LOG environment variable
/// (error, warning, info, debug; default warning).
namespace femkit::log
{

enum class Level
{
  quiet = -1,
  error = 0,
  warning = 1,
  info = 2,
  debug = 3
};

/// Current threshold. Read from FEMKIT_LOG on first use.
Level level();
void set_level(Level level);
Level level_from_string(const std::string& name);

void message(Level level, const std::string& text);
inline void error(const std::string& text) { message(Level::error, text); }
inline void warning(const std::string& text) { message(Level::warning, text); }
inline void info(const std::string& text) { message(Level::info, text); }
inline void debug(const std::string& text) { message(Level::debug, text); }

} // namespace femkit::log
