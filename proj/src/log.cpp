// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/log.h>

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

using namespace femkit;

namespace
{
std::atomic<int> current{-2};
std::mutex out_mutex;
} // namespace

//-----------------------------------------------------------------------------
log::Level log::level_from_string(const std::string& name)
{
  if (name == "quiet")
    return Level::quiet;
  if (name == "error")
    return Level::error;
  if (name == "warning" or name == "warn")
    return Level::warning;
  if (name == "info")
    return Level::info;
  if (name == "debug")
    return Level::debug;
  throw Error(ErrorKind::InvalidArgument, "unknown log level '" + name + "'");
}
//-----------------------------------------------------------------------------
log::Level log::level()
{
  int l = current.load();
  if (l == -2)
  {
    l = static_cast<int>(Level::warning);
    if (const char* env = std::getenv("FEMKIT_LOG"))
    {
      try
      {
        l = static_cast<int>(level_from_string(env));
      }
      catch (const Error&)
      {
      }
    }
    current = l;
  }
  return static_cast<Level>(l);
}
//-----------------------------------------------------------------------------
void log::set_level(Level l) { current = static_cast<int>(l); }
//-----------------------------------------------------------------------------
void log::message(Level l, const std::string& text)
{
  if (l == Level::quiet or static_cast<int>(l) > static_cast<int>(level()))
    return;
  static const char* names[] = {"error", "warning", "info", "debug"};
  std::lock_guard<std::mutex> lock(out_mutex);
  std::cerr << "femkit " << names[static_cast<int>(l)] << ": " << text << "\n";
}
//-----------------------------------------------------------------------------
