// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "assembly.h"
#include "function.h"
#include "la.h"
#include "mesh.h"
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

/// Problem descriptors (JSON, schema "femkit-prob-1") and the drivers that
/// run them: steady linear, steady nonlinear (Newton) and transient
/// theta-method.
namespace femkit::problem
{

/// Parse a region predicate over x[0..gdim) and the boundary flag.
///
///   region  := clause (("or" | "and") clause)*     ("and" binds tighter)
///   clause  := "on_boundary" | "everywhere" | expr cmp expr
///   cmp     := "=" | "==" | "<" | "<=" | ">" | ">="
///
/// Comparisons are tolerant by 1e-10: "=" is near(), "<" and "<=" both
/// accept a <= b + 1e-10. Throws SyntaxError or UnknownIdentifier.
Region parse_region(const std::string& text, int gdim);

/// Overrides coming from the command line.
struct RunOptions
{
  std::optional<std::string> mesh;
  std::optional<std::string> output;
  std::optional<int> degree;
  std::optional<la::Method> method;
  std::optional<double> rtol;
  std::optional<int> maxit;
  int threads = 1;
  /// Progress lines; null for silence.
  std::ostream* out = nullptr;
};

struct RunResult
{
  /// "linear", "nonlinear" or "transient"
  std::string kind;
  std::shared_ptr<const Mesh> mesh;
  std::shared_ptr<Function> solution;
  std::size_t dofs = 0;
  la::Method method = la::Method::cg;
  int newton_iterations = 0;
  std::vector<double> residuals;
  int steps = 0;
  double time = 0.0;
  /// Whether the transient driver assembled the matrix once.
  bool reused_matrix = false;
  std::vector<std::string> written;
};

/// Run a descriptor given as JSON text. Relative paths in it resolve
/// against base_dir.
RunResult run_text(const std::string& text, const std::string& base_dir,
                   const RunOptions& options = {});

/// Run the descriptor file at `path`.
RunResult run_file(const std::string& path, const RunOptions& options = {});

} // namespace femkit::problem
