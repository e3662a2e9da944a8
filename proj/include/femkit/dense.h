// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace femkit::dense
{

/// LU factorization with partial pivoting of a row-major n x n matrix.
class LU
{
public:
  /// Throws SingularMatrix if a pivot is below 1e-14 times the largest
  /// absolute entry of A.
  LU(std::vector<double> A, std::size_t n);

  std::size_t size() const { return _n; }

  /// Solve A x = b in place.
  void solve(std::span<double> b) const;

  /// Solve A^T x = b in place.
  void solve_transpose(std::span<double> b) const;

private:
  std::size_t _n;
  std::vector<double> _lu;
  std::vector<std::size_t> _perm;
};

/// Inverse of a row-major n x n matrix.
std::vector<double> inverse(const std::vector<double>& A, std::size_t n);

} // namespace femkit::dense
