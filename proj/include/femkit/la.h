// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace femkit::la
{

/// Nonzero structure of a sparse matrix: sorted, unique column indices per
/// row in compressed-row form.
class SparsityPattern
{
public:
  SparsityPattern() = default;
  SparsityPattern(std::size_t nrows, std::size_t ncols);

  std::size_t num_rows() const { return _nrows; }
  std::size_t num_cols() const { return _ncols; }

  /// Add the dense block rows x cols. Only valid before finalize().
  void insert(std::span<const std::int32_t> rows,
              std::span<const std::int32_t> cols);

  /// Add (i, i) for every i < min(nrows, ncols).
  void insert_diagonal();

  /// Sort and compress. Further inserts are rejected.
  void finalize();
  bool finalized() const { return _finalized; }

  const std::vector<std::int32_t>& offsets() const { return _offsets; }
  const std::vector<std::int32_t>& columns() const { return _columns; }
  std::size_t num_nonzeros() const { return _columns.size(); }

  std::span<const std::int32_t> row(std::size_t i) const
  {
    return {_columns.data() + _offsets[i],
            static_cast<std::size_t>(_offsets[i + 1] - _offsets[i])};
  }

private:
  std::size_t _nrows = 0;
  std::size_t _ncols = 0;
  bool _finalized = false;
  std::vector<std::vector<std::int32_t>> _rows;
  std::vector<std::int32_t> _offsets{0};
  std::vector<std::int32_t> _columns;
};

/// Rank-generic assembly target.
class GenericTensor
{
public:
  virtual ~GenericTensor() = default;

  virtual int rank() const = 0;

  /// Set all entries to zero.
  virtual void zero() = 0;

  /// Accumulate a dense local block. `indices` holds one index list per
  /// rank (none for scalars); block is row-major.
  virtual void add_local(const double* block,
                         std::span<const std::span<const std::int32_t>> indices)
      = 0;

  /// Complete assembly. Idempotent.
  virtual void finalize() = 0;
};

class Scalar : public GenericTensor
{
public:
  int rank() const override { return 0; }
  void zero() override { _value = 0.0; }
  void add_local(const double* block,
                 std::span<const std::span<const std::int32_t>>) override
  {
    _value += block[0];
  }
  void finalize() override {}

  double value() const { return _value; }

private:
  double _value = 0.0;
};

class Vector : public GenericTensor
{
public:
  Vector() = default;
  explicit Vector(std::size_t n, double value = 0.0) : _x(n, value) {}
  explicit Vector(std::vector<double> x) : _x(std::move(x)) {}

  int rank() const override { return 1; }
  void zero() override;
  void add_local(const double* block,
                 std::span<const std::span<const std::int32_t>> indices) override;
  void finalize() override {}

  std::size_t size() const { return _x.size(); }
  double& operator[](std::size_t i) { return _x[i]; }
  double operator[](std::size_t i) const { return _x[i]; }
  std::vector<double>& array() { return _x; }
  const std::vector<double>& array() const { return _x; }

  double norm() const;
  double dot(const Vector& y) const;
  /// this += a * y
  void axpy(double a, const Vector& y);
  double sum() const;

private:
  std::vector<double> _x;
};

/// CSR matrix with a fixed sparsity pattern. Adding outside the pattern
/// throws OutsidePattern.
class Matrix : public GenericTensor
{
public:
  Matrix() = default;
  explicit Matrix(std::shared_ptr<const SparsityPattern> pattern);

  int rank() const override { return 2; }
  void zero() override;
  void add_local(const double* block,
                 std::span<const std::span<const std::int32_t>> indices) override;
  void finalize() override;
  bool finalized() const { return _finalized; }

  std::size_t num_rows() const { return _pattern->num_rows(); }
  std::size_t num_cols() const { return _pattern->num_cols(); }
  const SparsityPattern& pattern() const { return *_pattern; }
  std::shared_ptr<const SparsityPattern> pattern_ptr() const
  {
    return _pattern;
  }

  const std::vector<double>& values() const { return _values; }
  std::vector<double>& values() { return _values; }

  /// Entry (i, j), 0 outside the pattern.
  double get(std::size_t i, std::size_t j) const;

  /// Add to (i, j). Throws OutsidePattern.
  void add(std::size_t i, std::size_t j, double value);

  /// Position of (i, j) in values(), or -1.
  std::int64_t find(std::size_t i, std::size_t j) const;

  /// y = A x
  void mult(const Vector& x, Vector& y) const;

  std::vector<double> diagonal() const;

  /// Replace row i by the unit row e_i. Throws MissingDiagonal if (i, i)
  /// is not in the pattern.
  void ident_row(std::size_t i);

  /// Row-major dense copy.
  std::vector<double> to_dense() const;

private:
  std::shared_ptr<const SparsityPattern> _pattern;
  std::vector<double> _values;
  bool _finalized = false;
};

/// Create a zero tensor of the given rank. Rank 2 needs a pattern
/// (MissingPattern otherwise), rank 1 uses `size`.
std::unique_ptr<GenericTensor>
create_tensor(int rank, std::shared_ptr<const SparsityPattern> pattern = nullptr,
              std::size_t size = 0);

enum class Method
{
  cg,
  bicgstab,
  lu
};

enum class Preconditioner
{
  none,
  jacobi
};

Method method_from_string(const std::string& name);
std::string to_string(Method m);

struct SolverOptions
{
  Method method = Method::cg;
  Preconditioner precond = Preconditioner::jacobi;
  double rtol = 1e-10;
  double atol = 1e-50;
  /// 0 means 10 N.
  int maxit = 0;
};

struct SolveResult
{
  int iterations = 0;
  double residual = 0.0;
};

/// Solve A x = b. Krylov methods start from the incoming x and stop when
/// ||b - A x|| <= max(rtol ||b||, atol). LU densifies the matrix (N <=
/// 2000) and reports one iteration.
SolveResult solve(const Matrix& A, const Vector& b, Vector& x,
                  const SolverOptions& options = {});

/// Largest dense size accepted by the LU path.
constexpr std::size_t max_lu_size = 2000;

} // namespace femkit::la
