// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/dense.h>
#include <femkit/error.h>
#include <femkit/la.h>

#include <algorithm>
#include <cmath>

using namespace femkit;
using namespace femkit::la;

//-----------------------------------------------------------------------------
SparsityPattern::SparsityPattern(std::size_t nrows, std::size_t ncols)
    : _nrows(nrows), _ncols(ncols), _rows(nrows)
{
}
//-----------------------------------------------------------------------------
void SparsityPattern::insert(std::span<const std::int32_t> rows,
                             std::span<const std::int32_t> cols)
{
  if (_finalized)
    throw Error(ErrorKind::InvalidArgument, "pattern already finalized");
  for (auto i : rows)
  {
    if (i < 0 or static_cast<std::size_t>(i) >= _nrows)
      throw Error(ErrorKind::IndexOutOfRange, "pattern row out of range");
    auto& r = _rows[i];
    for (auto j : cols)
    {
      if (j < 0 or static_cast<std::size_t>(j) >= _ncols)
        throw Error(ErrorKind::IndexOutOfRange, "pattern column out of range");
      r.push_back(j);
    }
  }
}
//-----------------------------------------------------------------------------
void SparsityPattern::insert_diagonal()
{
  const std::size_t n = std::min(_nrows, _ncols);
  for (std::size_t i = 0; i < n; ++i)
    _rows[i].push_back(static_cast<std::int32_t>(i));
}
//-----------------------------------------------------------------------------
void SparsityPattern::finalize()
{
  if (_finalized)
    return;
  _offsets.assign(1, 0);
  _columns.clear();
  for (auto& r : _rows)
  {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
    _columns.insert(_columns.end(), r.begin(), r.end());
    _offsets.push_back(static_cast<std::int32_t>(_columns.size()));
  }
  _rows.clear();
  _rows.shrink_to_fit();
  _finalized = true;
}
//-----------------------------------------------------------------------------
void Vector::zero() { std::fill(_x.begin(), _x.end(), 0.0); }
//-----------------------------------------------------------------------------
void Vector::add_local(const double* block,
                       std::span<const std::span<const std::int32_t>> indices)
{
  const auto& rows = indices[0];
  for (std::size_t i = 0; i < rows.size(); ++i)
  {
    if (rows[i] < 0 or static_cast<std::size_t>(rows[i]) >= _x.size())
      throw Error(ErrorKind::IndexOutOfRange, "vector index out of range");
    _x[rows[i]] += block[i];
  }
}
//-----------------------------------------------------------------------------
double Vector::norm() const { return std::sqrt(dot(*this)); }
//-----------------------------------------------------------------------------
double Vector::dot(const Vector& y) const
{
  double s = 0.0;
  for (std::size_t i = 0; i < _x.size(); ++i)
    s += _x[i] * y._x[i];
  return s;
}
//-----------------------------------------------------------------------------
void Vector::axpy(double a, const Vector& y)
{
  for (std::size_t i = 0; i < _x.size(); ++i)
    _x[i] += a * y._x[i];
}
//-----------------------------------------------------------------------------
double Vector::sum() const
{
  double s = 0.0;
  for (double v : _x)
    s += v;
  return s;
}
//-----------------------------------------------------------------------------
Matrix::Matrix(std::shared_ptr<const SparsityPattern> pattern)
    : _pattern(std::move(pattern))
{
  if (!_pattern or !_pattern->finalized())
    throw Error(ErrorKind::MissingPattern, "matrix needs a finalized pattern");
  _values.assign(_pattern->num_nonzeros(), 0.0);
}
//-----------------------------------------------------------------------------
void Matrix::zero()
{
  std::fill(_values.begin(), _values.end(), 0.0);
  _finalized = false;
}
//-----------------------------------------------------------------------------
std::int64_t Matrix::find(std::size_t i, std::size_t j) const
{
  if (i >= num_rows())
    return -1;
  auto row = _pattern->row(i);
  auto it = std::lower_bound(row.begin(), row.end(), static_cast<std::int32_t>(j));
  if (it == row.end() or *it != static_cast<std::int32_t>(j))
    return -1;
  return _pattern->offsets()[i] + (it - row.begin());
}
//-----------------------------------------------------------------------------
double Matrix::get(std::size_t i, std::size_t j) const
{
  const auto k = find(i, j);
  return k < 0 ? 0.0 : _values[k];
}
//-----------------------------------------------------------------------------
void Matrix::add(std::size_t i, std::size_t j, double value)
{
  const auto k = find(i, j);
  if (k < 0)
  {
    throw Error(ErrorKind::OutsidePattern, "entry (" + std::to_string(i) + ", "
                                               + std::to_string(j)
                                               + ") is not in the pattern");
  }
  _values[k] += value;
  _finalized = false;
}
//-----------------------------------------------------------------------------
void Matrix::add_local(const double* block,
                       std::span<const std::span<const std::int32_t>> indices)
{
  const auto& rows = indices[0];
  const auto& cols = indices[1];
  const auto& offsets = _pattern->offsets();
  const auto& columns = _pattern->columns();
  for (std::size_t a = 0; a < rows.size(); ++a)
  {
    const auto i = rows[a];
    if (i < 0 or static_cast<std::size_t>(i) >= num_rows())
      throw Error(ErrorKind::IndexOutOfRange, "matrix row out of range");
    const auto begin = columns.begin() + offsets[i];
    const auto end = columns.begin() + offsets[i + 1];
    for (std::size_t b = 0; b < cols.size(); ++b)
    {
      auto it = std::lower_bound(begin, end, cols[b]);
      if (it == end or *it != cols[b])
      {
        throw Error(ErrorKind::OutsidePattern,
                    "entry (" + std::to_string(i) + ", "
                        + std::to_string(cols[b]) + ") is not in the pattern");
      }
      _values[it - columns.begin()] += block[a * cols.size() + b];
    }
  }
  _finalized = false;
}
//-----------------------------------------------------------------------------
void Matrix::finalize()
{
  for (double v : _values)
    if (!std::isfinite(v))
      throw Error(ErrorKind::InvalidArgument, "non-finite matrix entry");
  _finalized = true;
}
//-----------------------------------------------------------------------------
void Matrix::mult(const Vector& x, Vector& y) const
{
  if (!_finalized)
    throw Error(ErrorKind::InvalidArgument, "matrix not finalized");
  if (x.size() != num_cols() or y.size() != num_rows())
    throw Error(ErrorKind::ShapeMismatch, "matrix-vector size mismatch");
  const auto& offsets = _pattern->offsets();
  const auto& columns = _pattern->columns();
  for (std::size_t i = 0; i < num_rows(); ++i)
  {
    double s = 0.0;
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k)
      s += _values[k] * x[columns[k]];
    y[i] = s;
  }
}
//-----------------------------------------------------------------------------
std::vector<double> Matrix::diagonal() const
{
  std::vector<double> d(num_rows(), 0.0);
  for (std::size_t i = 0; i < num_rows(); ++i)
    d[i] = get(i, i);
  return d;
}
//-----------------------------------------------------------------------------
void Matrix::ident_row(std::size_t i)
{
  const auto k = find(i, i);
  if (k < 0)
  {
    throw Error(ErrorKind::MissingDiagonal,
                "diagonal entry " + std::to_string(i) + " not in the pattern");
  }
  const auto& offsets = _pattern->offsets();
  std::fill(_values.begin() + offsets[i], _values.begin() + offsets[i + 1],
            0.0);
  _values[k] = 1.0;
}
//-----------------------------------------------------------------------------
std::vector<double> Matrix::to_dense() const
{
  const std::size_t n = num_rows(), m = num_cols();
  std::vector<double> A(n * m, 0.0);
  const auto& offsets = _pattern->offsets();
  const auto& columns = _pattern->columns();
  for (std::size_t i = 0; i < n; ++i)
    for (auto k = offsets[i]; k < offsets[i + 1]; ++k)
      A[i * m + columns[k]] = _values[k];
  return A;
}
//-----------------------------------------------------------------------------
std::unique_ptr<GenericTensor>
la::create_tensor(int rank, std::shared_ptr<const SparsityPattern> pattern,
                  std::size_t size)
{
  switch (rank)
  {
  case 0: return std::make_unique<Scalar>();
  case 1: return std::make_unique<Vector>(size);
  case 2:
    if (!pattern)
      throw Error(ErrorKind::MissingPattern, "rank-2 tensor needs a pattern");
    return std::make_unique<Matrix>(std::move(pattern));
  default:
    throw Error(ErrorKind::InvalidArgument,
                "tensor rank " + std::to_string(rank));
  }
}
//-----------------------------------------------------------------------------
la::Method la::method_from_string(const std::string& name)
{
  if (name == "cg")
    return Method::cg;
  if (name == "bicgstab")
    return Method::bicgstab;
  if (name == "lu")
    return Method::lu;
  throw Error(ErrorKind::InvalidArgument, "unknown solver '" + name + "'");
}
//-----------------------------------------------------------------------------
std::string la::to_string(Method m)
{
  switch (m)
  {
  case Method::cg: return "cg";
  case Method::bicgstab: return "bicgstab";
  default: return "lu";
  }
}
//-----------------------------------------------------------------------------
namespace
{
struct Jacobi
{
  std::vector<double> inv;
  Jacobi(const Matrix& A, Preconditioner p) : inv(A.num_rows(), 1.0)
  {
    if (p == Preconditioner::jacobi)
    {
      auto d = A.diagonal();
      for (std::size_t i = 0; i < d.size(); ++i)
        inv[i] = d[i] != 0.0 ? 1.0 / d[i] : 1.0;
    }
  }
  void apply(const Vector& r, Vector& z) const
  {
    for (std::size_t i = 0; i < inv.size(); ++i)
      z[i] = inv[i] * r[i];
  }
};

SolveResult cg(const Matrix& A, const Vector& b, Vector& x,
               const SolverOptions& opt, double tol, int maxit)
{
  const std::size_t n = b.size();
  Jacobi M(A, opt.precond);
  Vector r(n), z(n), p(n), Ap(n);
  A.mult(x, Ap);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - Ap[i];
  double rnorm = r.norm();
  if (rnorm <= tol)
    return {0, rnorm};
  M.apply(r, z);
  p = z;
  double rz = r.dot(z);
  for (int it = 1; it <= maxit; ++it)
  {
    A.mult(p, Ap);
    const double pAp = p.dot(Ap);
    if (pAp == 0.0)
      break;
    const double alpha = rz / pAp;
    x.axpy(alpha, p);
    r.axpy(-alpha, Ap);
    rnorm = r.norm();
    if (rnorm <= tol)
      return {it, rnorm};
    M.apply(r, z);
    const double rz_new = r.dot(z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i)
      p[i] = z[i] + beta * p[i];
  }
  throw Error(ErrorKind::NoConvergence,
              "cg: no convergence in " + std::to_string(maxit)
                  + " iterations, residual " + std::to_string(rnorm));
}

SolveResult bicgstab(const Matrix& A, const Vector& b, Vector& x,
                     const SolverOptions& opt, double tol, int maxit)
{
  const std::size_t n = b.size();
  Jacobi M(A, opt.precond);
  Vector r(n), r0(n), p(n), v(n), s(n), t(n), phat(n), shat(n);
  A.mult(x, v);
  for (std::size_t i = 0; i < n; ++i)
    r[i] = b[i] - v[i];
  double rnorm = r.norm();
  if (rnorm <= tol)
    return {0, rnorm};
  r0 = r;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  v.zero();
  p.zero();
  for (int it = 1; it <= maxit; ++it)
  {
    const double rho_new = r0.dot(r);
    if (rho_new == 0.0)
    {
      // restart with the current residual as shadow vector
      r0 = r;
      rho = 1.0;
      alpha = 1.0;
      omega = 1.0;
      v.zero();
      p.zero();
      continue;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i)
      p[i] = r[i] + beta * (p[i] - omega * v[i]);
    M.apply(p, phat);
    A.mult(phat, v);
    const double r0v = r0.dot(v);
    if (r0v == 0.0)
      break;
    alpha = rho / r0v;
    for (std::size_t i = 0; i < n; ++i)
      s[i] = r[i] - alpha * v[i];
    if (s.norm() <= tol)
    {
      x.axpy(alpha, phat);
      r = s;
      return {it, s.norm()};
    }
    M.apply(s, shat);
    A.mult(shat, t);
    const double tt = t.dot(t);
    omega = tt > 0.0 ? t.dot(s) / tt : 0.0;
    x.axpy(alpha, phat);
    x.axpy(omega, shat);
    for (std::size_t i = 0; i < n; ++i)
      r[i] = s[i] - omega * t[i];
    rnorm = r.norm();
    if (rnorm <= tol)
      return {it, rnorm};
    if (omega == 0.0)
      break;
  }
  throw Error(ErrorKind::NoConvergence,
              "bicgstab: no convergence in " + std::to_string(maxit)
                  + " iterations, residual " + std::to_string(rnorm));
}

SolveResult lu(const Matrix& A, const Vector& b, Vector& x)
{
  const std::size_t n = A.num_rows();
  if (n > max_lu_size)
  {
    throw Error(ErrorKind::Unsupported,
                "lu is limited to " + std::to_string(max_lu_size)
                    + " unknowns, got " + std::to_string(n));
  }
  dense::LU factor(A.to_dense(), n);
  x.array() = b.array();
  factor.solve(x.array());
  Vector Ax(n);
  A.mult(x, Ax);
  Ax.axpy(-1.0, b);
  return {1, Ax.norm()};
}
} // namespace
//-----------------------------------------------------------------------------
SolveResult la::solve(const Matrix& A, const Vector& b, Vector& x,
                      const SolverOptions& options)
{
  if (!A.finalized())
    throw Error(ErrorKind::InvalidArgument, "matrix not finalized");
  if (A.num_rows() != A.num_cols() or A.num_rows() != b.size())
    throw Error(ErrorKind::ShapeMismatch, "system dimensions do not agree");
  if (x.size() != b.size())
    x = Vector(b.size());

  const double tol = std::max(options.rtol * b.norm(), options.atol);
  const int maxit = options.maxit > 0 ? options.maxit
                                      : std::max<int>(10 * b.size(), 10);
  if (options.method == Method::lu)
    return lu(A, b, x);

  // Restart from the true residual if the recursively updated one has
  // drifted below the tolerance too early.
  SolveResult total;
  Vector r(b.size());
  for (int restart = 0; restart < 5; ++restart)
  {
    const int left = maxit - total.iterations;
    auto res = options.method == Method::cg
                   ? cg(A, b, x, options, tol, std::max(left, 1))
                   : bicgstab(A, b, x, options, tol, std::max(left, 1));
    total.iterations += res.iterations;
    A.mult(x, r);
    r.axpy(-1.0, b);
    total.residual = r.norm();
    if (total.residual <= tol)
      return total;
  }
  throw Error(ErrorKind::NoConvergence,
              "solver stagnated at residual " + std::to_string(total.residual));
}
//-----------------------------------------------------------------------------
