// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "compiler.h"
#include "error.h"
#include "form.h"
#include "function.h"
#include "la.h"
#include "mesh.h"
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace femkit
{

/// Values of form coefficients and named constants, by name.
struct Bindings
{
  std::map<std::string, std::shared_ptr<const GenericFunction>> functions;
  std::map<std::string, double> constants;

  Bindings& set(const std::string& name, std::shared_ptr<const GenericFunction> f)
  {
    functions[name] = std::move(f);
    return *this;
  }
  Bindings& set(const std::string& name, double value)
  {
    constants[name] = value;
    return *this;
  }
};

struct AssemblyOptions
{
  /// Compute element tensors on several threads. Insertion stays in
  /// cell order, so results equal serial assembly bit for bit.
  bool parallel = false;
  /// 0: hardware concurrency.
  int threads = 0;
  /// Markers selecting the cells of dx(i) and the facets of ds(i), dS(i).
  const MeshFunction<int>* cell_markers = nullptr;
  const MeshFunction<int>* facet_markers = nullptr;
  /// Quadrature degree used when a form is compiled here; -1 estimates.
  int quadrature_degree = -1;
};

class DirichletBC;

/// Assemble a compiled form into `A` (zeroed first, finalized at the end).
/// `spaces` holds the test and trial spaces (as many as the rank); `mesh`
/// is used for rank-0 forms. Throws UnboundCoefficient, MeshMismatch,
/// ShapeMismatch.
void assemble(la::GenericTensor& A, const CompiledForm& form,
              const std::vector<std::shared_ptr<const FunctionSpace>>& spaces,
              const Mesh& mesh, const Bindings& bindings = {},
              const AssemblyOptions& options = {});

/// Rank-generic entry: allocates a Scalar, Vector or Matrix.
std::unique_ptr<la::GenericTensor>
assemble(const CompiledForm& form,
         const std::vector<std::shared_ptr<const FunctionSpace>>& spaces,
         const Mesh& mesh, const Bindings& bindings = {},
         const AssemblyOptions& options = {});

double assemble_scalar(const fl::Form& form, const Mesh& mesh,
                       const Bindings& bindings = {},
                       const AssemblyOptions& options = {});
la::Vector assemble_vector(const fl::Form& form,
                           std::shared_ptr<const FunctionSpace> V,
                           const Bindings& bindings = {},
                           const AssemblyOptions& options = {});
/// Trial space defaults to the test space.
la::Matrix assemble_matrix(const fl::Form& form,
                           std::shared_ptr<const FunctionSpace> V,
                           std::shared_ptr<const FunctionSpace> W = nullptr,
                           const Bindings& bindings = {},
                           const AssemblyOptions& options = {});

/// Sparsity pattern of a bilinear form on the given spaces.
std::shared_ptr<const la::SparsityPattern>
create_pattern(const CompiledForm& form, const FunctionSpace& test,
               const FunctionSpace& trial);

/// Region predicate: coordinates of a point and whether it lies on the
/// boundary of the mesh.
using Region = std::function<bool(std::span<const double> x, bool on_boundary)>;

/// Whole boundary.
Region domain_boundary();

/// |a - b| <= tol
inline bool near(double a, double b, double tol = 1e-10)
{
  return a - b <= tol and b - a <= tol;
}

/// Dirichlet condition u = g on part of the boundary of a (sub)space.
class DirichletBC
{
public:
  enum class Method
  {
    /// dofs on facets whose vertices all satisfy the predicate
    topological,
    /// dofs whose own coordinates satisfy the predicate
    pointwise
  };

  DirichletBC(std::shared_ptr<const FunctionSpace> V,
              std::shared_ptr<const GenericFunction> g, Region region,
              Method method = Method::topological);

  /// Facets with markers[f] == id.
  DirichletBC(std::shared_ptr<const FunctionSpace> V,
              std::shared_ptr<const GenericFunction> g,
              MeshFunction<int> markers, int id);

  const FunctionSpace& function_space() const { return *_space; }

  /// Constrained global dofs (sorted) and their values.
  const std::vector<std::int32_t>& dofs() const;
  const std::vector<double>& values() const;

  /// Recompute values after g changed (e.g. a time parameter).
  void update();

  /// Replace rows of A by unit rows and set b[i] = g_i, or g_i - x[i]
  /// when x is given (increment form used by Newton). A or b may be null.
  void apply(la::Matrix* A, la::Vector* b,
             const std::vector<double>* x = nullptr) const;

private:
  void compute_dofs(const MeshFunction<bool>& facets);

  std::shared_ptr<const FunctionSpace> _space;
  std::shared_ptr<const GenericFunction> _g;
  std::vector<std::int32_t> _dofs;
  std::vector<double> _values;
};

/// Constrained dof -> value over several conditions (later ones win).
std::map<std::int32_t, double> collect_bcs(const std::vector<DirichletBC>& bcs);

/// Assemble a bilinear and a linear form with symmetric element-level
/// application of the conditions.
std::pair<la::Matrix, la::Vector>
assemble_system(const fl::Form& a, const fl::Form& L,
                std::shared_ptr<const FunctionSpace> V,
                const std::vector<DirichletBC>& bcs = {},
                const Bindings& bindings = {},
                const AssemblyOptions& options = {});

/// NewtonNoConvergence with the residual history.
class NewtonError : public Error
{
public:
  NewtonError(int iterations, std::vector<double> residuals);
  int iterations() const { return _iterations; }
  const std::vector<double>& residuals() const { return _residuals; }

private:
  int _iterations;
  std::vector<double> _residuals;
};

struct NewtonOptions
{
  double atol = 1e-10;
  double rtol = 1e-9;
  int maxit = 50;
};

struct SolveReport
{
  la::Method method = la::Method::cg;
  int linear_iterations = 0;
  double linear_residual = 0.0;
  /// Newton: residual norm before each step and after the last one.
  std::vector<double> residuals;
  int newton_iterations = 0;
};

/// a(v, u) = L(v) with conditions, or F(u; v) = 0 by Newton's method.
class VariationalProblem
{
public:
  /// Linear problem.
  VariationalProblem(fl::Form a, fl::Form L, std::shared_ptr<const FunctionSpace> V,
                     std::vector<DirichletBC> bcs = {});

  /// Nonlinear problem F(u; v) = 0 in the coefficient named `unknown`.
  /// The Jacobian defaults to the derivative of F.
  static VariationalProblem nonlinear(fl::Form F, const std::string& unknown,
                                      std::shared_ptr<const FunctionSpace> V,
                                      std::vector<DirichletBC> bcs = {},
                                      std::optional<fl::Form> J = std::nullopt);

  bool is_nonlinear() const { return _nonlinear; }

  Bindings bindings;
  AssemblyOptions assembly;
  /// Unset: CG for symmetric a, LU up to the dense limit, else BiCGStab.
  std::optional<la::Method> method;
  la::SolverOptions solver;
  NewtonOptions newton;

  /// Linear: solve into u. Nonlinear: u is the initial guess and is bound
  /// to the unknown. Throws NewtonNoConvergence.
  SolveReport solve(Function& u);
  Function solve();

  const fl::Form& a() const { return _a; }
  const fl::Form& L() const { return _L; }

private:
  VariationalProblem() = default;
  la::Method pick_method(std::size_t n) const;

  fl::Form _a;
  fl::Form _L;
  std::shared_ptr<const FunctionSpace> _space;
  std::vector<DirichletBC> _bcs;
  bool _nonlinear = false;
  std::string _unknown;
};

enum class NormKind
{
  L2,
  H1,
  H10,
  Hdiv
};

NormKind norm_kind_from_string(const std::string& name);

/// Norm of a function (UnsupportedKind for Hdiv).
double norm(const Function& u, NormKind kind = NormKind::L2);

/// Norm of u - u_exact, with u_exact taken in a discontinuous space two
/// degrees higher than u.
double errornorm(const Function& u, std::shared_ptr<const GenericFunction> exact,
                 NormKind kind = NormKind::L2);

} // namespace femkit
