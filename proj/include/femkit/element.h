// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "cell.h"
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace femkit
{

enum class Family
{
  CG,
  DG,
  CR,
  Vector,
  Mixed
};

/// Parse a family name. Accepts CG/Lagrange/P, DG/Discontinuous Lagrange
/// and CR/Crouzeix-Raviart. Known but unsupported families (RT, BDM,
/// N1curl, ...) and unknown names throw UnsupportedFamily.
Family family_from_string(const std::string& name);

/// Recursive element description. Scalar families use cell and degree;
/// Vector and Mixed hold their components in `sub` (a vector element of
/// m components stores m copies of its scalar descriptor).
struct ElementDescriptor
{
  Family family = Family::CG;
  cell::Type cell = cell::Type::triangle;
  int degree = 1;
  std::vector<ElementDescriptor> sub;

  static ElementDescriptor scalar(Family family, cell::Type cell, int degree);
  static ElementDescriptor vector(const ElementDescriptor& component,
                                  int count);
  static ElementDescriptor mixed(std::vector<ElementDescriptor> components);

  bool operator==(const ElementDescriptor&) const = default;

  /// Compact text form, e.g. "Mixed(Vector(CG2,2),CG1)@triangle".
  std::string str() const;
};

/// Tabulated basis values: entry (d, p, i, c) is derivative d (0 for the
/// value, 1 + k for d/dX_k) of component c of basis function i at point p.
struct Tabulation
{
  int nderiv = 1;
  std::size_t npoints = 0;
  int ndofs = 0;
  int value_size = 1;
  std::vector<double> data;

  double operator()(int d, std::size_t p, int i, int c) const
  {
    return data[((d * npoints + p) * ndofs + i) * value_size + c];
  }
  double& operator()(int d, std::size_t p, int i, int c)
  {
    return data[((d * npoints + p) * ndofs + i) * value_size + c];
  }
};

/// Reference finite element. Lagrange (CG/DG) elements are nodal on the
/// equispaced principal lattice, CR_1 is nodal at facet midpoints. Bases
/// are built by inverting the Vandermonde matrix of an orthonormal
/// simplex basis. Vector and mixed elements concatenate their components
/// blockwise: all dofs of component 0 first, then component 1, ...
///
/// Local dof order of a scalar element: vertex dofs, then edge dofs,
/// face dofs and interior dofs, each group in local entity order. Dofs
/// inside one entity are ordered by decreasing lattice multi-index.
class FiniteElement
{
public:
  /// Highest supported polynomial degree.
  static constexpr int max_degree = 8;

  explicit FiniteElement(const ElementDescriptor& descriptor);

  const ElementDescriptor& descriptor() const { return _desc; }
  cell::Type cell_type() const { return _cell; }
  int tdim() const { return cell::topological_dimension(_cell); }

  /// Polynomial degree (maximum over components).
  int degree() const { return _degree; }
  int space_dim() const { return _space_dim; }
  int value_size() const { return _value_size; }

  /// True for CG, DG and CR.
  bool is_scalar() const { return _sub.empty(); }
  bool is_mixed() const { return _desc.family == Family::Mixed; }
  bool is_vector() const { return _desc.family == Family::Vector; }

  /// All dofs belong to the cell interior (DG, or composite of DG).
  bool discontinuous() const { return _discontinuous; }

  int num_sub_elements() const { return static_cast<int>(_sub.size()); }
  const FiniteElement& sub_element(int i) const { return *_sub.at(i); }
  std::shared_ptr<const FiniteElement> sub_element_ptr(int i) const
  {
    return _sub.at(i);
  }
  int sub_dof_offset(int i) const { return _dof_offsets.at(i); }
  int sub_value_offset(int i) const { return _value_offsets.at(i); }

  /// Reference dof points, tdim coordinates per dof.
  const std::vector<double>& dof_points() const { return _points; }

  /// Value component interpolated by each dof.
  const std::vector<int>& dof_components() const { return _components; }

  /// entity_dofs()[d][e] lists the local dofs attached to local entity e
  /// of dimension d.
  const std::vector<std::vector<std::vector<int>>>& entity_dofs() const
  {
    return _entity_dofs;
  }

  /// Basis values (nderiv = 0) or values and reference gradients
  /// (nderiv = 1) at flat reference points. Throws PointOutsideReference
  /// for points outside the closed reference cell (tolerance 1e-12).
  Tabulation tabulate(int nderiv, std::span<const double> points) const;

  /// Same as tabulate but without the reference-cell check, for points
  /// known to be inside.
  Tabulation tabulate_unchecked(int nderiv,
                                std::span<const double> points) const;

private:
  void build_scalar();
  void tabulate_into(int nderiv, std::span<const double> points,
                     Tabulation& t, int dof_offset, int value_offset) const;

  ElementDescriptor _desc;
  cell::Type _cell;
  int _degree = 0;
  int _space_dim = 0;
  int _value_size = 1;
  bool _discontinuous = false;

  std::vector<std::shared_ptr<const FiniteElement>> _sub;
  std::vector<int> _dof_offsets;
  std::vector<int> _value_offsets;

  std::vector<double> _points;
  std::vector<int> _components;
  std::vector<std::vector<std::vector<int>>> _entity_dofs;

  // scalar elements: polynomial degree of the modal basis, its
  // normalisation and the inverse Vandermonde matrix (modal x nodal)
  int _poly_degree = 0;
  std::vector<double> _scale;
  std::vector<double> _vinv;
};

/// Orthogonal (Dubiner) basis of P_q on the reference simplex and its
/// reference gradients at one point. Values go to values[j], gradients
/// to grads[j * tdim + k]; grads may be null. The functions are not
/// normalised.
void polyset(cell::Type cell, int q, const double* x, double* values,
             double* grads);

/// Dimension of P_q on a simplex of dimension tdim.
int polyset_dim(int tdim, int q);

} // namespace femkit
