// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "dofmap.h"
#include "element.h"
#include "expression.h"
#include "la.h"
#include "mesh.h"
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace femkit
{

/// Mesh, element and dofmap. A space obtained with sub() is a view into
/// its parent: its dofmap uses the parent numbering.
class FunctionSpace
{
public:
  FunctionSpace(std::shared_ptr<const Mesh> mesh,
                std::shared_ptr<const FiniteElement> element);

  FunctionSpace(std::shared_ptr<const Mesh> mesh,
                const ElementDescriptor& descriptor);

  /// Scalar space from a family name ("CG", "DG", "CR", "Lagrange", ...).
  static std::shared_ptr<FunctionSpace>
  create(std::shared_ptr<const Mesh> mesh, const std::string& family,
         int degree);

  /// Vector space with gdim components.
  static std::shared_ptr<FunctionSpace>
  create_vector(std::shared_ptr<const Mesh> mesh, const std::string& family,
                int degree);

  const Mesh& mesh() const { return *_mesh; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return _mesh; }
  const FiniteElement& element() const { return *_element; }
  std::shared_ptr<const FiniteElement> element_ptr() const { return _element; }
  const DofMap& dofmap() const { return *_dofmap; }
  std::shared_ptr<const DofMap> dofmap_ptr() const { return _dofmap; }

  /// Global dimension (of the parent for sub-space views).
  std::size_t dim() const { return _dofmap->global_dim(); }

  /// Component path from the root space; empty for a root space.
  const std::vector<int>& component() const { return _component; }
  bool is_subspace() const { return !_component.empty(); }

  /// View of sub-element i (NotMixed for scalar spaces).
  std::shared_ptr<const FunctionSpace> sub(int i) const;

  /// Sub-space path, e.g. {0} velocity, {0, 1} its y component.
  std::shared_ptr<const FunctionSpace> sub(const std::vector<int>& path) const;

  /// Independent space on the same mesh and element with its own
  /// numbering.
  std::shared_ptr<FunctionSpace> collapse() const;

  /// Physical coordinates of every dof, gdim each.
  std::vector<double> dof_coordinates() const
  {
    return _dofmap->dof_coordinates(*_mesh);
  }

private:
  FunctionSpace() = default;
  std::shared_ptr<const Mesh> _mesh;
  std::shared_ptr<const FiniteElement> _element;
  std::shared_ptr<const DofMap> _dofmap;
  std::vector<int> _component;
};

/// Values of `f` at the reference dof points of `element` in one cell,
/// one per local dof, picking the component each dof interpolates.
/// `cell_coordinates` holds the cell's vertex coordinates.
void interpolate_cell(const GenericFunction& f, const FiniteElement& element,
                      const Mesh& mesh, std::size_t cell,
                      std::span<const double> cell_coordinates,
                      std::span<double> values);

/// Discrete function u_h = sum U_i phi_i.
class Function : public GenericFunction
{
public:
  /// Zero function. The space must not be a sub-space view.
  explicit Function(std::shared_ptr<const FunctionSpace> space);
  Function(std::shared_ptr<const FunctionSpace> space, std::vector<double> x);

  const FunctionSpace& function_space() const { return *_space; }
  std::shared_ptr<const FunctionSpace> function_space_ptr() const
  {
    return _space;
  }

  std::vector<double>& vector() { return _x; }
  const std::vector<double>& vector() const { return _x; }

  int value_size() const override { return _space->element().value_size(); }

  /// Locates the containing cell by a linear scan (barycentric test at
  /// 1e-12); the lowest-index cell wins on shared facets. Throws
  /// PointNotInMesh.
  void eval(std::span<const double> x, std::span<double> values) const override;

  void eval_cell(std::span<const double> x, const Mesh& mesh, std::size_t cell,
                 std::span<double> values) const override;

  /// Index of the cell containing x, or -1.
  std::int64_t find_cell(std::span<const double> x) const;

  /// Nodal interpolation of `source` (ShapeMismatch if value sizes
  /// differ).
  void interpolate(const GenericFunction& source);

  /// Local coefficients of one cell in element order.
  void cell_coefficients(std::size_t cell, std::span<double> out) const;

  /// Copies of the components of a mixed or vector function, each on a
  /// collapsed sub-space. Throws NotMixed for scalar spaces.
  std::vector<Function> split() const;

  /// Write component functions back into this function's blocks.
  void assign_components(const std::vector<Function>& parts);

private:
  std::shared_ptr<const FunctionSpace> _space;
  std::vector<double> _x;
};

/// Nodal interpolant of `source` on V.
Function interpolate(const GenericFunction& source,
                     std::shared_ptr<const FunctionSpace> V);

/// Solver settings of project(): CG with Jacobi to relative residual 1e-13.
inline la::SolverOptions projection_options()
{
  la::SolverOptions o;
  o.rtol = 1e-13;
  return o;
}

/// L2 projection of `source` onto V (mass-matrix solve).
Function project(std::shared_ptr<const GenericFunction> source,
                 std::shared_ptr<const FunctionSpace> V,
                 const la::SolverOptions& options = projection_options());

} // namespace femkit
