// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "element.h"
#include "la.h"
#include "mesh.h"
#include <memory>

namespace femkit
{

/// Local-to-global dof map.
///
/// Scalar elements number dofs entity by entity: all dofs on vertices
/// first (vertex order), then edges, faces and cell interiors. Dofs
/// inside an entity with more than one dof are ordered by their lattice
/// position relative to the entity's vertices sorted by global index, so
/// neighbouring cells agree. Vector and mixed elements number their
/// components block by block: all of component 0, then component 1, ...
class DofMap
{
public:
  DofMap(std::shared_ptr<const FiniteElement> element, const Mesh& mesh);

  std::size_t global_dim() const { return _global_dim; }
  std::size_t num_cells() const { return _num_cells; }
  const FiniteElement& element() const { return *_element; }
  std::shared_ptr<const FiniteElement> element_ptr() const { return _element; }

  /// Global dofs of a cell in local element order.
  std::span<const std::int32_t> cell_dofs(std::size_t cell) const;

  /// View of component i of a vector or mixed dofmap. Global indices are
  /// those of the parent; global_dim() stays the parent's.
  DofMap sub(int i) const;

  /// First and one-past-last global index used by this (sub) map.
  std::pair<std::int32_t, std::int32_t> range() const
  {
    return {_begin, _end};
  }

  /// Physical coordinates of every global dof (gdim each). Entries of
  /// dofs outside range() are left at zero.
  std::vector<double> dof_coordinates(const Mesh& mesh) const;

  /// Value component interpolated by each global dof.
  std::vector<int> dof_components() const;

  /// Sorted unique dofs whose reference point lies on a marked facet of
  /// an incident cell. Coordinates (gdim per dof) are returned through
  /// `coordinates` if given.
  std::vector<std::int32_t>
  boundary_dofs(const Mesh& mesh, const MeshFunction<bool>& facet_markers,
                std::vector<double>* coordinates = nullptr) const;

private:
  DofMap() = default;

  std::shared_ptr<const FiniteElement> _element;
  std::size_t _global_dim = 0;
  std::size_t _num_cells = 0;
  int _stride = 0;
  std::int32_t _begin = 0;
  std::int32_t _end = 0;
  std::vector<std::int32_t> _dofs;
};

/// Predict the matrix nonzeros of test x trial couplings on every cell
/// and, if requested, on every interior facet (both incident cells). The
/// diagonal is always included for square patterns.
std::shared_ptr<const la::SparsityPattern>
sparsity_pattern(const Mesh& mesh, const DofMap& test, const DofMap& trial,
                 bool interior_facets);

} // namespace femkit
