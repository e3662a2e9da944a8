// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/dofmap.h>
#include <femkit/error.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace femkit;

namespace
{
// Build the cell-dof table of a scalar element; global indices start at
// `offset`. Returns the number of global dofs.
std::size_t build_scalar(const FiniteElement& e, const Mesh& mesh,
                         std::int32_t offset, std::vector<std::int32_t>& dofs,
                         int stride, int local_offset)
{
  const int tdim = mesh.tdim();
  const std::size_t ncells = mesh.num_cells();
  const auto& ed = e.entity_dofs();
  const auto& pts = e.dof_points();

  std::int32_t next = offset;
  for (int d = 0; d <= tdim; ++d)
  {
    const int n = ed[d].empty() ? 0 : static_cast<int>(ed[d][0].size());
    if (n == 0)
      continue;

    const auto& ref = cell::sub_entity_vertices(mesh.cell_type(), d);
    for (std::size_t c = 0; c < ncells; ++c)
    {
      // (tdim, tdim) is cell adjacency, not identity
      const std::int32_t self = static_cast<std::int32_t>(c);
      auto ents = d == tdim ? std::span<const std::int32_t>(&self, 1)
                            : mesh.connectivity(tdim, d).links(c);
      auto verts = mesh.cell_vertices(c);
      for (std::size_t le = 0; le < ents.size(); ++le)
      {
        const auto& local = ed[d][le];
        const std::int32_t base = next + ents[le] * n;
        if (n == 1 or d == tdim)
        {
          for (int k = 0; k < n; ++k)
            dofs[c * stride + local_offset + local[k]] = base + k;
          continue;
        }

        // order the entity's vertices by global index and sort dofs by
        // their barycentric weights in that order
        std::vector<int> lv = ref[le];
        std::sort(lv.begin(), lv.end(),
                  [&](int a, int b) { return verts[a] < verts[b]; });
        std::vector<std::pair<std::vector<double>, int>> keyed;
        for (int k = 0; k < n; ++k)
        {
          const auto lambda
              = cell::barycentric(mesh.cell_type(), pts.data() + local[k] * tdim);
          std::vector<double> key;
          for (int v : lv)
            key.push_back(std::round(lambda[v] * 1e9));
          keyed.push_back({key, local[k]});
        }
        std::sort(keyed.begin(), keyed.end(), std::greater<>());
        for (int k = 0; k < n; ++k)
          dofs[c * stride + local_offset + keyed[k].second] = base + k;
      }
    }
    next += static_cast<std::int32_t>(mesh.num_entities(d)) * n;
  }
  return static_cast<std::size_t>(next - offset);
}

std::size_t build(const FiniteElement& e, const Mesh& mesh, std::int32_t offset,
                  std::vector<std::int32_t>& dofs, int stride, int local_offset)
{
  if (e.is_scalar())
    return build_scalar(e, mesh, offset, dofs, stride, local_offset);
  std::size_t total = 0;
  for (int i = 0; i < e.num_sub_elements(); ++i)
  {
    total += build(e.sub_element(i), mesh, offset + static_cast<std::int32_t>(total),
                   dofs, stride, local_offset + e.sub_dof_offset(i));
  }
  return total;
}
} // namespace

//-----------------------------------------------------------------------------
DofMap::DofMap(std::shared_ptr<const FiniteElement> element, const Mesh& mesh)
    : _element(std::move(element)), _num_cells(mesh.num_cells())
{
  if (_element->tdim() != mesh.tdim())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "element cell " + cell::to_string(_element->cell_type())
                    + " does not match mesh dimension "
                    + std::to_string(mesh.tdim()));
  }
  _stride = _element->space_dim();
  _dofs.assign(_num_cells * _stride, -1);
  _global_dim = build(*_element, mesh, 0, _dofs, _stride, 0);
  _begin = 0;
  _end = static_cast<std::int32_t>(_global_dim);
}
//-----------------------------------------------------------------------------
std::span<const std::int32_t> DofMap::cell_dofs(std::size_t cell) const
{
  if (cell >= _num_cells)
  {
    throw Error(ErrorKind::IndexOutOfRange,
                "cell " + std::to_string(cell) + " out of range");
  }
  return {_dofs.data() + cell * _stride, static_cast<std::size_t>(_stride)};
}
//-----------------------------------------------------------------------------
DofMap DofMap::sub(int i) const
{
  if (_element->is_scalar())
    throw Error(ErrorKind::NotMixed, "scalar dofmap has no components");
  DofMap s;
  s._element = _element->sub_element_ptr(i);
  s._global_dim = _global_dim;
  s._num_cells = _num_cells;
  s._stride = s._element->space_dim();
  const int off = _element->sub_dof_offset(i);
  s._dofs.resize(_num_cells * s._stride);
  for (std::size_t c = 0; c < _num_cells; ++c)
    for (int k = 0; k < s._stride; ++k)
      s._dofs[c * s._stride + k] = _dofs[c * _stride + off + k];
  if (s._dofs.empty())
    s._begin = s._end = 0;
  else
  {
    auto [lo, hi] = std::minmax_element(s._dofs.begin(), s._dofs.end());
    s._begin = *lo;
    s._end = *hi + 1;
  }
  return s;
}
//-----------------------------------------------------------------------------
std::vector<double> DofMap::dof_coordinates(const Mesh& mesh) const
{
  const int gdim = mesh.gdim();
  const int tdim = mesh.tdim();
  std::vector<double> x(_global_dim * gdim, 0.0);
  const auto& pts = _element->dof_points();
  for (std::size_t c = 0; c < _num_cells; ++c)
  {
    const auto coords = mesh.cell_coordinates(c);
    auto dofs = cell_dofs(c);
    for (int i = 0; i < _stride; ++i)
    {
      const double* X = pts.data() + i * tdim;
      for (int k = 0; k < gdim; ++k)
      {
        double v = coords[k];
        for (int j = 0; j < tdim; ++j)
          v += (coords[(j + 1) * gdim + k] - coords[k]) * X[j];
        x[dofs[i] * gdim + k] = v;
      }
    }
  }
  return x;
}
//-----------------------------------------------------------------------------
std::vector<int> DofMap::dof_components() const
{
  std::vector<int> comp(_global_dim, 0);
  const auto& lc = _element->dof_components();
  for (std::size_t c = 0; c < _num_cells; ++c)
  {
    auto dofs = cell_dofs(c);
    for (int i = 0; i < _stride; ++i)
      comp[dofs[i]] = lc[i];
  }
  return comp;
}
//-----------------------------------------------------------------------------
std::vector<std::int32_t>
DofMap::boundary_dofs(const Mesh& mesh, const MeshFunction<bool>& facet_markers,
                      std::vector<double>* coordinates) const
{
  const int tdim = mesh.tdim();
  const int gdim = mesh.gdim();
  if (facet_markers.dim() != tdim - 1)
    throw Error(ErrorKind::DimensionOutOfRange, "markers must live on facets");

  const auto& fc = mesh.connectivity(tdim - 1, tdim);
  const auto& pts = _element->dof_points();
  std::vector<std::int32_t> out;
  std::vector<double> xs;
  for (std::size_t f = 0; f < facet_markers.size(); ++f)
  {
    if (!facet_markers[f])
      continue;
    for (auto c : fc.links(f))
    {
      const int lf = local_facet_index(mesh, c, f);
      const int opposite = cell::facet_opposite_vertex(mesh.cell_type(), lf);
      auto dofs = cell_dofs(c);
      std::vector<double> coords;
      for (int i = 0; i < _stride; ++i)
      {
        const auto lambda
            = cell::barycentric(mesh.cell_type(), pts.data() + i * tdim);
        if (std::abs(lambda[opposite]) < 1e-12)
        {
          out.push_back(dofs[i]);
          if (coordinates)
          {
            if (coords.empty())
              coords = mesh.cell_coordinates(c);
            const double* X = pts.data() + i * tdim;
            for (int k = 0; k < gdim; ++k)
            {
              double v = coords[k];
              for (int j = 0; j < tdim; ++j)
                v += (coords[(j + 1) * gdim + k] - coords[k]) * X[j];
              xs.push_back(v);
            }
          }
        }
      }
    }
  }

  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return out[a] < out[b]; });
  std::vector<std::int32_t> sorted;
  std::vector<double> sx;
  for (auto k : order)
  {
    if (!sorted.empty() and sorted.back() == out[k])
      continue;
    sorted.push_back(out[k]);
    if (coordinates)
      sx.insert(sx.end(), xs.begin() + k * gdim, xs.begin() + (k + 1) * gdim);
  }
  if (coordinates)
    *coordinates = std::move(sx);
  return sorted;
}
//-----------------------------------------------------------------------------
std::shared_ptr<const la::SparsityPattern>
femkit::sparsity_pattern(const Mesh& mesh, const DofMap& test,
                         const DofMap& trial, bool interior_facets)
{
  auto pattern = std::make_shared<la::SparsityPattern>(test.global_dim(),
                                                       trial.global_dim());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    pattern->insert(test.cell_dofs(c), trial.cell_dofs(c));

  if (interior_facets)
  {
    const int tdim = mesh.tdim();
    const auto& fc = mesh.connectivity(tdim - 1, tdim);
    std::vector<std::int32_t> rows, cols;
    for (std::size_t f = 0; f < fc.num_nodes(); ++f)
    {
      auto cells = fc.links(f);
      if (cells.size() != 2)
        continue;
      rows.clear();
      cols.clear();
      for (auto c : cells)
      {
        auto r = test.cell_dofs(c);
        auto s = trial.cell_dofs(c);
        rows.insert(rows.end(), r.begin(), r.end());
        cols.insert(cols.end(), s.begin(), s.end());
      }
      pattern->insert(rows, cols);
    }
  }

  if (test.global_dim() == trial.global_dim())
    pattern->insert_diagonal();
  pattern->finalize();
  return pattern;
}
//-----------------------------------------------------------------------------
