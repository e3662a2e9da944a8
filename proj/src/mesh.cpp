// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/mesh.h>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

using namespace femkit;

namespace
{
using Key = std::array<std::int32_t, 3>;

struct KeyHash
{
  std::size_t operator()(const Key& k) const
  {
    std::size_t h = 0;
    for (auto v : k)
      h ^= std::hash<std::int32_t>()(v) + 0x9e3779b97f4a7c15ULL + (h << 6)
           + (h >> 2);
    return h;
  }
};

Key make_key(std::span<const std::int32_t> sorted)
{
  Key k{-1, -1, -1};
  std::copy(sorted.begin(), sorted.end(), k.begin());
  return k;
}

double det_small(const double* A, int n)
{
  switch (n)
  {
  case 1: return A[0];
  case 2: return A[0] * A[3] - A[1] * A[2];
  default:
    return A[0] * (A[4] * A[8] - A[5] * A[7])
           - A[1] * (A[3] * A[8] - A[5] * A[6])
           + A[2] * (A[3] * A[7] - A[4] * A[6]);
  }
}

// Inverse of an n x n row-major matrix (n <= 3) with known determinant.
void inverse_small(const double* A, int n, double det, double* B)
{
  switch (n)
  {
  case 1: B[0] = 1.0 / A[0]; break;
  case 2:
    B[0] = A[3] / det;
    B[1] = -A[1] / det;
    B[2] = -A[2] / det;
    B[3] = A[0] / det;
    break;
  default:
    B[0] = (A[4] * A[8] - A[5] * A[7]) / det;
    B[1] = (A[2] * A[7] - A[1] * A[8]) / det;
    B[2] = (A[1] * A[5] - A[2] * A[4]) / det;
    B[3] = (A[5] * A[6] - A[3] * A[8]) / det;
    B[4] = (A[0] * A[8] - A[2] * A[6]) / det;
    B[5] = (A[2] * A[3] - A[0] * A[5]) / det;
    B[6] = (A[3] * A[7] - A[4] * A[6]) / det;
    B[7] = (A[1] * A[6] - A[0] * A[7]) / det;
    B[8] = (A[0] * A[4] - A[1] * A[3]) / det;
  }
}

double factorial(int n)
{
  double f = 1.0;
  for (int i = 2; i <= n; ++i)
    f *= i;
  return f;
}

// Signed volume indicator (detJ) of a cell given by explicit vertices;
// returns 0 for gdim != tdim.
double signed_det(std::span<const double> x, int tdim, int gdim)
{
  if (tdim != gdim)
    return 0.0;
  std::array<double, 9> J{};
  for (int i = 0; i < gdim; ++i)
    for (int j = 0; j < tdim; ++j)
      J[i * tdim + j] = x[(j + 1) * gdim + i] - x[i];
  return det_small(J.data(), tdim);
}

std::vector<double> gather(const Mesh& mesh, std::span<const std::int32_t> verts)
{
  const int gdim = mesh.gdim();
  std::vector<double> x(verts.size() * gdim);
  for (std::size_t i = 0; i < verts.size(); ++i)
  {
    auto v = mesh.vertex(verts[i]);
    std::copy(v.begin(), v.end(), x.begin() + i * gdim);
  }
  return x;
}

} // namespace

//-----------------------------------------------------------------------------
Connectivity
Connectivity::from_rows(const std::vector<std::vector<std::int32_t>>& rows)
{
  std::vector<std::int32_t> offsets(rows.size() + 1, 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    offsets[i + 1] = offsets[i] + static_cast<std::int32_t>(rows[i].size());
  std::vector<std::int32_t> indices;
  indices.reserve(offsets.back());
  for (auto& r : rows)
    indices.insert(indices.end(), r.begin(), r.end());
  return Connectivity(std::move(offsets), std::move(indices));
}
//-----------------------------------------------------------------------------
Mesh::Mesh(std::vector<double> coordinates, std::vector<std::int32_t> cells,
           int tdim, int gdim)
    : _tdim(tdim), _gdim(gdim), _cells_count(0),
      _coordinates(std::move(coordinates)),
      _mutex(std::make_unique<std::mutex>())
{
  if (tdim < 1 or tdim > 3 or gdim < tdim or gdim > 3)
    throw Error(ErrorKind::DimensionOutOfRange,
                "invalid (tdim, gdim) = (" + std::to_string(tdim) + ", "
                    + std::to_string(gdim) + ")");
  if (_coordinates.size() % gdim != 0)
    throw Error(ErrorKind::InvalidArgument,
                "coordinate array length is not a multiple of gdim");
  const std::size_t nv = tdim + 1;
  if (cells.size() % nv != 0)
    throw Error(ErrorKind::InvalidArgument,
                "cell array length is not a multiple of tdim+1");
  _cells_count = cells.size() / nv;
  const auto n0 = static_cast<std::int64_t>(_coordinates.size() / gdim);
  for (std::size_t c = 0; c < _cells_count; ++c)
  {
    for (std::size_t i = 0; i < nv; ++i)
    {
      const auto v = cells[c * nv + i];
      if (v < 0 or v >= n0)
        throw Error(ErrorKind::IndexOutOfRange,
                    "cell " + std::to_string(c) + " references vertex "
                        + std::to_string(v) + " of " + std::to_string(n0));
      for (std::size_t j = 0; j < i; ++j)
        if (cells[c * nv + j] == v)
          throw Error(ErrorKind::InvalidArgument,
                      "cell " + std::to_string(c) + " repeats a vertex");
    }
  }

  std::vector<std::int32_t> offsets(_cells_count + 1);
  for (std::size_t c = 0; c <= _cells_count; ++c)
    offsets[c] = static_cast<std::int32_t>(c * nv);
  _conn[tdim][0]
      = std::make_unique<Connectivity>(std::move(offsets), std::move(cells));
  _num_entities.fill(-1);
  _num_entities[0] = n0;
  _num_entities[tdim] = static_cast<std::int64_t>(_cells_count);
}
//-----------------------------------------------------------------------------
Mesh::Mesh(const Mesh& other)
    : _tdim(other._tdim), _gdim(other._gdim), _cells_count(other._cells_count),
      _coordinates(other._coordinates), _mutex(std::make_unique<std::mutex>())
{
  std::lock_guard lock(*other._mutex);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (other._conn[i][j])
        _conn[i][j] = std::make_unique<Connectivity>(*other._conn[i][j]);
  _num_entities = other._num_entities;
}
//-----------------------------------------------------------------------------
Mesh::Mesh(Mesh&& other) noexcept
    : _tdim(other._tdim), _gdim(other._gdim), _cells_count(other._cells_count),
      _coordinates(std::move(other._coordinates)),
      _conn(std::move(other._conn)), _num_entities(other._num_entities),
      _mutex(std::move(other._mutex))
{
}
//-----------------------------------------------------------------------------
Mesh& Mesh::operator=(const Mesh& other)
{
  if (this != &other)
  {
    Mesh tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}
//-----------------------------------------------------------------------------
Mesh& Mesh::operator=(Mesh&& other) noexcept
{
  _tdim = other._tdim;
  _gdim = other._gdim;
  _cells_count = other._cells_count;
  _coordinates = std::move(other._coordinates);
  _conn = std::move(other._conn);
  _num_entities = other._num_entities;
  _mutex = std::move(other._mutex);
  return *this;
}
//-----------------------------------------------------------------------------
std::size_t Mesh::num_entities(int d) const
{
  if (d < 0 or d > _tdim)
    throw Error(ErrorKind::DimensionOutOfRange,
                "entity dimension " + std::to_string(d));
  std::lock_guard lock(*_mutex);
  if (_num_entities[d] < 0)
    compute_entities(d);
  return static_cast<std::size_t>(_num_entities[d]);
}
//-----------------------------------------------------------------------------
std::span<const std::int32_t> Mesh::cell_vertices(std::size_t c) const
{
  if (c >= _cells_count)
    throw Error(ErrorKind::IndexOutOfRange, "cell " + std::to_string(c));
  return _conn[_tdim][0]->links(c);
}
//-----------------------------------------------------------------------------
std::vector<std::int32_t> Mesh::cells() const
{
  return _conn[_tdim][0]->indices();
}
//-----------------------------------------------------------------------------
std::vector<double> Mesh::cell_coordinates(std::size_t c) const
{
  return gather(*this, cell_vertices(c));
}
//-----------------------------------------------------------------------------
const Connectivity& Mesh::connectivity(int d0, int d1) const
{
  if (d0 < 0 or d0 > _tdim or d1 < 0 or d1 > _tdim)
    throw Error(ErrorKind::DimensionOutOfRange,
                "connectivity (" + std::to_string(d0) + ", "
                    + std::to_string(d1) + ") for tdim "
                    + std::to_string(_tdim));
  std::lock_guard lock(*_mutex);
  return get(d0, d1);
}
//-----------------------------------------------------------------------------
bool Mesh::has_connectivity(int d0, int d1) const
{
  if (d0 < 0 or d0 > _tdim or d1 < 0 or d1 > _tdim)
    return false;
  std::lock_guard lock(*_mutex);
  return static_cast<bool>(_conn[d0][d1]);
}
//-----------------------------------------------------------------------------
const Connectivity& Mesh::get(int d0, int d1) const
{
  if (!_conn[d0][d1])
    compute(d0, d1);
  return *_conn[d0][d1];
}
//-----------------------------------------------------------------------------
void Mesh::compute(int d0, int d1) const
{
  if (_conn[d0][d1])
    return;
  if (d1 == 0 and d0 > 0)
    compute_entities(d0);
  else if (d0 == _tdim and d1 > 0 and d1 < _tdim)
    compute_entities(d1);
  else if (d0 == d1)
    compute_vertex_sharing(d0);
  else if (d0 > d1)
    compute_intersection(d0, d1);
  else
    compute_transpose(d0, d1);
}
//-----------------------------------------------------------------------------
void Mesh::compute_entities(int d) const
{
  if (d == 0 or d == _tdim or _conn[d][0])
    return;

  const auto type = cell_type();
  const auto& table = cell::sub_entity_vertices(type, d);
  const auto& cv = *_conn[_tdim][0];
  const std::size_t nsub = table.size();

  std::unordered_map<Key, std::int32_t, KeyHash> index;
  index.reserve(_cells_count * nsub);
  std::vector<std::int32_t> entity_vertices;
  std::vector<std::int32_t> cell_entities(_cells_count * nsub);

  std::vector<std::int32_t> verts;
  for (std::size_t c = 0; c < _cells_count; ++c)
  {
    auto cvs = cv.links(c);
    for (std::size_t k = 0; k < nsub; ++k)
    {
      verts.clear();
      for (int lv : table[k])
        verts.push_back(cvs[lv]);
      std::sort(verts.begin(), verts.end());
      auto [it, inserted] = index.try_emplace(
          make_key(verts), static_cast<std::int32_t>(index.size()));
      if (inserted)
        entity_vertices.insert(entity_vertices.end(), verts.begin(),
                               verts.end());
      cell_entities[c * nsub + k] = it->second;
    }
  }

  const std::size_t n = index.size();
  std::vector<std::int32_t> off(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    off[i] = static_cast<std::int32_t>(i * (d + 1));
  _conn[d][0] = std::make_unique<Connectivity>(std::move(off),
                                               std::move(entity_vertices));

  std::vector<std::int32_t> coff(_cells_count + 1);
  for (std::size_t c = 0; c <= _cells_count; ++c)
    coff[c] = static_cast<std::int32_t>(c * nsub);
  _conn[_tdim][d] = std::make_unique<Connectivity>(std::move(coff),
                                                   std::move(cell_entities));
  _num_entities[d] = static_cast<std::int64_t>(n);
}
//-----------------------------------------------------------------------------
void Mesh::compute_transpose(int d0, int d1) const
{
  // d0 < d1: transpose of (d1, d0)
  const auto& c10 = get(d1, d0);
  if (_num_entities[d0] < 0)
    compute_entities(d0);
  const auto n0 = static_cast<std::size_t>(_num_entities[d0]);
  std::vector<std::int32_t> count(n0 + 1, 0);
  for (auto i : c10.indices())
    ++count[i + 1];
  std::partial_sum(count.begin(), count.end(), count.begin());
  std::vector<std::int32_t> indices(count.back());
  std::vector<std::int32_t> pos(count.begin(), count.end() - 1);
  for (std::size_t j = 0; j < c10.num_nodes(); ++j)
    for (auto i : c10.links(j))
      indices[pos[i]++] = static_cast<std::int32_t>(j);
  _conn[d0][d1]
      = std::make_unique<Connectivity>(std::move(count), std::move(indices));
}
//-----------------------------------------------------------------------------
void Mesh::compute_intersection(int d0, int d1) const
{
  // tdim > d0 > d1 > 0: sub-entities of d0-entities, matched through
  // the vertices they share.
  const auto& e0 = get(d0, 0);
  const auto& e1 = get(d1, 0);
  const auto& v1 = get(0, d1);
  const auto& table = cell::sub_entity_vertices(cell::simplex(d0), d1);

  std::vector<std::vector<std::int32_t>> rows(e0.num_nodes());
  std::vector<std::int32_t> verts;
  for (std::size_t e = 0; e < e0.num_nodes(); ++e)
  {
    auto ev = e0.links(e);
    for (auto& sub : table)
    {
      verts.clear();
      for (int lv : sub)
        verts.push_back(ev[lv]);
      std::sort(verts.begin(), verts.end());
      std::int32_t found = -1;
      for (auto cand : v1.links(verts[0]))
      {
        auto cv = e1.links(cand);
        if (std::equal(cv.begin(), cv.end(), verts.begin(), verts.end()))
        {
          found = cand;
          break;
        }
      }
      rows[e].push_back(found);
    }
  }
  _conn[d0][d1] = std::make_unique<Connectivity>(Connectivity::from_rows(rows));
}
//-----------------------------------------------------------------------------
void Mesh::compute_vertex_sharing(int d) const
{
  // (d, d): entities sharing at least one vertex. For d = 0 the
  // relation goes through cells, which for simplices equals sharing
  // an edge.
  const auto& a = (d == 0) ? get(0, _tdim) : get(d, 0);
  const auto& b = (d == 0) ? get(_tdim, 0) : get(0, d);
  std::vector<std::vector<std::int32_t>> rows(a.num_nodes());
  for (std::size_t e = 0; e < a.num_nodes(); ++e)
  {
    auto& r = rows[e];
    for (auto m : a.links(e))
      for (auto n : b.links(m))
        if (n != static_cast<std::int32_t>(e))
          r.push_back(n);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  _conn[d][d] = std::make_unique<Connectivity>(Connectivity::from_rows(rows));
}
//-----------------------------------------------------------------------------
MeshEntity::MeshEntity(const Mesh& mesh, int dim, std::size_t index)
    : _mesh(&mesh), _dim(dim), _index(index)
{
  if (index >= mesh.num_entities(dim))
    throw Error(ErrorKind::IndexOutOfRange,
                "entity (" + std::to_string(dim) + ", " + std::to_string(index)
                    + ")");
}
//-----------------------------------------------------------------------------
std::vector<double> MeshEntity::midpoint() const
{
  const int gdim = _mesh->gdim();
  std::vector<double> m(gdim, 0.0);
  if (_dim == 0)
  {
    auto v = _mesh->vertex(_index);
    return {v.begin(), v.end()};
  }
  auto verts = entities(0);
  for (auto v : verts)
  {
    auto x = _mesh->vertex(v);
    for (int i = 0; i < gdim; ++i)
      m[i] += x[i];
  }
  for (auto& x : m)
    x /= static_cast<double>(verts.size());
  return m;
}
//-----------------------------------------------------------------------------
CellGeometry femkit::cell_geometry(std::span<const double> x, int tdim,
                                   int gdim)
{
  CellGeometry g;
  g.gdim = gdim;
  g.tdim = tdim;
  for (int i = 0; i < gdim; ++i)
    g.x0[i] = x[i];
  for (int i = 0; i < gdim; ++i)
    for (int j = 0; j < tdim; ++j)
      g.J[i * tdim + j] = x[(j + 1) * gdim + i] - x[i];

  double h2 = 0.0;
  for (int a = 0; a <= tdim; ++a)
    for (int b = a + 1; b <= tdim; ++b)
    {
      double s = 0.0;
      for (int i = 0; i < gdim; ++i)
      {
        const double d = x[a * gdim + i] - x[b * gdim + i];
        s += d * d;
      }
      h2 = std::max(h2, s);
    }
  g.h = std::sqrt(h2);

  if (tdim == gdim)
  {
    g.detJ = det_small(g.J.data(), tdim);
    if (!(std::abs(g.detJ) > 1e-14 * std::pow(g.h, tdim)))
      throw Error(ErrorKind::DegenerateCell, "cell has zero volume");
    inverse_small(g.J.data(), tdim, g.detJ, g.K.data());
  }
  else
  {
    // Pseudo-inverse K = (J^T J)^{-1} J^T
    std::array<double, 9> G{}, Ginv{};
    for (int a = 0; a < tdim; ++a)
      for (int b = 0; b < tdim; ++b)
      {
        double s = 0.0;
        for (int i = 0; i < gdim; ++i)
          s += g.J[i * tdim + a] * g.J[i * tdim + b];
        G[a * tdim + b] = s;
      }
    const double detG = det_small(G.data(), tdim);
    g.detJ = std::sqrt(std::max(detG, 0.0));
    if (!(g.detJ > 1e-14 * std::pow(g.h, tdim)))
      throw Error(ErrorKind::DegenerateCell, "cell has zero volume");
    inverse_small(G.data(), tdim, detG, Ginv.data());
    for (int a = 0; a < tdim; ++a)
      for (int i = 0; i < gdim; ++i)
      {
        double s = 0.0;
        for (int b = 0; b < tdim; ++b)
          s += Ginv[a * tdim + b] * g.J[i * tdim + b];
        g.K[a * gdim + i] = s;
      }
  }
  g.volume = std::abs(g.detJ) / factorial(tdim);
  return g;
}
//-----------------------------------------------------------------------------
CellGeometry femkit::cell_geometry(const Mesh& mesh, std::size_t cell)
{
  auto x = mesh.cell_coordinates(cell);
  return cell_geometry(x, mesh.tdim(), mesh.gdim());
}
//-----------------------------------------------------------------------------
FacetGeometry femkit::facet_geometry(std::span<const double> x, int tdim,
                                     int gdim, int local_facet)
{
  const auto type = cell::simplex(tdim);
  const auto& fv = cell::sub_entity_vertices(type, tdim - 1).at(local_facet);
  const int opp = cell::facet_opposite_vertex(type, local_facet);

  FacetGeometry fg;
  const double* q0 = x.data() + fv[0] * gdim;

  // Orthonormal basis of the facet tangent space
  std::vector<std::array<double, 3>> t;
  std::array<double, 9> T{};
  const int nt = tdim - 1;
  for (int k = 1; k <= nt; ++k)
  {
    std::array<double, 3> e{};
    for (int i = 0; i < gdim; ++i)
    {
      e[i] = x[fv[k] * gdim + i] - q0[i];
      T[i * 3 + (k - 1)] = e[i];
    }
    for (auto& b : t)
    {
      double p = 0.0;
      for (int i = 0; i < gdim; ++i)
        p += e[i] * b[i];
      for (int i = 0; i < gdim; ++i)
        e[i] -= p * b[i];
    }
    double n = 0.0;
    for (int i = 0; i < gdim; ++i)
      n += e[i] * e[i];
    n = std::sqrt(n);
    for (int i = 0; i < gdim; ++i)
      e[i] /= n;
    t.push_back(e);
  }

  if (nt == 0)
    fg.area = 1.0;
  else
  {
    std::array<double, 9> G{};
    for (int a = 0; a < nt; ++a)
      for (int b = 0; b < nt; ++b)
      {
        double s = 0.0;
        for (int i = 0; i < gdim; ++i)
          s += T[i * 3 + a] * T[i * 3 + b];
        G[a * nt + b] = s;
      }
    fg.area = std::sqrt(std::abs(det_small(G.data(), nt))) / factorial(nt);
  }

  std::array<double, 3> w{};
  for (int i = 0; i < gdim; ++i)
    w[i] = x[opp * gdim + i] - q0[i];
  for (auto& b : t)
  {
    double p = 0.0;
    for (int i = 0; i < gdim; ++i)
      p += w[i] * b[i];
    for (int i = 0; i < gdim; ++i)
      w[i] -= p * b[i];
  }
  double n = 0.0;
  for (int i = 0; i < gdim; ++i)
    n += w[i] * w[i];
  n = std::sqrt(n);
  if (!(n > 0.0))
    throw Error(ErrorKind::DegenerateCell, "facet normal undefined");
  for (int i = 0; i < gdim; ++i)
    fg.normal[i] = -w[i] / n;
  return fg;
}
//-----------------------------------------------------------------------------
int femkit::local_facet_index(const Mesh& mesh, std::size_t cell,
                              std::size_t facet)
{
  const int tdim = mesh.tdim();
  if (tdim == 1)
  {
    auto cv = mesh.cell_vertices(cell);
    for (int k = 0; k < 2; ++k)
      if (cv[k] == static_cast<std::int32_t>(facet))
        return k;
  }
  else
  {
    auto cf = mesh.connectivity(tdim, tdim - 1).links(cell);
    for (std::size_t k = 0; k < cf.size(); ++k)
      if (cf[k] == static_cast<std::int32_t>(facet))
        return static_cast<int>(k);
  }
  throw Error(ErrorKind::IndexOutOfRange,
              "facet " + std::to_string(facet) + " is not a facet of cell "
                  + std::to_string(cell));
}
//-----------------------------------------------------------------------------
FacetGeometry femkit::facet_geometry(const Mesh& mesh, std::size_t facet)
{
  const int tdim = mesh.tdim();
  auto fc = mesh.connectivity(tdim - 1, tdim).links(facet);
  const auto plus = *std::min_element(fc.begin(), fc.end());
  const int lf = local_facet_index(mesh, plus, facet);
  return facet_geometry(mesh.cell_coordinates(plus), tdim, mesh.gdim(), lf);
}
//-----------------------------------------------------------------------------
Mesh femkit::unit_interval(std::size_t n)
{
  if (n < 1)
    throw Error(ErrorKind::InvalidDivisions, "interval divisions must be >= 1");
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i <= n; ++i)
    x[i] = static_cast<double>(i) / n;
  std::vector<std::int32_t> c(2 * n);
  for (std::size_t i = 0; i < n; ++i)
  {
    c[2 * i] = static_cast<std::int32_t>(i);
    c[2 * i + 1] = static_cast<std::int32_t>(i + 1);
  }
  return Mesh(std::move(x), std::move(c), 1, 1);
}
//-----------------------------------------------------------------------------
Mesh femkit::unit_square(std::size_t nx, std::size_t ny)
{
  if (nx < 1 or ny < 1)
    throw Error(ErrorKind::InvalidDivisions, "square divisions must be >= 1");
  std::vector<double> x;
  x.reserve(2 * (nx + 1) * (ny + 1));
  for (std::size_t j = 0; j <= ny; ++j)
    for (std::size_t i = 0; i <= nx; ++i)
    {
      x.push_back(static_cast<double>(i) / nx);
      x.push_back(static_cast<double>(j) / ny);
    }
  auto v = [nx](std::size_t i, std::size_t j)
  { return static_cast<std::int32_t>(j * (nx + 1) + i); };
  std::vector<std::int32_t> c;
  c.reserve(6 * nx * ny);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i)
    {
      const auto v0 = v(i, j), v1 = v(i + 1, j), v2 = v(i, j + 1),
                 v3 = v(i + 1, j + 1);
      c.insert(c.end(), {v0, v1, v3, v0, v2, v3});
    }
  return Mesh(std::move(x), std::move(c), 2, 2);
}
//-----------------------------------------------------------------------------
Mesh femkit::unit_cube(std::size_t nx, std::size_t ny, std::size_t nz)
{
  if (nx < 1 or ny < 1 or nz < 1)
    throw Error(ErrorKind::InvalidDivisions, "cube divisions must be >= 1");
  std::vector<double> x;
  x.reserve(3 * (nx + 1) * (ny + 1) * (nz + 1));
  for (std::size_t k = 0; k <= nz; ++k)
    for (std::size_t j = 0; j <= ny; ++j)
      for (std::size_t i = 0; i <= nx; ++i)
      {
        x.push_back(static_cast<double>(i) / nx);
        x.push_back(static_cast<double>(j) / ny);
        x.push_back(static_cast<double>(k) / nz);
      }
  auto v = [nx, ny](std::size_t i, std::size_t j, std::size_t k)
  { return static_cast<std::int32_t>((k * (ny + 1) + j) * (nx + 1) + i); };

  // Six tetrahedra around the main diagonal, one per axis ordering
  constexpr std::array<std::array<int, 3>, 6> orders
      = {{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  std::vector<std::int32_t> c;
  c.reserve(24 * nx * ny * nz);
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i)
        for (auto& ord : orders)
        {
          std::array<std::size_t, 3> p{i, j, k};
          c.push_back(v(p[0], p[1], p[2]));
          for (int axis : ord)
          {
            ++p[axis];
            c.push_back(v(p[0], p[1], p[2]));
          }
        }
  return Mesh(std::move(x), std::move(c), 3, 3);
}
//-----------------------------------------------------------------------------
Mesh femkit::generate_unit_mesh(UnitShape shape,
                                std::span<const std::size_t> divisions)
{
  const std::size_t need = shape == UnitShape::interval ? 1
                           : shape == UnitShape::square ? 2
                                                        : 3;
  if (divisions.size() != need)
    throw Error(ErrorKind::InvalidDivisions,
                "expected " + std::to_string(need) + " division counts");
  switch (shape)
  {
  case UnitShape::interval: return unit_interval(divisions[0]);
  case UnitShape::square: return unit_square(divisions[0], divisions[1]);
  default: return unit_cube(divisions[0], divisions[1], divisions[2]);
  }
}
//-----------------------------------------------------------------------------
namespace
{
// Append child cells keeping the orientation of the parent when tdim ==
// gdim.
void push_oriented(std::vector<std::int32_t>& cells,
                   std::vector<std::int32_t> child, double parent_det,
                   const std::vector<double>& x, int tdim, int gdim)
{
  if (tdim == gdim and tdim > 1)
  {
    std::vector<double> cx((tdim + 1) * gdim);
    for (int a = 0; a <= tdim; ++a)
      for (int i = 0; i < gdim; ++i)
        cx[a * gdim + i] = x[child[a] * gdim + i];
    const double d = signed_det(cx, tdim, gdim);
    if ((d > 0) != (parent_det > 0))
      std::swap(child[0], child[1]);
  }
  cells.insert(cells.end(), child.begin(), child.end());
}

std::vector<double> with_midpoints(const Mesh& mesh, const Connectivity& e0,
                                   const std::vector<std::int32_t>& edges)
{
  const int gdim = mesh.gdim();
  auto c = mesh.coordinates();
  std::vector<double> x(c.begin(), c.end());
  for (auto e : edges)
  {
    auto v = e0.links(e);
    for (int i = 0; i < gdim; ++i)
      x.push_back(0.5 * (c[v[0] * gdim + i] + c[v[1] * gdim + i]));
  }
  return x;
}

Mesh refine_uniform(const Mesh& mesh)
{
  const int tdim = mesh.tdim();
  const int gdim = mesh.gdim();
  const auto n0 = static_cast<std::int32_t>(mesh.num_vertices());
  const std::size_t nc = mesh.num_cells();
  std::vector<std::int32_t> cells;

  if (tdim == 1)
  {
    auto c = mesh.coordinates();
    std::vector<double> x(c.begin(), c.end());
    for (std::size_t k = 0; k < nc; ++k)
    {
      auto v = mesh.cell_vertices(k);
      for (int i = 0; i < gdim; ++i)
        x.push_back(0.5 * (c[v[0] * gdim + i] + c[v[1] * gdim + i]));
      const auto m = n0 + static_cast<std::int32_t>(k);
      cells.insert(cells.end(), {v[0], m, m, v[1]});
    }
    return Mesh(std::move(x), std::move(cells), 1, gdim);
  }

  const auto& ce = mesh.connectivity(tdim, 1);
  const auto& e0 = mesh.connectivity(1, 0);
  std::vector<std::int32_t> all(e0.num_nodes());
  std::iota(all.begin(), all.end(), 0);
  auto x = with_midpoints(mesh, e0, all);
  const auto& etable = cell::sub_entity_vertices(mesh.cell_type(), 1);

  for (std::size_t k = 0; k < nc; ++k)
  {
    auto v = mesh.cell_vertices(k);
    auto e = ce.links(k);
    auto mid = [&](int a, int b)
    {
      for (std::size_t le = 0; le < etable.size(); ++le)
        if ((etable[le][0] == a and etable[le][1] == b)
            or (etable[le][0] == b and etable[le][1] == a))
          return n0 + e[le];
      return -1;
    };
    const double pdet = signed_det(mesh.cell_coordinates(k), tdim, gdim);
    if (tdim == 2)
    {
      const auto m0 = mid(1, 2), m1 = mid(0, 2), m2 = mid(0, 1);
      push_oriented(cells, {v[0], m2, m1}, pdet, x, tdim, gdim);
      push_oriented(cells, {m2, v[1], m0}, pdet, x, tdim, gdim);
      push_oriented(cells, {m1, m0, v[2]}, pdet, x, tdim, gdim);
      push_oriented(cells, {m0, m1, m2}, pdet, x, tdim, gdim);
    }
    else
    {
      for (int a = 0; a < 4; ++a)
      {
        std::vector<std::int32_t> child(4);
        for (int b = 0; b < 4; ++b)
          child[b] = (a == b) ? v[a] : mid(a, b);
        push_oriented(cells, child, pdet, x, tdim, gdim);
      }
      // Inner octahedron: split along the shortest of the three
      // diagonals joining midpoints of opposite edges.
      constexpr std::array<std::array<int, 4>, 3> pairs
          = {{{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}}};
      int best = 0;
      double best_len = std::numeric_limits<double>::max();
      for (int p = 0; p < 3; ++p)
      {
        const auto ma = mid(pairs[p][0], pairs[p][1]);
        const auto mb = mid(pairs[p][2], pairs[p][3]);
        double s = 0.0;
        for (int i = 0; i < gdim; ++i)
        {
          const double d = x[ma * gdim + i] - x[mb * gdim + i];
          s += d * d;
        }
        if (s < best_len - 1e-14 * s)
        {
          best_len = s;
          best = p;
        }
      }
      const auto& pr = pairs[best];
      const auto da = mid(pr[0], pr[1]);
      const auto db = mid(pr[2], pr[3]);
      // Remaining four edges form a cycle: consecutive edges share a vertex
      std::vector<std::array<int, 2>> ring;
      for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
        {
          const bool is_a = (a == pr[0] and b == pr[1]);
          const bool is_b = (a == pr[2] and b == pr[3]);
          if (!is_a and !is_b)
            ring.push_back({a, b});
        }
      std::vector<std::array<int, 2>> cycle{ring[0]};
      std::vector<bool> used(4, false);
      used[0] = true;
      while (cycle.size() < 4)
      {
        auto last = cycle.back();
        for (int r = 0; r < 4; ++r)
        {
          if (used[r])
            continue;
          const auto& cand = ring[r];
          if (cand[0] == last[0] or cand[0] == last[1] or cand[1] == last[0]
              or cand[1] == last[1])
          {
            used[r] = true;
            cycle.push_back(cand);
            break;
          }
        }
      }
      for (int r = 0; r < 4; ++r)
      {
        const auto c0 = mid(cycle[r][0], cycle[r][1]);
        const auto c1 = mid(cycle[(r + 1) % 4][0], cycle[(r + 1) % 4][1]);
        push_oriented(cells, {da, db, c0, c1}, pdet, x, tdim, gdim);
      }
    }
  }
  return Mesh(std::move(x), std::move(cells), tdim, gdim);
}

Mesh refine_marked(const Mesh& mesh, const MeshFunction<bool>& markers)
{
  const int tdim = mesh.tdim();
  const int gdim = mesh.gdim();
  if (markers.dim() != tdim or markers.size() != mesh.num_cells())
    throw Error(ErrorKind::InvalidArgument, "markers must live on cells");
  if (tdim > 2)
    throw Error(ErrorKind::Unsupported,
                "marked refinement is only available for tdim <= 2");

  bool any = false;
  for (std::size_t c = 0; c < markers.size(); ++c)
    any = any or markers[c];
  if (!any)
    return Mesh(mesh);

  if (tdim == 1)
  {
    auto c = mesh.coordinates();
    std::vector<double> x(c.begin(), c.end());
    std::vector<std::int32_t> cells;
    auto next = static_cast<std::int32_t>(mesh.num_vertices());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k)
    {
      auto v = mesh.cell_vertices(k);
      if (!markers[k])
      {
        cells.insert(cells.end(), {v[0], v[1]});
        continue;
      }
      for (int i = 0; i < gdim; ++i)
        x.push_back(0.5 * (c[v[0] * gdim + i] + c[v[1] * gdim + i]));
      cells.insert(cells.end(), {v[0], next, next, v[1]});
      ++next;
    }
    return Mesh(std::move(x), std::move(cells), 1, gdim);
  }

  const auto& ce = mesh.connectivity(2, 1);
  const auto& e0 = mesh.connectivity(1, 0);
  const auto& ec = mesh.connectivity(1, 2);
  const std::size_t nc = mesh.num_cells();
  const std::size_t ne = e0.num_nodes();
  auto coords = mesh.coordinates();

  auto edge_length2 = [&](std::int32_t e)
  {
    auto v = e0.links(e);
    double s = 0.0;
    for (int i = 0; i < gdim; ++i)
    {
      const double d = coords[v[0] * gdim + i] - coords[v[1] * gdim + i];
      s += d * d;
    }
    return s;
  };

  // Longest local edge of each cell; ties go to the smaller edge index.
  std::vector<int> longest(nc);
  for (std::size_t c = 0; c < nc; ++c)
  {
    auto e = ce.links(c);
    int best = 0;
    for (int k = 1; k < 3; ++k)
    {
      const double lk = edge_length2(e[k]), lb = edge_length2(e[best]);
      if (lk > lb or (lk == lb and e[k] < e[best]))
        best = k;
    }
    longest[c] = best;
  }

  std::vector<bool> marked(ne, false);
  std::vector<std::size_t> work;
  for (std::size_t c = 0; c < nc; ++c)
    if (markers[c])
    {
      const auto e = ce.links(c)[longest[c]];
      if (!marked[e])
      {
        marked[e] = true;
        work.push_back(e);
      }
    }
  // Propagate: a cell with any marked edge must bisect its longest edge.
  while (!work.empty())
  {
    const auto e = work.back();
    work.pop_back();
    for (auto c : ec.links(e))
    {
      const auto le = ce.links(c)[longest[c]];
      if (!marked[le])
      {
        marked[le] = true;
        work.push_back(le);
      }
    }
  }

  std::vector<std::int32_t> edge_list;
  std::vector<std::int32_t> midpoint(ne, -1);
  const auto n0 = static_cast<std::int32_t>(mesh.num_vertices());
  for (std::size_t e = 0; e < ne; ++e)
    if (marked[e])
    {
      midpoint[e] = n0 + static_cast<std::int32_t>(edge_list.size());
      edge_list.push_back(static_cast<std::int32_t>(e));
    }
  auto x = with_midpoints(mesh, e0, edge_list);

  std::vector<std::int32_t> cells;
  for (std::size_t c = 0; c < nc; ++c)
  {
    auto v = mesh.cell_vertices(c);
    auto e = ce.links(c);
    const double pdet = signed_det(mesh.cell_coordinates(c), 2, gdim);
    const int L = longest[c];
    if (!marked[e[L]])
    {
      cells.insert(cells.end(), v.begin(), v.end());
      continue;
    }
    // Edge k is opposite local vertex k.
    const int ia = L, ib = (L + 1) % 3, ic = (L + 2) % 3;
    const auto a = v[ia], b = v[ib], cc = v[ic];
    const auto m = midpoint[e[L]];
    const auto p = midpoint[e[ic]]; // on edge (a, b)
    const auto r = midpoint[e[ib]]; // on edge (a, c)
    if (p < 0)
      push_oriented(cells, {a, b, m}, pdet, x, 2, gdim);
    else
    {
      push_oriented(cells, {a, p, m}, pdet, x, 2, gdim);
      push_oriented(cells, {p, b, m}, pdet, x, 2, gdim);
    }
    if (r < 0)
      push_oriented(cells, {a, m, cc}, pdet, x, 2, gdim);
    else
    {
      push_oriented(cells, {a, m, r}, pdet, x, 2, gdim);
      push_oriented(cells, {r, m, cc}, pdet, x, 2, gdim);
    }
  }
  return Mesh(std::move(x), std::move(cells), 2, gdim);
}
} // namespace
//-----------------------------------------------------------------------------
Mesh femkit::refine(const Mesh& mesh,
                    const std::optional<MeshFunction<bool>>& markers)
{
  if (markers)
    return refine_marked(mesh, *markers);
  return refine_uniform(mesh);
}
//-----------------------------------------------------------------------------
MeshFunction<bool> femkit::exterior_facets(const Mesh& mesh)
{
  const int tdim = mesh.tdim();
  const auto& fc = mesh.connectivity(tdim - 1, tdim);
  MeshFunction<bool> ext(tdim - 1, std::vector<bool>(fc.num_nodes(), false));
  for (std::size_t f = 0; f < fc.num_nodes(); ++f)
  {
    const auto n = fc.links(f).size();
    if (n > 2)
      throw Error(ErrorKind::NonManifold,
                  "facet " + std::to_string(f) + " has " + std::to_string(n)
                      + " incident cells");
    ext[f] = (n == 1);
  }
  return ext;
}
//-----------------------------------------------------------------------------
void femkit::smooth(Mesh& mesh, int iterations)
{
  if (iterations <= 0)
    return;
  const int tdim = mesh.tdim();
  const int gdim = mesh.gdim();
  const std::size_t nv = mesh.num_vertices();

  std::vector<bool> on_boundary(nv, false);
  auto ext = exterior_facets(mesh);
  for (std::size_t f = 0; f < ext.size(); ++f)
  {
    if (!ext[f])
      continue;
    if (tdim == 1)
      on_boundary[f] = true;
    else
      for (auto v : mesh.connectivity(tdim - 1, 0).links(f))
        on_boundary[v] = true;
  }

  const auto& vv = mesh.connectivity(0, 0);
  const auto& vc = mesh.connectivity(0, tdim);
  auto x = mesh.coordinates();

  auto det_of = [&](std::size_t c)
  {
    auto cx = gather(mesh, mesh.cell_vertices(c));
    return signed_det(cx, tdim, gdim);
  };

  for (int it = 0; it < iterations; ++it)
  {
    for (std::size_t v = 0; v < nv; ++v)
    {
      if (on_boundary[v])
        continue;
      auto nbrs = vv.links(v);
      if (nbrs.empty())
        continue;
      std::array<double, 3> old{}, avg{};
      for (int i = 0; i < gdim; ++i)
        old[i] = x[v * gdim + i];
      for (auto w : nbrs)
        for (int i = 0; i < gdim; ++i)
          avg[i] += x[w * gdim + i];
      for (int i = 0; i < gdim; ++i)
        avg[i] /= static_cast<double>(nbrs.size());

      std::vector<double> before;
      for (auto c : vc.links(v))
        before.push_back(det_of(c));
      for (int i = 0; i < gdim; ++i)
        x[v * gdim + i] = avg[i];
      bool ok = true;
      std::size_t k = 0;
      for (auto c : vc.links(v))
      {
        const double after = det_of(c);
        const double b = before[k++];
        if (tdim == gdim
            and ((after > 0) != (b > 0) or std::abs(after) < 1e-14 * std::abs(b)))
          ok = false;
      }
      if (!ok)
        for (int i = 0; i < gdim; ++i)
          x[v * gdim + i] = old[i];
    }
  }
}
//-----------------------------------------------------------------------------
double femkit::total_volume(const Mesh& mesh)
{
  double vol = 0.0;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    vol += cell_geometry(mesh, c).volume;
  return vol;
}
//-----------------------------------------------------------------------------
