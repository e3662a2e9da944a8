// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "cell.h"
#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

namespace femkit
{

/// Compressed-row incidence relation: entity i is incident to
/// indices[offsets[i]:offsets[i+1]].
class Connectivity
{
public:
  Connectivity() : _offsets{0} {}
  Connectivity(std::vector<std::int32_t> offsets,
               std::vector<std::int32_t> indices)
      : _offsets(std::move(offsets)), _indices(std::move(indices))
  {
  }

  /// Build from a list of rows.
  static Connectivity from_rows(const std::vector<std::vector<std::int32_t>>& rows);

  std::size_t num_nodes() const { return _offsets.size() - 1; }

  std::span<const std::int32_t> links(std::size_t i) const
  {
    return {_indices.data() + _offsets[i],
            static_cast<std::size_t>(_offsets[i + 1] - _offsets[i])};
  }

  const std::vector<std::int32_t>& offsets() const { return _offsets; }
  const std::vector<std::int32_t>& indices() const { return _indices; }

private:
  std::vector<std::int32_t> _offsets;
  std::vector<std::int32_t> _indices;
};

/// Simplex mesh of topological dimension tdim embedded in R^gdim.
///
/// Initially only vertex coordinates and cell-vertex connectivity
/// (tdim, 0) are stored. All other entities and connectivities are
/// computed on first request and cached. Entities of dimension d are
/// numbered in order of first appearance when scanning cells in index
/// order and, within a cell, local sub-entities in reference order. The
/// vertex list of an intermediate entity is stored sorted.
///
/// The cache is guarded by a mutex, so a const Mesh may be shared between
/// threads.
class Mesh
{
public:
  /// @param coordinates flat vertex coordinates, gdim per vertex
  /// @param cells flat cell-vertex list, tdim+1 per cell
  Mesh(std::vector<double> coordinates, std::vector<std::int32_t> cells,
       int tdim, int gdim);

  Mesh(const Mesh& other);
  Mesh(Mesh&& other) noexcept;
  Mesh& operator=(const Mesh& other);
  Mesh& operator=(Mesh&& other) noexcept;
  ~Mesh() = default;

  int tdim() const { return _tdim; }
  int gdim() const { return _gdim; }
  cell::Type cell_type() const { return cell::simplex(_tdim); }

  /// Number of entities of dimension d. Computes the entities if needed.
  std::size_t num_entities(int d) const;
  std::size_t num_vertices() const { return _coordinates.size() / _gdim; }
  std::size_t num_cells() const { return _cells_count; }

  std::span<const double> coordinates() const { return _coordinates; }
  std::span<double> coordinates() { return _coordinates; }

  std::span<const double> vertex(std::size_t i) const
  {
    return {_coordinates.data() + i * _gdim, static_cast<std::size_t>(_gdim)};
  }

  std::span<const std::int32_t> cell_vertices(std::size_t c) const;

  /// Incidence (d0, d1), computed and cached on demand.
  const Connectivity& connectivity(int d0, int d1) const;

  /// True if (d0, d1) has already been computed.
  bool has_connectivity(int d0, int d1) const;

  /// Flat cell-vertex list (tdim+1 per cell).
  std::vector<std::int32_t> cells() const;

  /// Gathered vertex coordinates of a cell, gdim per vertex.
  std::vector<double> cell_coordinates(std::size_t c) const;

private:
  void compute(int d0, int d1) const;
  void compute_entities(int d) const;
  void compute_transpose(int d0, int d1) const;
  void compute_intersection(int d0, int d1) const;
  void compute_vertex_sharing(int d) const;
  const Connectivity& get(int d0, int d1) const;

  int _tdim;
  int _gdim;
  std::size_t _cells_count;
  std::vector<double> _coordinates;

  mutable std::array<std::array<std::unique_ptr<Connectivity>, 4>, 4> _conn;
  mutable std::array<std::int64_t, 4> _num_entities;
  mutable std::unique_ptr<std::mutex> _mutex;
};

/// View of mesh entity (d, i).
class MeshEntity
{
public:
  MeshEntity(const Mesh& mesh, int dim, std::size_t index);

  int dim() const { return _dim; }
  std::size_t index() const { return _index; }
  const Mesh& mesh() const { return *_mesh; }

  /// Incident entities of dimension d.
  std::span<const std::int32_t> entities(int d) const
  {
    return _mesh->connectivity(_dim, d).links(_index);
  }

  std::vector<double> midpoint() const;

private:
  const Mesh* _mesh;
  int _dim;
  std::size_t _index;
};

/// Range over all entities of one dimension: for (auto e : entities(mesh, 1))
class EntityRange
{
public:
  class iterator
  {
  public:
    using value_type = MeshEntity;
    using difference_type = std::ptrdiff_t;
    iterator(const Mesh* mesh, int dim, std::size_t i)
        : _mesh(mesh), _dim(dim), _i(i)
    {
    }
    MeshEntity operator*() const { return MeshEntity(*_mesh, _dim, _i); }
    iterator& operator++()
    {
      ++_i;
      return *this;
    }
    bool operator==(const iterator& o) const { return _i == o._i; }
    bool operator!=(const iterator& o) const { return _i != o._i; }

  private:
    const Mesh* _mesh;
    int _dim;
    std::size_t _i;
  };

  EntityRange(const Mesh& mesh, int dim)
      : _mesh(&mesh), _dim(dim), _n(mesh.num_entities(dim))
  {
  }
  iterator begin() const { return {_mesh, _dim, 0}; }
  iterator end() const { return {_mesh, _dim, _n}; }
  std::size_t size() const { return _n; }

private:
  const Mesh* _mesh;
  int _dim;
  std::size_t _n;
};

inline EntityRange entities(const Mesh& mesh, int dim) { return {mesh, dim}; }
inline EntityRange vertices(const Mesh& mesh) { return {mesh, 0}; }
inline EntityRange cells(const Mesh& mesh) { return {mesh, mesh.tdim()}; }
inline EntityRange facets(const Mesh& mesh) { return {mesh, mesh.tdim() - 1}; }

/// Values attached to the entities of one dimension.
template <typename T>
class MeshFunction
{
public:
  MeshFunction() = default;
  MeshFunction(const Mesh& mesh, int dim, T value = T())
      : _dim(dim), _values(mesh.num_entities(dim), value)
  {
  }
  MeshFunction(int dim, std::vector<T> values)
      : _dim(dim), _values(std::move(values))
  {
  }

  int dim() const { return _dim; }
  std::size_t size() const { return _values.size(); }
  T operator[](std::size_t i) const { return _values[i]; }
  typename std::vector<T>::reference operator[](std::size_t i)
  {
    return _values[i];
  }
  const std::vector<T>& values() const { return _values; }
  std::vector<T>& values() { return _values; }

private:
  int _dim = 0;
  std::vector<T> _values;
};

/// Affine map data of one cell: x = x0 + J X for reference point X.
struct CellGeometry
{
  int gdim = 0;
  int tdim = 0;
  std::array<double, 3> x0{};
  /// J(i, j) = J[i*tdim + j], gdim rows, tdim columns.
  std::array<double, 9> J{};
  /// Inverse (pseudo-inverse for tdim < gdim), tdim rows, gdim columns.
  std::array<double, 9> K{};
  /// Signed determinant for tdim == gdim, otherwise sqrt(det(J^T J)).
  double detJ = 0.0;
  /// Diameter: longest edge.
  double h = 0.0;
  double volume = 0.0;
};

/// Geometry of the affine map J taking the reference cell onto the cell
/// with the given vertex coordinates (gdim per vertex). Throws
/// DegenerateCell when |detJ| <= 1e-14 h^tdim.
CellGeometry cell_geometry(std::span<const double> coordinates, int tdim,
                           int gdim);

CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell);

struct FacetGeometry
{
  std::array<double, 3> normal{};
  double area = 0.0;
};

/// Unit normal of local facet `local_facet` of a cell pointing out of the
/// cell, and the facet measure (1 for point facets).
FacetGeometry facet_geometry(std::span<const double> cell_coordinates,
                             int tdim, int gdim, int local_facet);

/// Normal of a mesh facet oriented out of its '+' cell (the incident cell
/// with the smaller index), and its measure.
FacetGeometry facet_geometry(const Mesh& mesh, std::size_t facet);

/// Index of `facet` within the local facets of `cell`.
int local_facet_index(const Mesh& mesh, std::size_t cell, std::size_t facet);

enum class UnitShape
{
  interval,
  square,
  cube
};

/// Uniform simplex mesh of the unit interval, square or cube. Squares are
/// split along the (i,j)-(i+1,j+1) diagonal, cubes into six tetrahedra
/// around the main diagonal.
Mesh generate_unit_mesh(UnitShape shape, std::span<const std::size_t> divisions);

Mesh unit_interval(std::size_t n);
Mesh unit_square(std::size_t nx, std::size_t ny);
Mesh unit_cube(std::size_t nx, std::size_t ny, std::size_t nz);

/// Uniform refinement (markers absent) into 2^tdim children per cell, or
/// longest-edge bisection of the marked cells with conformity propagation
/// (tdim <= 2).
Mesh refine(const Mesh& mesh,
            const std::optional<MeshFunction<bool>>& markers = std::nullopt);

/// Laplacian smoothing of interior vertices. A vertex move that would
/// invert or collapse an incident cell is skipped.
void smooth(Mesh& mesh, int iterations = 1);

/// True for facets with exactly one incident cell. Throws NonManifold if
/// a facet has more than two.
MeshFunction<bool> exterior_facets(const Mesh& mesh);

/// Sum of |cell volume|.
double total_volume(const Mesh& mesh);

} // namespace femkit
