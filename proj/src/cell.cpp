// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/cell.h>
#include <femkit/error.h>

using namespace femkit;

namespace
{
using Table = std::vector<std::vector<int>>;

const std::array<Table, 2> interval_tables = {
    Table{{0}, {1}},
    Table{{0, 1}},
};

const std::array<Table, 3> triangle_tables = {
    Table{{0}, {1}, {2}},
    Table{{1, 2}, {0, 2}, {0, 1}},
    Table{{0, 1, 2}},
};

const std::array<Table, 4> tetrahedron_tables = {
    Table{{0}, {1}, {2}, {3}},
    Table{{2, 3}, {1, 3}, {1, 2}, {0, 3}, {0, 2}, {0, 1}},
    Table{{1, 2, 3}, {0, 2, 3}, {0, 1, 3}, {0, 1, 2}},
    Table{{0, 1, 2, 3}},
};
} // namespace

//-----------------------------------------------------------------------------
int cell::topological_dimension(Type type)
{
  switch (type)
  {
  case Type::interval: return 1;
  case Type::triangle: return 2;
  case Type::tetrahedron: return 3;
  }
  return 0;
}
//-----------------------------------------------------------------------------
cell::Type cell::simplex(int tdim)
{
  switch (tdim)
  {
  case 1: return Type::interval;
  case 2: return Type::triangle;
  case 3: return Type::tetrahedron;
  default:
    throw Error(ErrorKind::DimensionOutOfRange,
                "no simplex cell of dimension " + std::to_string(tdim));
  }
}
//-----------------------------------------------------------------------------
std::string cell::to_string(Type type)
{
  switch (type)
  {
  case Type::interval: return "interval";
  case Type::triangle: return "triangle";
  case Type::tetrahedron: return "tetrahedron";
  }
  return "";
}
//-----------------------------------------------------------------------------
cell::Type cell::from_string(const std::string& name)
{
  if (name == "interval")
    return Type::interval;
  if (name == "triangle")
    return Type::triangle;
  if (name == "tetrahedron")
    return Type::tetrahedron;
  throw Error(ErrorKind::SchemaMismatch, "unknown cell type '" + name + "'");
}
//-----------------------------------------------------------------------------
int cell::num_vertices(Type type) { return topological_dimension(type) + 1; }
//-----------------------------------------------------------------------------
int cell::num_sub_entities(Type type, int d)
{
  return static_cast<int>(sub_entity_vertices(type, d).size());
}
//-----------------------------------------------------------------------------
const std::vector<std::vector<int>>& cell::sub_entity_vertices(Type type, int d)
{
  const int tdim = topological_dimension(type);
  if (d < 0 or d > tdim)
    throw Error(ErrorKind::DimensionOutOfRange,
                "sub-entity dimension " + std::to_string(d));
  switch (type)
  {
  case Type::interval: return interval_tables[d];
  case Type::triangle: return triangle_tables[d];
  default: return tetrahedron_tables[d];
  }
}
//-----------------------------------------------------------------------------
int cell::facet_opposite_vertex(Type type, int f)
{
  const int tdim = topological_dimension(type);
  const auto& facet = sub_entity_vertices(type, tdim - 1).at(f);
  for (int v = 0; v <= tdim; ++v)
  {
    bool found = false;
    for (int w : facet)
      found = found or (w == v);
    if (not found)
      return v;
  }
  return -1;
}
//-----------------------------------------------------------------------------
std::vector<std::vector<double>> cell::reference_vertices(Type type)
{
  switch (type)
  {
  case Type::interval: return {{0.0}, {1.0}};
  case Type::triangle: return {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  default:
    return {{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  }
}
//-----------------------------------------------------------------------------
double cell::reference_volume(Type type)
{
  switch (type)
  {
  case Type::interval: return 1.0;
  case Type::triangle: return 0.5;
  default: return 1.0 / 6.0;
  }
}
//-----------------------------------------------------------------------------
std::vector<double> cell::barycentric(Type type, const double* x)
{
  const int tdim = topological_dimension(type);
  std::vector<double> lambda(tdim + 1);
  double s = 0.0;
  for (int i = 0; i < tdim; ++i)
  {
    lambda[i + 1] = x[i];
    s += x[i];
  }
  lambda[0] = 1.0 - s;
  return lambda;
}
//-----------------------------------------------------------------------------
