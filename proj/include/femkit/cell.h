// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include <array>
#include <string>
#include <vector>

/// Reference simplex cells and their sub-entity numbering.
///
/// Reference cells are the unit interval [0,1], the triangle with vertices
/// (0,0),(1,0),(0,1) and the tetrahedron with vertices (0,0,0),(1,0,0),
/// (0,1,0),(0,0,1). For triangles and tetrahedra, facet k is the one
/// opposite local vertex k; the facets of an interval are its vertices:
///
///   triangle edges:    0:(1,2) 1:(0,2) 2:(0,1)
///   tetrahedron edges: 0:(2,3) 1:(1,3) 2:(1,2) 3:(0,3) 4:(0,2) 5:(0,1)
///   tetrahedron faces: 0:(1,2,3) 1:(0,2,3) 2:(0,1,3) 3:(0,1,2)
namespace femkit::cell
{

enum class Type
{
  interval,
  triangle,
  tetrahedron
};

int topological_dimension(Type type);

/// Simplex of the given topological dimension (1..3). Dimension 0 is
/// not a cell type and throws.
Type simplex(int tdim);

std::string to_string(Type type);

/// Parse "interval", "triangle" or "tetrahedron".
Type from_string(const std::string& name);

int num_vertices(Type type);

/// Number of sub-entities of dimension d of the reference cell.
int num_sub_entities(Type type, int d);

/// Local vertex indices of every sub-entity of dimension d, in local
/// sub-entity order.
const std::vector<std::vector<int>>& sub_entity_vertices(Type type, int d);

/// Reference vertex coordinates, tdim per vertex.
std::vector<std::vector<double>> reference_vertices(Type type);

/// Local vertex of the cell that is not on local facet f.
int facet_opposite_vertex(Type type, int f);

/// Volume of the reference cell: 1, 1/2, 1/6.
double reference_volume(Type type);

/// Barycentric coordinates (tdim+1 values) of a reference point. The first
/// value belongs to vertex 0.
std::vector<double> barycentric(Type type, const double* x);

} // namespace femkit::cell
