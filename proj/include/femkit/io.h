// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

#include "function.h"
#include "mesh.h"
#include <map>
#include <string>
#include <utility>
#include <vector>

/// File formats: mesh XML (with optional mesh function blocks), function
/// coefficient XML and legacy ASCII VTK.
///
/// Mesh XML:
///
///   <dolfin>
///     <mesh celltype="triangle" dim="2">
///       <vertices size="N"><vertex index="0" x=".." y=".."/>...</vertices>
///       <cells size="M"><triangle index="0" v0=".." v1=".." v2=".."/>...</cells>
///     </mesh>
///     <meshfunction name="boundaries" dim="1" size="n">
///       <entity index="i" value="v"/>...
///     </meshfunction>
///   </dolfin>
///
/// Entities not listed in a mesh function block are 0.
namespace femkit::io
{

/// Named integer mesh function read from or written to a mesh file.
struct Markers
{
  std::string name;
  MeshFunction<int> values;
};

std::string mesh_to_xml(const Mesh& mesh, const std::vector<Markers>& markers = {});

/// Parse mesh XML text. Throws ParseError (with line) for malformed
/// content and SchemaMismatch for unknown roots or cell types.
Mesh mesh_from_xml(const std::string& text);

/// Mesh function blocks of a mesh XML text.
std::vector<Markers> markers_from_xml(const std::string& text);

void write_mesh_xml(const Mesh& mesh, const std::string& path,
                    const std::vector<Markers>& markers = {});
Mesh read_mesh_xml(const std::string& path);
std::vector<Markers> read_markers(const std::string& path);

/// Coefficient vector of a function:
///   <dolfin><function size="n"><dof index="i" value="v"/>...</function></dolfin>
std::string function_to_xml(const Function& u);
std::vector<double> function_values_from_xml(const std::string& text);
void write_function_xml(const Function& u, const std::string& path);
void read_function_xml(Function& u, const std::string& path);

/// Legacy ASCII VTK unstructured grid with one point-data array per
/// function. Functions that are not vertex based are evaluated at the
/// vertices (CG1 interpolation) and the header says so; mixed functions
/// are written per component as name_0, name_1, ...
std::string vtk_text(const Mesh& mesh,
                     const std::vector<std::pair<std::string, const Function*>>& functions);
void write_vtk(const std::string& path, const Mesh& mesh,
               const std::vector<std::pair<std::string, const Function*>>& functions = {});

/// Whole file as a string (IoError if unreadable).
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

} // namespace femkit::io
