// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/function.h>

#include <cmath>

using namespace femkit;

//-----------------------------------------------------------------------------
FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh,
                             std::shared_ptr<const FiniteElement> element)
    : _mesh(std::move(mesh)), _element(std::move(element))
{
  _dofmap = std::make_shared<DofMap>(_element, *_mesh);
}
//-----------------------------------------------------------------------------
FunctionSpace::FunctionSpace(std::shared_ptr<const Mesh> mesh,
                             const ElementDescriptor& descriptor)
    : FunctionSpace(std::move(mesh), std::make_shared<FiniteElement>(descriptor))
{
}
//-----------------------------------------------------------------------------
std::shared_ptr<FunctionSpace>
FunctionSpace::create(std::shared_ptr<const Mesh> mesh, const std::string& family,
                      int degree)
{
  auto d = ElementDescriptor::scalar(family_from_string(family),
                                     mesh->cell_type(), degree);
  return std::make_shared<FunctionSpace>(std::move(mesh), d);
}
//-----------------------------------------------------------------------------
std::shared_ptr<FunctionSpace>
FunctionSpace::create_vector(std::shared_ptr<const Mesh> mesh,
                             const std::string& family, int degree)
{
  auto d = ElementDescriptor::scalar(family_from_string(family),
                                     mesh->cell_type(), degree);
  const int gdim = mesh->gdim();
  return std::make_shared<FunctionSpace>(std::move(mesh),
                                         ElementDescriptor::vector(d, gdim));
}
//-----------------------------------------------------------------------------
std::shared_ptr<const FunctionSpace> FunctionSpace::sub(int i) const
{
  if (_element->is_scalar())
    throw Error(ErrorKind::NotMixed, "scalar space has no sub-spaces");
  if (i < 0 or i >= _element->num_sub_elements())
  {
    throw Error(ErrorKind::IndexOutOfRange,
                "sub-space " + std::to_string(i) + " of "
                    + std::to_string(_element->num_sub_elements()));
  }
  auto s = std::shared_ptr<FunctionSpace>(new FunctionSpace());
  s->_mesh = _mesh;
  s->_element = _element->sub_element_ptr(i);
  s->_dofmap = std::make_shared<DofMap>(_dofmap->sub(i));
  s->_component = _component;
  s->_component.push_back(i);
  return s;
}
//-----------------------------------------------------------------------------
std::shared_ptr<const FunctionSpace>
FunctionSpace::sub(const std::vector<int>& path) const
{
  std::shared_ptr<const FunctionSpace> s;
  for (int i : path)
    s = s ? s->sub(i) : sub(i);
  if (!s)
    throw Error(ErrorKind::InvalidArgument, "empty sub-space path");
  return s;
}
//-----------------------------------------------------------------------------
std::shared_ptr<FunctionSpace> FunctionSpace::collapse() const
{
  return std::make_shared<FunctionSpace>(_mesh, _element);
}
//-----------------------------------------------------------------------------
void femkit::interpolate_cell(const GenericFunction& f,
                              const FiniteElement& element, const Mesh& mesh,
                              std::size_t cell,
                              std::span<const double> coords,
                              std::span<double> values)
{
  const int tdim = mesh.tdim();
  const int gdim = mesh.gdim();
  const int vs = f.value_size();
  if (vs != element.value_size())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "function of value size " + std::to_string(vs)
                    + " on element of value size "
                    + std::to_string(element.value_size()));
  }
  const auto& pts = element.dof_points();
  const auto& comp = element.dof_components();
  const int n = element.space_dim();

  // evaluate once per distinct reference point
  std::vector<int> point_of(n, -1);
  std::vector<int> unique;
  for (int i = 0; i < n; ++i)
  {
    for (int u : unique)
    {
      bool same = true;
      for (int j = 0; j < tdim; ++j)
        same = same and pts[u * tdim + j] == pts[i * tdim + j];
      if (same)
      {
        point_of[i] = u;
        break;
      }
    }
    if (point_of[i] < 0)
    {
      point_of[i] = i;
      unique.push_back(i);
    }
  }

  std::vector<double> x(gdim), val(vs);
  std::vector<double> cache(static_cast<std::size_t>(n) * vs);
  for (int u : unique)
  {
    for (int k = 0; k < gdim; ++k)
    {
      double v = coords[k];
      for (int j = 0; j < tdim; ++j)
        v += (coords[(j + 1) * gdim + k] - coords[k]) * pts[u * tdim + j];
      x[k] = v;
    }
    f.eval_cell(x, mesh, cell, val);
    std::copy(val.begin(), val.end(), cache.begin() + static_cast<std::ptrdiff_t>(u) * vs);
  }
  for (int i = 0; i < n; ++i)
    values[i] = cache[static_cast<std::size_t>(point_of[i]) * vs + comp[i]];
}
//-----------------------------------------------------------------------------
Function::Function(std::shared_ptr<const FunctionSpace> space)
    : _space(std::move(space))
{
  if (_space->is_subspace())
  {
    throw Error(ErrorKind::InvalidArgument,
                "functions need a collapsed space, not a sub-space view");
  }
  _x.assign(_space->dim(), 0.0);
}
//-----------------------------------------------------------------------------
Function::Function(std::shared_ptr<const FunctionSpace> space,
                   std::vector<double> x)
    : Function(std::move(space))
{
  if (x.size() != _x.size())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "vector of length " + std::to_string(x.size())
                    + " for space of dimension " + std::to_string(_x.size()));
  }
  _x = std::move(x);
}
//-----------------------------------------------------------------------------
std::int64_t Function::find_cell(std::span<const double> x) const
{
  const Mesh& mesh = _space->mesh();
  const int tdim = mesh.tdim();
  const int gdim = mesh.gdim();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
  {
    const auto coords = mesh.cell_coordinates(c);
    const auto g = cell_geometry(coords, tdim, gdim);
    double s = 0.0;
    bool inside = true;
    for (int i = 0; i < tdim and inside; ++i)
    {
      double X = 0.0;
      for (int k = 0; k < gdim; ++k)
        X += g.K[i * gdim + k] * (x[k] - g.x0[k]);
      inside = X >= -1e-12;
      s += X;
    }
    if (inside and s <= 1.0 + 1e-12)
    {
      // off-plane points of manifold meshes are rejected
      if (gdim > tdim)
      {
        double d2 = 0.0;
        for (int k = 0; k < gdim; ++k)
        {
          double y = g.x0[k];
          for (int i = 0; i < tdim; ++i)
          {
            double X = 0.0;
            for (int m = 0; m < gdim; ++m)
              X += g.K[i * gdim + m] * (x[m] - g.x0[m]);
            y += g.J[k * tdim + i] * X;
          }
          d2 += (y - x[k]) * (y - x[k]);
        }
        if (std::sqrt(d2) > 1e-12 * std::max(1.0, g.h))
          continue;
      }
      return static_cast<std::int64_t>(c);
    }
  }
  return -1;
}
//-----------------------------------------------------------------------------
void Function::eval(std::span<const double> x, std::span<double> values) const
{
  const auto c = find_cell(x);
  if (c < 0)
  {
    std::string p;
    for (std::size_t k = 0; k < x.size(); ++k)
      p += (k ? ", " : "") + std::to_string(x[k]);
    throw Error(ErrorKind::PointNotInMesh, "point (" + p + ") is not in the mesh");
  }
  eval_cell(x, _space->mesh(), static_cast<std::size_t>(c), values);
}
//-----------------------------------------------------------------------------
void Function::eval_cell(std::span<const double> x, const Mesh& mesh,
                         std::size_t cell, std::span<double> values) const
{
  const Mesh& own = _space->mesh();
  if (&mesh != &own)
  {
    eval(x, values);
    return;
  }
  const int tdim = own.tdim();
  const int gdim = own.gdim();
  const auto coords = own.cell_coordinates(cell);
  const auto g = cell_geometry(coords, tdim, gdim);
  std::array<double, 3> X{};
  for (int i = 0; i < tdim; ++i)
    for (int k = 0; k < gdim; ++k)
      X[i] += g.K[i * gdim + k] * (x[k] - g.x0[k]);
  const auto& e = _space->element();
  auto tab = e.tabulate_unchecked(0, std::span<const double>(X.data(), tdim));
  auto dofs = _space->dofmap().cell_dofs(cell);
  const int vs = e.value_size();
  for (int c = 0; c < vs; ++c)
  {
    double v = 0.0;
    for (int i = 0; i < e.space_dim(); ++i)
      v += _x[dofs[i]] * tab(0, 0, i, c);
    values[c] = v;
  }
}
//-----------------------------------------------------------------------------
void Function::cell_coefficients(std::size_t cell, std::span<double> out) const
{
  auto dofs = _space->dofmap().cell_dofs(cell);
  for (std::size_t i = 0; i < dofs.size(); ++i)
    out[i] = _x[dofs[i]];
}
//-----------------------------------------------------------------------------
void Function::interpolate(const GenericFunction& source)
{
  const Mesh& mesh = _space->mesh();
  const auto& e = _space->element();
  if (source.value_size() != e.value_size())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "cannot interpolate value size "
                    + std::to_string(source.value_size()) + " into value size "
                    + std::to_string(e.value_size()));
  }
  if (auto* ex = dynamic_cast<const Expression*>(&source);
      ex and ex->gdim() > mesh.gdim())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "expression in dimension " + std::to_string(ex->gdim())
                    + " on a mesh of dimension " + std::to_string(mesh.gdim()));
  }
  std::vector<double> local(e.space_dim());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
  {
    const auto coords = mesh.cell_coordinates(c);
    interpolate_cell(source, e, mesh, c, coords, local);
    auto dofs = _space->dofmap().cell_dofs(c);
    for (std::size_t i = 0; i < dofs.size(); ++i)
      _x[dofs[i]] = local[i];
  }
}
//-----------------------------------------------------------------------------
std::vector<Function> Function::split() const
{
  const auto& e = _space->element();
  if (e.is_scalar())
    throw Error(ErrorKind::NotMixed, "cannot split a scalar function");
  std::vector<Function> out;
  for (int i = 0; i < e.num_sub_elements(); ++i)
  {
    auto view = _space->sub(i);
    auto V = view->collapse();
    Function f(V);
    for (std::size_t c = 0; c < _space->mesh().num_cells(); ++c)
    {
      auto from = view->dofmap().cell_dofs(c);
      auto to = V->dofmap().cell_dofs(c);
      for (std::size_t k = 0; k < from.size(); ++k)
        f._x[to[k]] = _x[from[k]];
    }
    out.push_back(std::move(f));
  }
  return out;
}
//-----------------------------------------------------------------------------
void Function::assign_components(const std::vector<Function>& parts)
{
  const auto& e = _space->element();
  if (e.is_scalar())
    throw Error(ErrorKind::NotMixed, "cannot assign components of a scalar function");
  if (static_cast<int>(parts.size()) != e.num_sub_elements())
    throw Error(ErrorKind::ShapeMismatch, "wrong number of components");
  for (int i = 0; i < e.num_sub_elements(); ++i)
  {
    auto view = _space->sub(i);
    const auto& V = parts[i].function_space();
    if (!(V.element().descriptor() == view->element().descriptor()))
      throw Error(ErrorKind::ShapeMismatch, "component on a different element");
    for (std::size_t c = 0; c < _space->mesh().num_cells(); ++c)
    {
      auto to = view->dofmap().cell_dofs(c);
      auto from = V.dofmap().cell_dofs(c);
      for (std::size_t k = 0; k < to.size(); ++k)
        _x[to[k]] = parts[i]._x[from[k]];
    }
  }
}
//-----------------------------------------------------------------------------
Function femkit::interpolate(const GenericFunction& source,
                             std::shared_ptr<const FunctionSpace> V)
{
  Function f(std::move(V));
  f.interpolate(source);
  return f;
}
//-----------------------------------------------------------------------------
