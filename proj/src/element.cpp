// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/dense.h>
#include <femkit/element.h>
#include <femkit/error.h>
#include <femkit/quadrature.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace femkit;

namespace
{
// Value with gradient in up to three reference directions
struct Dual
{
  double v = 0.0;
  std::array<double, 3> g{};
};

Dual operator+(const Dual& a, const Dual& b)
{
  return {a.v + b.v, {a.g[0] + b.g[0], a.g[1] + b.g[1], a.g[2] + b.g[2]}};
}

Dual operator-(const Dual& a, const Dual& b)
{
  return {a.v - b.v, {a.g[0] - b.g[0], a.g[1] - b.g[1], a.g[2] - b.g[2]}};
}

Dual operator*(const Dual& a, const Dual& b)
{
  Dual r;
  r.v = a.v * b.v;
  for (int k = 0; k < 3; ++k)
    r.g[k] = a.g[k] * b.v + a.v * b.g[k];
  return r;
}

Dual operator*(double s, const Dual& a)
{
  return {s * a.v, {s * a.g[0], s * a.g[1], s * a.g[2]}};
}

// t^n P_n^(alpha,0)(s/t) for n = 0..nmax
std::vector<Dual> scaled_jacobi(int nmax, double alpha, const Dual& s,
                                const Dual& t)
{
  std::vector<Dual> r(nmax + 1);
  r[0].v = 1.0;
  if (nmax == 0)
    return r;
  r[1] = 0.5 * ((alpha + 2.0) * s + alpha * t);
  const Dual t2 = t * t;
  for (int n = 2; n <= nmax; ++n)
  {
    const double a = alpha;
    const double c = 2.0 * n * (n + a) * (2.0 * n + a - 2.0);
    const double c1 = (2.0 * n + a - 1.0);
    const Dual lin = (2.0 * n + a) * (2.0 * n + a - 2.0) * s + a * a * t;
    const double c2 = 2.0 * (n + a - 1.0) * (n - 1.0) * (2.0 * n + a);
    r[n] = (1.0 / c) * (c1 * (lin * r[n - 1]) - c2 * (t2 * r[n - 2]));
  }
  return r;
}

Dual variable(double x, int k)
{
  Dual d;
  d.v = x;
  d.g[k] = 1.0;
  return d;
}

Dual constant(double x) { return Dual{x, {}}; }

// Principal lattice multi-indices (barycentric, summing to q)
void lattice(int tdim, int q, std::vector<std::array<int, 4>>& out)
{
  out.clear();
  if (tdim == 1)
  {
    for (int i = 0; i <= q; ++i)
      out.push_back({q - i, i, 0, 0});
  }
  else if (tdim == 2)
  {
    for (int j = 0; j <= q; ++j)
      for (int i = 0; i + j <= q; ++i)
        out.push_back({q - i - j, i, j, 0});
  }
  else
  {
    for (int k = 0; k <= q; ++k)
      for (int j = 0; j + k <= q; ++j)
        for (int i = 0; i + j + k <= q; ++i)
          out.push_back({q - i - j - k, i, j, k});
  }
}
} // namespace

//-----------------------------------------------------------------------------
Family femkit::family_from_string(const std::string& name)
{
  if (name == "CG" or name == "Lagrange" or name == "P")
    return Family::CG;
  if (name == "DG" or name == "Discontinuous Lagrange")
    return Family::DG;
  if (name == "CR" or name == "Crouzeix-Raviart")
    return Family::CR;
  throw Error(ErrorKind::UnsupportedFamily,
              "unsupported element family '" + name + "'");
}
//-----------------------------------------------------------------------------
ElementDescriptor ElementDescriptor::scalar(Family family, cell::Type cell,
                                            int degree)
{
  ElementDescriptor d;
  d.family = family;
  d.cell = cell;
  d.degree = degree;
  return d;
}
//-----------------------------------------------------------------------------
ElementDescriptor ElementDescriptor::vector(const ElementDescriptor& component,
                                            int count)
{
  if (count < 1)
    throw Error(ErrorKind::InvalidArgument, "vector element needs components");
  ElementDescriptor d;
  d.family = Family::Vector;
  d.cell = component.cell;
  d.degree = component.degree;
  d.sub.assign(count, component);
  return d;
}
//-----------------------------------------------------------------------------
ElementDescriptor
ElementDescriptor::mixed(std::vector<ElementDescriptor> components)
{
  if (components.empty())
    throw Error(ErrorKind::InvalidArgument, "mixed element needs components");
  ElementDescriptor d;
  d.family = Family::Mixed;
  d.cell = components[0].cell;
  d.degree = 0;
  for (auto& c : components)
  {
    if (c.cell != d.cell)
    {
      throw Error(ErrorKind::ShapeMismatch,
                  "mixed element components on different cells");
    }
    d.degree = std::max(d.degree, c.degree);
  }
  d.sub = std::move(components);
  return d;
}
//-----------------------------------------------------------------------------
std::string ElementDescriptor::str() const
{
  std::string inner;
  switch (family)
  {
  case Family::CG: inner = "CG" + std::to_string(degree); break;
  case Family::DG: inner = "DG" + std::to_string(degree); break;
  case Family::CR: inner = "CR" + std::to_string(degree); break;
  case Family::Vector:
  {
    auto s = sub[0].str();
    s = s.substr(0, s.find('@'));
    inner = "Vector(" + s + "," + std::to_string(sub.size()) + ")";
    break;
  }
  case Family::Mixed:
    inner = "Mixed(";
    for (std::size_t i = 0; i < sub.size(); ++i)
    {
      auto s = sub[i].str();
      inner += (i ? "," : "") + s.substr(0, s.find('@'));
    }
    inner += ")";
    break;
  }
  return inner + "@" + cell::to_string(cell);
}
//-----------------------------------------------------------------------------
int femkit::polyset_dim(int tdim, int q)
{
  switch (tdim)
  {
  case 0: return 1;
  case 1: return q + 1;
  case 2: return (q + 1) * (q + 2) / 2;
  default: return (q + 1) * (q + 2) * (q + 3) / 6;
  }
}
//-----------------------------------------------------------------------------
void femkit::polyset(cell::Type cell, int q, const double* x, double* values,
                     double* grads)
{
  const int tdim = cell::topological_dimension(cell);
  std::vector<Dual> out;
  out.reserve(polyset_dim(tdim, q));
  if (tdim == 1)
  {
    const Dual s = 2.0 * variable(x[0], 0) - constant(1.0);
    out = scaled_jacobi(q, 0.0, s, constant(1.0));
  }
  else if (tdim == 2)
  {
    const Dual X = variable(x[0], 0);
    const Dual Y = variable(x[1], 1);
    const Dual s1 = 2.0 * X + Y - constant(1.0);
    const Dual t1 = constant(1.0) - Y;
    const auto P = scaled_jacobi(q, 0.0, s1, t1);
    const Dual s2 = 2.0 * Y - constant(1.0);
    for (int p = 0; p <= q; ++p)
    {
      const auto R = scaled_jacobi(q - p, 2.0 * p + 1.0, s2, constant(1.0));
      for (int r = 0; r + p <= q; ++r)
        out.push_back(P[p] * R[r]);
    }
  }
  else
  {
    const Dual X = variable(x[0], 0);
    const Dual Y = variable(x[1], 1);
    const Dual Z = variable(x[2], 2);
    const Dual one = constant(1.0);
    const auto P = scaled_jacobi(q, 0.0, 2.0 * X + Y + Z - one, one - Y - Z);
    const Dual s2 = 2.0 * Y + Z - one;
    const Dual t2 = one - Z;
    const Dual s3 = 2.0 * Z - one;
    for (int p = 0; p <= q; ++p)
    {
      const auto R = scaled_jacobi(q - p, 2.0 * p + 1.0, s2, t2);
      for (int r = 0; r + p <= q; ++r)
      {
        const auto S
            = scaled_jacobi(q - p - r, 2.0 * p + 2.0 * r + 2.0, s3, one);
        const Dual pr = P[p] * R[r];
        for (int s = 0; s + r + p <= q; ++s)
          out.push_back(pr * S[s]);
      }
    }
  }

  for (std::size_t j = 0; j < out.size(); ++j)
  {
    values[j] = out[j].v;
    if (grads)
      for (int k = 0; k < tdim; ++k)
        grads[j * tdim + k] = out[j].g[k];
  }
}
//-----------------------------------------------------------------------------
FiniteElement::FiniteElement(const ElementDescriptor& descriptor)
    : _desc(descriptor), _cell(descriptor.cell)
{
  if (_desc.family == Family::Vector or _desc.family == Family::Mixed)
  {
    if (_desc.sub.empty())
    {
      throw Error(ErrorKind::InvalidArgument,
                  "composite element without components");
    }
    const int tdim = this->tdim();
    _entity_dofs.resize(tdim + 1);
    for (int d = 0; d <= tdim; ++d)
      _entity_dofs[d].resize(cell::num_sub_entities(_cell, d));

    _discontinuous = true;
    int value_offset = 0;
    for (const auto& s : _desc.sub)
    {
      if (s.cell != _cell)
      {
        throw Error(ErrorKind::ShapeMismatch,
                    "element components on different cells");
      }
      auto e = std::make_shared<const FiniteElement>(s);
      _dof_offsets.push_back(_space_dim);
      _value_offsets.push_back(value_offset);
      _points.insert(_points.end(), e->dof_points().begin(),
                     e->dof_points().end());
      for (int c : e->dof_components())
        _components.push_back(_value_offsets.back() + c);
      for (int d = 0; d <= tdim; ++d)
        for (std::size_t i = 0; i < _entity_dofs[d].size(); ++i)
          for (int dof : e->entity_dofs()[d][i])
            _entity_dofs[d][i].push_back(dof + _space_dim);
      _space_dim += e->space_dim();
      value_offset += e->value_size();
      _value_size = value_offset;
      _degree = std::max(_degree, e->degree());
      _discontinuous = _discontinuous and e->discontinuous();
      _sub.push_back(e);
    }
    return;
  }

  build_scalar();
}
//-----------------------------------------------------------------------------
void FiniteElement::build_scalar()
{
  const int q = _desc.degree;
  const int tdim = this->tdim();
  switch (_desc.family)
  {
  case Family::CG:
    if (q < 1 or q > max_degree)
      throw Error(ErrorKind::BadDegree, "CG degree " + std::to_string(q));
    break;
  case Family::DG:
    if (q < 0 or q > max_degree)
      throw Error(ErrorKind::BadDegree, "DG degree " + std::to_string(q));
    break;
  case Family::CR:
    if (q != 1)
      throw Error(ErrorKind::BadDegree, "CR degree " + std::to_string(q));
    break;
  default: break;
  }

  _degree = q;
  _poly_degree = q;
  _value_size = 1;
  _discontinuous = (_desc.family == Family::DG);
  _entity_dofs.resize(tdim + 1);
  for (int d = 0; d <= tdim; ++d)
    _entity_dofs[d].resize(cell::num_sub_entities(_cell, d));

  const auto verts = cell::reference_vertices(_cell);
  if (_desc.family == Family::CR)
  {
    const auto& facets = cell::sub_entity_vertices(_cell, tdim - 1);
    for (std::size_t f = 0; f < facets.size(); ++f)
    {
      for (int k = 0; k < tdim; ++k)
      {
        double s = 0.0;
        for (int v : facets[f])
          s += verts[v][k];
        _points.push_back(s / facets[f].size());
      }
      _entity_dofs[tdim - 1][f].push_back(static_cast<int>(f));
    }
  }
  else if (q == 0)
  {
    for (int k = 0; k < tdim; ++k)
      _points.push_back(1.0 / (tdim + 1));
    _entity_dofs[tdim][0].push_back(0);
  }
  else
  {
    // Group lattice points by the sub-entity whose interior holds them
    std::vector<std::array<int, 4>> alpha;
    lattice(tdim, q, alpha);
    std::map<std::pair<int, int>, std::vector<std::array<int, 4>>> groups;
    for (const auto& a : alpha)
    {
      std::vector<int> support;
      for (int v = 0; v <= tdim; ++v)
        if (a[v] > 0)
          support.push_back(v);
      const int d = static_cast<int>(support.size()) - 1;
      const auto& ents = cell::sub_entity_vertices(_cell, d);
      int e = 0;
      while (ents[e] != support)
        ++e;
      groups[{d, e}].push_back(a);
    }

    for (auto& [key, list] : groups)
    {
      std::sort(list.begin(), list.end(), std::greater<>());
      for (const auto& a : list)
      {
        for (int k = 0; k < tdim; ++k)
        {
          double s = 0.0;
          for (int v = 0; v <= tdim; ++v)
            s += a[v] * verts[v][k];
          _points.push_back(s / q);
        }
        const int dof = static_cast<int>(_points.size() / tdim) - 1;
        const int d = _discontinuous ? tdim : key.first;
        const int e = _discontinuous ? 0 : key.second;
        _entity_dofs[d][e].push_back(dof);
      }
    }
  }

  _space_dim = static_cast<int>(_points.size() / tdim);
  _components.assign(_space_dim, 0);
  const int n = polyset_dim(tdim, _poly_degree);
  if (n != _space_dim)
    throw Error(ErrorKind::BadDegree, "dof count does not match basis");

  // normalise the modal basis numerically
  const auto rule = quadrature::make_rule(_cell, std::max(1, 2 * _poly_degree));
  _scale.assign(n, 0.0);
  std::vector<double> vals(n);
  for (std::size_t p = 0; p < rule.size(); ++p)
  {
    polyset(_cell, _poly_degree, rule.point(p), vals.data(), nullptr);
    for (int j = 0; j < n; ++j)
      _scale[j] += rule.weights[p] * vals[j] * vals[j];
  }
  for (auto& s : _scale)
    s = 1.0 / std::sqrt(s);

  std::vector<double> V(n * n);
  for (int i = 0; i < n; ++i)
  {
    polyset(_cell, _poly_degree, _points.data() + i * tdim, vals.data(),
            nullptr);
    for (int j = 0; j < n; ++j)
      V[i * n + j] = vals[j] * _scale[j];
  }
  _vinv = dense::inverse(V, n);
}
//-----------------------------------------------------------------------------
Tabulation FiniteElement::tabulate(int nderiv,
                                   std::span<const double> points) const
{
  const int tdim = this->tdim();
  const std::size_t np = points.size() / tdim;
  for (std::size_t p = 0; p < np; ++p)
  {
    const auto lambda = cell::barycentric(_cell, points.data() + p * tdim);
    for (double l : lambda)
    {
      if (l < -1e-12)
      {
        throw Error(ErrorKind::PointOutsideReference,
                    "tabulation point outside the reference cell");
      }
    }
  }
  return tabulate_unchecked(nderiv, points);
}
//-----------------------------------------------------------------------------
Tabulation FiniteElement::tabulate_unchecked(int nderiv,
                                             std::span<const double> points) const
{
  if (nderiv < 0 or nderiv > 1)
    throw Error(ErrorKind::InvalidArgument, "nderiv must be 0 or 1");
  Tabulation t;
  t.nderiv = nderiv == 0 ? 1 : 1 + tdim();
  t.npoints = points.size() / tdim();
  t.ndofs = _space_dim;
  t.value_size = _value_size;
  t.data.assign(t.nderiv * t.npoints * t.ndofs * t.value_size, 0.0);
  tabulate_into(nderiv, points, t, 0, 0);
  return t;
}
//-----------------------------------------------------------------------------
void FiniteElement::tabulate_into(int nderiv, std::span<const double> points,
                                  Tabulation& t, int dof_offset,
                                  int value_offset) const
{
  if (!_sub.empty())
  {
    for (std::size_t i = 0; i < _sub.size(); ++i)
    {
      _sub[i]->tabulate_into(nderiv, points, t, dof_offset + _dof_offsets[i],
                             value_offset + _value_offsets[i]);
    }
    return;
  }

  const int tdim = this->tdim();
  const int n = _space_dim;
  const std::size_t np = points.size() / tdim;
  std::vector<double> vals(n), grads(n * tdim);
  for (std::size_t p = 0; p < np; ++p)
  {
    polyset(_cell, _poly_degree, points.data() + p * tdim, vals.data(),
            nderiv ? grads.data() : nullptr);
    for (int j = 0; j < n; ++j)
    {
      vals[j] *= _scale[j];
      for (int k = 0; k < tdim; ++k)
        grads[j * tdim + k] *= _scale[j];
    }
    for (int i = 0; i < n; ++i)
    {
      double v = 0.0;
      for (int j = 0; j < n; ++j)
        v += vals[j] * _vinv[j * n + i];
      t(0, p, dof_offset + i, value_offset) = v;
      if (nderiv)
      {
        for (int k = 0; k < tdim; ++k)
        {
          double g = 0.0;
          for (int j = 0; j < n; ++j)
            g += grads[j * tdim + k] * _vinv[j * n + i];
          t(1 + k, p, dof_offset + i, value_offset) = g;
        }
      }
    }
  }
}
//-----------------------------------------------------------------------------
