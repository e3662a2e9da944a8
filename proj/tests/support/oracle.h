// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#pragma once

// Brute-force element tensors computed by walking the form expression at
// every quadrature point, one (i, j) pair at a time. Independent of the
// kernel compiler: no tape, no shared tables, facet points mapped into the
// '-' cell by inverting its affine map.

#include <femkit/compiler.h>
#include <femkit/element.h>
#include <femkit/error.h>
#include <femkit/form.h>
#include <femkit/mesh.h>
#include <femkit/quadrature.h>

#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

namespace oracle
{
using femkit::fl::Expr;
using femkit::fl::Op;

struct Comp
{
  double v = 0.0;
  std::array<double, 3> d{0, 0, 0};
};
using Value = std::vector<Comp>;

struct Inputs
{
  /// coefficient id -> local dof values ('+' then '-' for interior facets)
  std::map<int, std::vector<double>> coefficients;
  /// coefficient id -> evaluator for point coefficients
  std::map<int, const femkit::GenericFunction*> functions;
  /// constant overrides
  std::map<std::string, double> constants;
};

struct Side
{
  femkit::CellGeometry geo;
  std::vector<double> X;
};

class Evaluator
{
public:
  int gdim = 2;
  int tdim = 2;
  std::array<Side, 2> sides;
  std::array<double, 3> x{0, 0, 0};
  std::array<double, 3> n{0, 0, 0};
  std::array<int, 2> dof{0, 0};
  bool interior = false;
  const Inputs* inputs = nullptr;
  /// basis tables at the current point
  std::map<std::pair<const femkit::FiniteElement*, int>, femkit::Tabulation> cache;

  Value eval(const Expr& e, int side)
  {
    const auto& o = e->operands;
    Value r;
    switch (e->op)
    {
    case Op::argument:
    {
      const auto& el = *e->element;
      int i = dof[e->index];
      const int nd = el.space_dim();
      bool active = true;
      if (interior)
      {
        active = (side == 0) == (i < nd);
        if (side == 1)
          i -= nd;
      }
      for (int c = 0; c < e->value_size(); ++c)
      {
        Comp k;
        if (active)
          basis(el, side, i, e->value_offset + c, k);
        r.push_back(k);
      }
      return r;
    }
    case Op::coefficient:
    {
      if (!e->element)
      {
        std::vector<double> vals(e->value_size());
        inputs->functions.at(e->index)->eval({x.data(), std::size_t(gdim)}, vals);
        for (double v : vals)
          r.push_back(Comp{v, {0, 0, 0}});
        return r;
      }
      const auto& el = *e->element;
      const auto& w = inputs->coefficients.at(e->index);
      const int nd = el.space_dim();
      for (int c = 0; c < e->value_size(); ++c)
      {
        Comp s;
        for (int i = 0; i < nd; ++i)
        {
          Comp b;
          basis(el, side, i, e->value_offset + c, b);
          const double wi = w[side * nd + i];
          s.v += wi * b.v;
          for (int k = 0; k < 3; ++k)
            s.d[k] += wi * b.d[k];
        }
        r.push_back(s);
      }
      return r;
    }
    case Op::constant:
    {
      double v = e->value;
      if (!e->name.empty() and inputs->constants.count(e->name))
        v = inputs->constants.at(e->name);
      return {Comp{v, {0, 0, 0}}};
    }
    case Op::spatial_coordinate:
      for (int k = 0; k < gdim; ++k)
      {
        Comp c{x[k], {0, 0, 0}};
        c.d[k] = 1.0;
        r.push_back(c);
      }
      return r;
    case Op::facet_normal:
      for (int k = 0; k < gdim; ++k)
        r.push_back(Comp{side == 1 ? -n[k] : n[k], {0, 0, 0}});
      return r;
    case Op::cell_size: return {Comp{sides[side].geo.h, {0, 0, 0}}};
    case Op::grad:
      for (const auto& c : eval(o[0], side))
        for (int k = 0; k < gdim; ++k)
          r.push_back(Comp{c.d[k], {0, 0, 0}});
      return r;
    case Op::div:
    {
      const Value a = eval(o[0], side);
      for (std::size_t p = 0; p < a.size() / gdim; ++p)
      {
        double s = 0.0;
        for (int k = 0; k < gdim; ++k)
          s += a[p * gdim + k].d[k];
        r.push_back(Comp{s, {0, 0, 0}});
      }
      return r;
    }
    case Op::inner:
    {
      const Value a = eval(o[0], side), b = eval(o[1], side);
      Comp s;
      for (std::size_t i = 0; i < a.size(); ++i)
        s = add(s, mul(a[i], b[i]));
      return {s};
    }
    case Op::dot:
    {
      const Value a = eval(o[0], side), b = eval(o[1], side);
      const std::size_t m = o[0]->shape.back();
      const std::size_t nb = b.size() / m;
      for (std::size_t p = 0; p < a.size() / m; ++p)
        for (std::size_t q = 0; q < nb; ++q)
        {
          Comp s;
          for (std::size_t l = 0; l < m; ++l)
            s = add(s, mul(a[p * m + l], b[l * nb + q]));
          r.push_back(s);
        }
      return r;
    }
    case Op::sum:
    {
      const Value a = eval(o[0], side), b = eval(o[1], side);
      for (std::size_t i = 0; i < a.size(); ++i)
        r.push_back(add(a[i], b[i]));
      return r;
    }
    case Op::product:
    {
      const Value a = eval(o[0], side), b = eval(o[1], side);
      if (a.size() == 1)
        for (const auto& c : b)
          r.push_back(mul(a[0], c));
      else
        for (const auto& c : a)
          r.push_back(mul(c, b[0]));
      return r;
    }
    case Op::division:
    {
      const Value a = eval(o[0], side), b = eval(o[1], side);
      for (const auto& c : a)
      {
        Comp q{c.v / b[0].v, {0, 0, 0}};
        for (int k = 0; k < 3; ++k)
          q.d[k] = (c.d[k] * b[0].v - c.v * b[0].d[k]) / (b[0].v * b[0].v);
        r.push_back(q);
      }
      return r;
    }
    case Op::negation:
      for (auto c : eval(o[0], side))
      {
        c.v = -c.v;
        for (auto& d : c.d)
          d = -d;
        r.push_back(c);
      }
      return r;
    case Op::power:
    {
      const Comp a = eval(o[0], side)[0];
      const double p = e->value;
      Comp c{std::pow(a.v, p), {0, 0, 0}};
      const double f = p == 0.0 ? 0.0 : p * std::pow(a.v, p - 1.0);
      for (int k = 0; k < 3; ++k)
        c.d[k] = f * a.d[k];
      return {c};
    }
    case Op::call:
    {
      const Comp a = eval(o[0], side)[0];
      double v = 0.0, f = 0.0;
      switch (e->fn)
      {
      case femkit::fl::MathFunction::sin: v = std::sin(a.v), f = std::cos(a.v); break;
      case femkit::fl::MathFunction::cos: v = std::cos(a.v), f = -std::sin(a.v); break;
      case femkit::fl::MathFunction::exp: v = f = std::exp(a.v); break;
      case femkit::fl::MathFunction::sqrt: v = std::sqrt(a.v), f = 0.5 / v; break;
      case femkit::fl::MathFunction::abs:
        v = std::abs(a.v), f = a.v > 0 ? 1.0 : a.v < 0 ? -1.0 : 0.0;
        break;
      }
      Comp c{v, {0, 0, 0}};
      for (int k = 0; k < 3; ++k)
        c.d[k] = f * a.d[k];
      return {c};
    }
    case Op::indexed:
    {
      const Value a = eval(o[0], side);
      const std::size_t stride = a.size() / o[0]->shape[0];
      return Value(a.begin() + e->index * stride, a.begin() + (e->index + 1) * stride);
    }
    case Op::restricted:
      return eval(o[0], e->side == femkit::fl::Side::minus ? 1 : 0);
    }
    throw std::runtime_error("oracle: unknown node");
  }

private:
  static Comp add(const Comp& a, const Comp& b)
  {
    Comp c{a.v + b.v, {0, 0, 0}};
    for (int k = 0; k < 3; ++k)
      c.d[k] = a.d[k] + b.d[k];
    return c;
  }
  static Comp mul(const Comp& a, const Comp& b)
  {
    Comp c{a.v * b.v, {0, 0, 0}};
    for (int k = 0; k < 3; ++k)
      c.d[k] = a.d[k] * b.v + a.v * b.d[k];
    return c;
  }

  void basis(const femkit::FiniteElement& el, int side, int i, int comp, Comp& out)
  {
    const auto& s = sides[side];
    auto key = std::make_pair(&el, side);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, el.tabulate_unchecked(1, s.X)).first;
    const auto& t = it->second;
    out.v = t(0, 0, i, comp);
    for (int k = 0; k < gdim; ++k)
    {
      double d = 0.0;
      for (int l = 0; l < tdim; ++l)
        d += s.geo.K[l * gdim + k] * t(1 + l, 0, i, comp);
      out.d[k] = d;
    }
  }
};

/// Reference point of physical point x in a cell (tdim == gdim).
inline std::vector<double> pull_back(const femkit::CellGeometry& g, const double* x)
{
  std::vector<double> X(g.tdim, 0.0);
  for (int l = 0; l < g.tdim; ++l)
    for (int k = 0; k < g.gdim; ++k)
      X[l] += g.K[l * g.gdim + k] * (x[k] - g.x0[k]);
  return X;
}

/// Element tensor of one integral kind of a form (all integrals of that
/// kind and subdomain are summed). Coordinates: '+' cell then '-' cell.
inline std::vector<double>
tensor(const femkit::fl::Form& form, femkit::fl::Measure measure, int subdomain,
       femkit::cell::Type ct, int gdim, const std::vector<double>& coords,
       std::array<int, 2> local_facet, const Inputs& inputs, int degree_bump = 4)
{
  using namespace femkit;
  const int tdim = cell::topological_dimension(ct);
  const int nv = tdim + 1;
  const bool interior = measure == fl::Measure::interior_facet;
  const int nsides = interior ? 2 : 1;
  const auto md = fl::check_form(form);
  const int rank = md.rank;

  std::array<int, 2> N{1, 1};
  for (int r = 0; r < rank; ++r)
    N[r] = md.arguments[r]->element->space_dim() * nsides;

  Evaluator ev;
  ev.gdim = gdim;
  ev.tdim = tdim;
  ev.interior = interior;
  ev.inputs = &inputs;
  for (int s = 0; s < nsides; ++s)
    ev.sides[s].geo = cell_geometry(
        std::span<const double>(coords).subspan(s * nv * gdim, nv * gdim), tdim, gdim);

  std::vector<double> A(static_cast<std::size_t>(N[0]) * N[1], 0.0);
  for (std::size_t it = 0; it < form.integrals().size(); ++it)
  {
    const auto& itg = form.integrals()[it];
    if (itg.measure != measure or itg.subdomain != subdomain)
      continue;
    const int deg = std::min(md.degrees[it] + degree_bump, 20);

    // physical points and weights
    std::vector<double> xs, ws;
    if (measure == fl::Measure::cell)
    {
      const auto rule = quadrature::make_rule(ct, deg);
      for (std::size_t q = 0; q < rule.size(); ++q)
      {
        for (int k = 0; k < gdim; ++k)
        {
          double v = ev.sides[0].geo.x0[k];
          for (int l = 0; l < tdim; ++l)
            v += ev.sides[0].geo.J[k * tdim + l] * rule.point(q)[l];
          xs.push_back(v);
        }
        ws.push_back(rule.weights[q] * std::abs(ev.sides[0].geo.detJ));
      }
    }
    else
    {
      const auto rule = quadrature::make_rule(tdim - 1, deg);
      const auto& fv = cell::sub_entity_vertices(ct, tdim - 1)[local_facet[0]];
      const auto fg = facet_geometry(std::span<const double>(coords).subspan(0, nv * gdim),
                                     tdim, gdim, local_facet[0]);
      ev.n = fg.normal;
      // facet measure / reference facet measure
      const double scale
          = tdim == 1 ? 1.0 : fg.area / cell::reference_volume(cell::simplex(tdim - 1));
      for (std::size_t q = 0; q < rule.size(); ++q)
      {
        std::vector<double> lam(tdim, 0.0);
        double s = 0.0;
        for (int j = 1; j < tdim; ++j)
          s += lam[j] = rule.point(q)[j - 1];
        lam[0] = 1.0 - s;
        for (int k = 0; k < gdim; ++k)
        {
          double v = 0.0;
          for (int m = 0; m < tdim; ++m)
            v += lam[m] * coords[fv[m] * gdim + k];
          xs.push_back(v);
        }
        ws.push_back(rule.weights[q] * scale);
      }
    }

    for (std::size_t q = 0; q < ws.size(); ++q)
    {
      for (int k = 0; k < gdim; ++k)
        ev.x[k] = xs[q * gdim + k];
      for (int s = 0; s < nsides; ++s)
        ev.sides[s].X = pull_back(ev.sides[s].geo, &xs[q * gdim]);
      ev.cache.clear();
      for (int i = 0; i < N[0]; ++i)
        for (int j = 0; j < N[1]; ++j)
        {
          ev.dof = {i, j};
          A[static_cast<std::size_t>(i) * N[1] + j] += ws[q] * ev.eval(itg.integrand, 0)[0].v;
        }
    }
  }
  return A;
}

} // namespace oracle

#include <femkit/expression.h>
#include <memory>
#include <random>

namespace oracle
{

/// Random affine cell with |detJ| bounded away from zero.
inline std::vector<double> random_cell(femkit::cell::Type ct, int gdim, std::mt19937& rng)
{
  const int tdim = femkit::cell::topological_dimension(ct);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  while (true)
  {
    std::vector<double> x((tdim + 1) * gdim);
    for (auto& v : x)
      v = U(rng);
    try
    {
      const auto g = femkit::cell_geometry(x, tdim, gdim);
      if (std::abs(g.detJ) > 0.05)
        return x;
    }
    catch (const femkit::Error&)
    {
    }
  }
}

/// Two cells sharing a facet: the '+' cell is random, the '-' cell holds
/// the same facet vertices plus a point on the other side, in a shuffled
/// vertex order.
inline std::vector<double> random_pair(femkit::cell::Type ct, int gdim, std::mt19937& rng,
                                       std::array<int, 2>& lf)
{
  using namespace femkit;
  const int tdim = cell::topological_dimension(ct);
  const int nv = tdim + 1;
  std::uniform_int_distribution<int> F(0, tdim);
  std::uniform_real_distribution<double> U(0.2, 1.0);
  while (true)
  {
    auto plus = random_cell(ct, gdim, rng);
    lf[0] = F(rng);
    const auto& fv = cell::sub_entity_vertices(ct, tdim - 1)[lf[0]];
    const int opp = cell::facet_opposite_vertex(ct, lf[0]);
    // reflect the opposite vertex through the facet centroid, with noise
    std::vector<double> c(gdim, 0.0);
    for (int v : fv)
      for (int k = 0; k < gdim; ++k)
        c[k] += plus[v * gdim + k] / tdim;
    std::vector<std::vector<double>> verts;
    for (int v : fv)
      verts.emplace_back(plus.begin() + v * gdim, plus.begin() + (v + 1) * gdim);
    std::vector<double> p(gdim);
    for (int k = 0; k < gdim; ++k)
      p[k] = c[k] - U(rng) * (plus[opp * gdim + k] - c[k]) + 0.1 * (U(rng) - 0.6);
    verts.push_back(p);
    std::vector<int> order(nv);
    for (int i = 0; i < nv; ++i)
      order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<double> minus(nv * gdim);
    for (int i = 0; i < nv; ++i)
      for (int k = 0; k < gdim; ++k)
        minus[i * gdim + k] = verts[order[i]][k];
    // local facet of the '-' cell: opposite the new point
    for (int i = 0; i < nv; ++i)
      if (order[i] == tdim)
        for (int f = 0; f < nv; ++f)
          if (cell::facet_opposite_vertex(ct, f) == i)
            lf[1] = f;
    try
    {
      const auto g = cell_geometry(minus, tdim, gdim);
      if (std::abs(g.detJ) < 0.02)
        continue;
      // the new point must lie on the far side of the facet
      const auto fg = facet_geometry(plus, tdim, gdim, lf[0]);
      double s = 0.0;
      for (int k = 0; k < gdim; ++k)
        s += (p[k] - c[k]) * fg.normal[k];
      if (s <= 0.01)
        continue;
    }
    catch (const Error&)
    {
      continue;
    }
    plus.insert(plus.end(), minus.begin(), minus.end());
    return plus;
  }
}

/// Maximum difference between compiled kernels and the oracle over
/// `ncells` random cells (or cell pairs), relative to max(1, |A|max).
/// Point coefficients without an evaluator in `functions` get a smooth
/// default.
inline double compare(const femkit::fl::Form& form, const femkit::CompiledForm& cf,
                      std::mt19937& rng, int ncells,
                      std::map<int, std::shared_ptr<const femkit::GenericFunction>> functions = {})
{
  using namespace femkit;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  for (const auto& k : cf.kernels)
  {
    const int tdim = cell::topological_dimension(k.cell);
    const int gdim = k.gdim;
    const bool interior = k.kind == IntegralKind::interior_facet;
    const int nsides = interior ? 2 : 1;
    for (int pc : k.point_coefficients)
    {
      const auto& ci = cf.coefficients[pc];
      if (functions.count(ci.id))
        continue;
      const int m = ci.value_size;
      functions[ci.id] = std::make_shared<Expression>(
          [m, gdim](const double* x, double* v)
          {
            for (int c = 0; c < m; ++c)
              v[c] = 1.0 + (c + 1) * x[0] * x[0] - 0.5 * x[gdim - 1] * (c + 0.5);
          },
          m, gdim);
    }
    for (int t = 0; t < ncells; ++t)
    {
      TabulateArgs args;
      std::vector<double> coords;
      std::array<int, 2> lf{-1, -1};
      std::uniform_int_distribution<int> F(0, tdim);
      if (interior)
        coords = random_pair(k.cell, gdim, rng, lf);
      else
      {
        coords = random_cell(k.cell, gdim, rng);
        if (k.kind == IntegralKind::exterior_facet)
          lf[0] = F(rng);
      }
      Inputs in;
      std::vector<double> w;
      for (std::size_t c = 0; c < k.coefficients.size(); ++c)
      {
        const auto& ci = cf.coefficients[k.coefficients[c]];
        std::vector<double> vals(ci.element->space_dim() * nsides);
        for (auto& v : vals)
          v = U(rng);
        in.coefficients[ci.id] = vals;
        w.insert(w.end(), vals.begin(), vals.end());
      }
      std::vector<const GenericFunction*> pcs;
      for (int pc : k.point_coefficients)
      {
        const auto* f = functions.at(cf.coefficients[pc].id).get();
        pcs.push_back(f);
        in.functions[cf.coefficients[pc].id] = f;
      }
      std::vector<double> cv;
      for (int c : k.constants)
        cv.push_back(cf.constants[c].value);
      args.coordinates = coords;
      args.coefficients = w;
      args.point_coefficients = pcs;
      args.constants = cv;
      args.local_facet = lf;
      if (interior)
        args.permutation = Kernel::facet_permutation(coords, k.cell, gdim, lf);
      std::vector<double> A(k.size(), 0.0);
      k.tabulate_tensor(A, args);
      const auto B = tensor(form, static_cast<fl::Measure>(k.kind), k.subdomain, k.cell,
                            gdim, coords, lf, in);
      if (A.size() != B.size())
        return 1e300;
      double amax = 1.0;
      for (double v : B)
        amax = std::max(amax, std::abs(v));
      for (std::size_t i = 0; i < A.size(); ++i)
        worst = std::max(worst, std::abs(A[i] - B[i]) / amax);
    }
  }
  return worst;
}

} // namespace oracle
