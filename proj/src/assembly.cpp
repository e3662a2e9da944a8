// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/assembly.h>
#include <femkit/error.h>
#include <femkit/log.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>

using namespace femkit;

namespace
{
CompileOptions compile_options(const AssemblyOptions& o)
{
  CompileOptions co;
  co.degree = o.quadrature_degree;
  return co;
}

/// One integration entity: a cell, an exterior facet (cell, local facet)
/// or an interior facet ('+' and '-' cells).
struct Entity
{
  std::size_t index = 0;
  std::array<std::int32_t, 2> cells{-1, -1};
  std::array<int, 2> local_facet{-1, -1};
};

std::vector<Entity> integration_entities(const Mesh& mesh, IntegralKind kind)
{
  std::vector<Entity> out;
  const int tdim = mesh.tdim();
  if (kind == IntegralKind::cell)
  {
    out.resize(mesh.num_cells());
    for (std::size_t c = 0; c < out.size(); ++c)
    {
      out[c].index = c;
      out[c].cells[0] = static_cast<std::int32_t>(c);
    }
    return out;
  }
  const auto& fc = mesh.connectivity(tdim - 1, tdim);
  for (std::size_t f = 0; f < fc.num_nodes(); ++f)
  {
    auto cells = fc.links(f);
    if (cells.size() > 2)
      throw Error(ErrorKind::NonManifold, "facet " + std::to_string(f) + " has more than two cells");
    const bool interior = cells.size() == 2;
    if (interior != (kind == IntegralKind::interior_facet))
      continue;
    Entity e;
    e.index = f;
    e.cells[0] = cells[0];
    if (interior)
    {
      e.cells[0] = std::min(cells[0], cells[1]);
      e.cells[1] = std::max(cells[0], cells[1]);
    }
    for (int s = 0; s < (interior ? 2 : 1); ++s)
      e.local_facet[s] = local_facet_index(mesh, e.cells[s], f);
    out.push_back(e);
  }
  return out;
}

bool same_element(const FiniteElement& a, const FiniteElement& b)
{
  return &a == &b or a.descriptor() == b.descriptor();
}

struct Workspace
{
  std::vector<double> coords;
  std::vector<double> cell_coords;
  std::vector<double> w;
  std::vector<double> consts;
  std::vector<const GenericFunction*> pcs;
};

/// A compiled form bound to a mesh, spaces and coefficient values.
class BoundForm
{
public:
  BoundForm(const CompiledForm& form,
            const std::vector<std::shared_ptr<const FunctionSpace>>& spaces,
            const Mesh& mesh, const Bindings& bindings, const AssemblyOptions& opt)
      : _form(form), _mesh(mesh), _opt(opt)
  {
    if (static_cast<int>(spaces.size()) < form.rank)
    {
      throw Error(ErrorKind::InvalidArgument,
                  "form of rank " + std::to_string(form.rank) + " needs "
                      + std::to_string(form.rank) + " function spaces");
    }
    for (int r = 0; r < form.rank; ++r)
    {
      const auto& V = spaces[r];
      if (&V->mesh() != &mesh)
        throw Error(ErrorKind::MeshMismatch, "function spaces live on different meshes");
      if (!same_element(V->element(), *form.arguments[r]))
      {
        throw Error(ErrorKind::ShapeMismatch,
                    "space element " + V->element().descriptor().str()
                        + " does not match form argument "
                        + form.arguments[r]->descriptor().str());
      }
      if (V->is_subspace())
        throw Error(ErrorKind::InvalidArgument, "cannot assemble on a sub-space view");
      _dofmaps.push_back(&V->dofmap());
    }
    for (const auto& k : form.kernels)
    {
      if (k.cell != mesh.cell_type())
      {
        throw Error(ErrorKind::ShapeMismatch,
                    "form on " + cell::to_string(k.cell) + " cells, mesh of "
                        + cell::to_string(mesh.cell_type()) + " cells");
      }
      if (k.gdim != mesh.gdim())
        throw Error(ErrorKind::ShapeMismatch, "form and mesh geometric dimensions differ");
      if (k.subdomain >= 0)
      {
        const bool cellk = k.kind == IntegralKind::cell;
        const auto* m = cellk ? opt.cell_markers : opt.facet_markers;
        if (!m)
        {
          throw Error(ErrorKind::InvalidArgument,
                      std::string("integral over subdomain ") + std::to_string(k.subdomain)
                          + " needs " + (cellk ? "cell" : "facet") + " markers");
        }
        const std::size_t n = mesh.num_entities(cellk ? mesh.tdim() : mesh.tdim() - 1);
        if (m->size() != n)
          throw Error(ErrorKind::ShapeMismatch, "marker size does not match the mesh");
      }
    }

    for (const auto& ci : form.coefficients)
    {
      auto it = bindings.functions.find(ci.name);
      if (it == bindings.functions.end() or !it->second)
        throw Error(ErrorKind::UnboundCoefficient, "coefficient '" + ci.name + "' is not bound");
      const GenericFunction* f = it->second.get();
      if (f->value_size() != ci.value_size)
      {
        throw Error(ErrorKind::ShapeMismatch,
                    "coefficient '" + ci.name + "' has value size "
                        + std::to_string(ci.value_size) + ", bound function "
                        + std::to_string(f->value_size()));
      }
      const Function* direct = nullptr;
      if (auto* fn = dynamic_cast<const Function*>(f); fn and ci.element)
      {
        if (&fn->function_space().mesh() == &mesh
            and same_element(fn->function_space().element(), *ci.element))
          direct = fn;
      }
      _functions.push_back(f);
      _direct.push_back(direct);
    }
    for (const auto& c : form.constants)
    {
      auto it = bindings.constants.find(c.name);
      _constants.push_back(it == bindings.constants.end() ? c.value : it->second);
    }
  }

  const CompiledForm& form() const { return _form; }

  /// Kernels of one kind that apply to the entity.
  bool applies(const Kernel& k, const Entity& e) const
  {
    if (k.subdomain < 0)
      return true;
    if (k.kind == IntegralKind::cell)
      return (*_opt.cell_markers)[e.index] == k.subdomain;
    return (*_opt.facet_markers)[e.index] == k.subdomain;
  }

  bool has_kind(IntegralKind kind) const
  {
    for (const auto& k : _form.kernels)
      if (k.kind == kind)
        return true;
    return false;
  }

  /// Local tensor size for entities of a kind.
  std::size_t local_size(IntegralKind kind) const
  {
    const int m = kind == IntegralKind::interior_facet ? 2 : 1;
    std::size_t n = 1;
    for (int r = 0; r < _form.rank; ++r)
      n *= static_cast<std::size_t>(m * _form.arguments[r]->space_dim());
    return n;
  }

  /// Global dofs of argument slot r on the entity (macro order).
  void dofs(const Entity& e, IntegralKind kind, int r, std::vector<std::int32_t>& out) const
  {
    out.clear();
    for (int s = 0; s < (kind == IntegralKind::interior_facet ? 2 : 1); ++s)
    {
      auto d = _dofmaps[r]->cell_dofs(e.cells[s]);
      out.insert(out.end(), d.begin(), d.end());
    }
  }

  /// A = sum of all applicable kernels of the kind. Returns false if none
  /// applied.
  bool tabulate(const Entity& e, IntegralKind kind, std::span<double> A, Workspace& ws) const
  {
    std::fill(A.begin(), A.end(), 0.0);
    const bool interior = kind == IntegralKind::interior_facet;
    const int nsides = interior ? 2 : 1;
    bool any = false;
    bool have_coords = false;
    int perm = 0;
    for (const auto& k : _form.kernels)
    {
      if (k.kind != kind or !applies(k, e))
        continue;
      if (!have_coords)
      {
        ws.coords.clear();
        for (int s = 0; s < nsides; ++s)
        {
          auto x = _mesh.cell_coordinates(e.cells[s]);
          ws.coords.insert(ws.coords.end(), x.begin(), x.end());
        }
        if (interior)
          perm = Kernel::facet_permutation(ws.coords, k.cell, k.gdim, e.local_facet);
        have_coords = true;
      }
      // coefficient values
      ws.w.clear();
      const std::size_t block = ws.coords.size() / nsides;
      for (int ci : k.coefficients)
      {
        const auto& info = _form.coefficients[ci];
        const int n = info.element->space_dim();
        for (int s = 0; s < nsides; ++s)
        {
          const std::size_t at = ws.w.size();
          ws.w.resize(at + n);
          std::span<double> dst(ws.w.data() + at, n);
          if (_direct[ci])
            _direct[ci]->cell_coefficients(e.cells[s], dst);
          else
          {
            std::span<const double> x(ws.coords.data() + s * block, block);
            interpolate_cell(*_functions[ci], *info.element, _mesh, e.cells[s], x, dst);
          }
        }
      }
      ws.pcs.clear();
      for (int pc : k.point_coefficients)
        ws.pcs.push_back(_functions[pc]);
      ws.consts.clear();
      for (int c : k.constants)
        ws.consts.push_back(_constants[c]);

      TabulateArgs args;
      args.coordinates = ws.coords;
      args.coefficients = ws.w;
      args.point_coefficients = ws.pcs;
      args.constants = ws.consts;
      args.local_facet = e.local_facet;
      args.permutation = perm;
      args.mesh = &_mesh;
      args.cell = static_cast<std::size_t>(e.cells[0]);
      k.tabulate_tensor(A, args);
      any = true;
    }
    return any;
  }

private:
  const CompiledForm& _form;
  const Mesh& _mesh;
  const AssemblyOptions& _opt;
  std::vector<const DofMap*> _dofmaps;
  std::vector<const GenericFunction*> _functions;
  std::vector<const Function*> _direct;
  std::vector<double> _constants;
};

int thread_count(const AssemblyOptions& opt)
{
  if (!opt.parallel)
    return 1;
  int n = opt.threads > 0 ? opt.threads : static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

/// Element tensors of all entities, computed on `nthreads` threads.
/// flags[i] is 0 where no kernel applied.
void tabulate_all(const BoundForm& form, const std::vector<Entity>& ents, IntegralKind kind,
                  int nthreads, std::vector<double>& tensors, std::vector<char>& flags)
{
  const std::size_t n = form.local_size(kind);
  tensors.assign(ents.size() * n, 0.0);
  flags.assign(ents.size(), 0);
  auto work = [&](std::size_t begin, std::size_t end)
  {
    Workspace ws;
    for (std::size_t i = begin; i < end; ++i)
      flags[i] = form.tabulate(ents[i], kind, {tensors.data() + i * n, n}, ws);
  };
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(nthreads), ents.size());
  if (nt <= 1)
  {
    work(0, ents.size());
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nt);
  const std::size_t chunk = (ents.size() + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t)
  {
    pool.emplace_back(
        [&, t]
        {
          try
          {
            work(t * chunk, std::min(ents.size(), (t + 1) * chunk));
          }
          catch (...)
          {
            errors[t] = std::current_exception();
          }
        });
  }
  for (auto& th : pool)
    th.join();
  for (auto& e : errors)
    if (e)
      std::rethrow_exception(e);
}

constexpr IntegralKind all_kinds[]
    = {IntegralKind::cell, IntegralKind::exterior_facet, IntegralKind::interior_facet};
} // namespace

//-----------------------------------------------------------------------------
void femkit::assemble(la::GenericTensor& A, const CompiledForm& form,
                      const std::vector<std::shared_ptr<const FunctionSpace>>& spaces,
                      const Mesh& mesh, const Bindings& bindings,
                      const AssemblyOptions& options)
{
  if (A.rank() != form.rank)
  {
    throw Error(ErrorKind::ShapeMismatch, "tensor of rank " + std::to_string(A.rank())
                                              + " for a form of rank "
                                              + std::to_string(form.rank));
  }
  BoundForm bound(form, spaces, mesh, bindings, options);
  A.zero();
  const int nthreads = thread_count(options);
  std::vector<double> tensors;
  std::vector<char> flags;
  std::array<std::vector<std::int32_t>, 2> dofs;
  for (auto kind : all_kinds)
  {
    if (!bound.has_kind(kind))
      continue;
    const auto ents = integration_entities(mesh, kind);
    tabulate_all(bound, ents, kind, nthreads, tensors, flags);
    const std::size_t n = bound.local_size(kind);
    for (std::size_t i = 0; i < ents.size(); ++i)
    {
      if (!flags[i])
        continue;
      std::array<std::span<const std::int32_t>, 2> idx;
      for (int r = 0; r < form.rank; ++r)
      {
        bound.dofs(ents[i], kind, r, dofs[r]);
        idx[r] = dofs[r];
      }
      A.add_local(tensors.data() + i * n, {idx.data(), static_cast<std::size_t>(form.rank)});
    }
  }
  A.finalize();
}
//-----------------------------------------------------------------------------
std::shared_ptr<const la::SparsityPattern>
femkit::create_pattern(const CompiledForm& form, const FunctionSpace& test,
                       const FunctionSpace& trial)
{
  return sparsity_pattern(test.mesh(), test.dofmap(), trial.dofmap(),
                          form.has_interior_facets());
}
//-----------------------------------------------------------------------------
std::unique_ptr<la::GenericTensor>
femkit::assemble(const CompiledForm& form,
                 const std::vector<std::shared_ptr<const FunctionSpace>>& spaces,
                 const Mesh& mesh, const Bindings& bindings,
                 const AssemblyOptions& options)
{
  std::unique_ptr<la::GenericTensor> A;
  if (form.rank == 2)
  {
    if (spaces.size() < 2)
      throw Error(ErrorKind::InvalidArgument, "bilinear form needs two function spaces");
    A = la::create_tensor(2, create_pattern(form, *spaces[0], *spaces[1]));
  }
  else if (form.rank == 1)
  {
    if (spaces.empty())
      throw Error(ErrorKind::InvalidArgument, "linear form needs a function space");
    A = la::create_tensor(1, nullptr, spaces[0]->dim());
  }
  else
    A = la::create_tensor(0);
  assemble(*A, form, spaces, mesh, bindings, options);
  return A;
}
//-----------------------------------------------------------------------------
double femkit::assemble_scalar(const fl::Form& form, const Mesh& mesh,
                               const Bindings& bindings, const AssemblyOptions& options)
{
  CompileOptions co;
  co.tdim = mesh.tdim();
  co.gdim = mesh.gdim();
  co.degree = options.quadrature_degree;
  const auto cf = compile_form(form, co);
  if (cf.rank != 0)
    throw Error(ErrorKind::MixedRanks, "expected a functional (rank 0)");
  la::Scalar s;
  assemble(s, cf, {}, mesh, bindings, options);
  return s.value();
}
//-----------------------------------------------------------------------------
la::Vector femkit::assemble_vector(const fl::Form& form, std::shared_ptr<const FunctionSpace> V,
                                   const Bindings& bindings, const AssemblyOptions& options)
{
  const auto cf = compile_form(form, compile_options(options));
  if (cf.rank != 1)
    throw Error(ErrorKind::MixedRanks, "expected a linear form (rank 1)");
  la::Vector b(V->dim());
  assemble(b, cf, {V}, V->mesh(), bindings, options);
  return b;
}
//-----------------------------------------------------------------------------
la::Matrix femkit::assemble_matrix(const fl::Form& form, std::shared_ptr<const FunctionSpace> V,
                                   std::shared_ptr<const FunctionSpace> W,
                                   const Bindings& bindings, const AssemblyOptions& options)
{
  if (!W)
    W = V;
  const auto cf = compile_form(form, compile_options(options));
  if (cf.rank != 2)
    throw Error(ErrorKind::MixedRanks, "expected a bilinear form (rank 2)");
  if (&V->mesh() != &W->mesh())
    throw Error(ErrorKind::MeshMismatch, "test and trial spaces live on different meshes");
  la::Matrix A(create_pattern(cf, *V, *W));
  assemble(A, cf, {V, W}, V->mesh(), bindings, options);
  return A;
}
//-----------------------------------------------------------------------------
Region femkit::domain_boundary()
{
  return [](std::span<const double>, bool on_boundary) { return on_boundary; };
}
//-----------------------------------------------------------------------------
DirichletBC::DirichletBC(std::shared_ptr<const FunctionSpace> V,
                         std::shared_ptr<const GenericFunction> g, Region region,
                         Method method)
    : _space(std::move(V)), _g(std::move(g))
{
  const Mesh& mesh = _space->mesh();
  const int tdim = mesh.tdim();
  const auto boundary = exterior_facets(mesh);
  if (method == Method::topological)
  {
    MeshFunction<bool> marked(mesh, tdim - 1, false);
    const auto& fv = mesh.connectivity(tdim - 1, 0);
    for (std::size_t f = 0; f < marked.size(); ++f)
    {
      bool all = true;
      for (auto v : fv.links(f))
        all = all and region(mesh.vertex(v), boundary[f]);
      marked[f] = all;
    }
    compute_dofs(marked);
    return;
  }
  // pointwise: every dof of the (sub)space whose point satisfies the region;
  // boundary status is taken from the closure of exterior facets
  const auto on = _space->dofmap().boundary_dofs(mesh, boundary);
  const std::set<std::int32_t> on_set(on.begin(), on.end());
  const auto x = _space->dof_coordinates();
  const int gdim = mesh.gdim();
  const auto [begin, end] = _space->dofmap().range();
  std::set<std::int32_t> chosen;
  const auto& dm = _space->dofmap();
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (auto d : dm.cell_dofs(c))
      if (d >= begin and d < end)
      {
        std::span<const double> p(x.data() + static_cast<std::size_t>(d) * gdim, gdim);
        if (region(p, on_set.count(d) > 0))
          chosen.insert(d);
      }
  _dofs.assign(chosen.begin(), chosen.end());
  update();
}
//-----------------------------------------------------------------------------
DirichletBC::DirichletBC(std::shared_ptr<const FunctionSpace> V,
                         std::shared_ptr<const GenericFunction> g,
                         MeshFunction<int> markers, int id)
    : _space(std::move(V)), _g(std::move(g))
{
  const Mesh& mesh = _space->mesh();
  if (markers.dim() != mesh.tdim() - 1 or markers.size() != mesh.num_entities(mesh.tdim() - 1))
    throw Error(ErrorKind::ShapeMismatch, "boundary markers must live on the mesh facets");
  MeshFunction<bool> marked(mesh, mesh.tdim() - 1, false);
  for (std::size_t f = 0; f < marked.size(); ++f)
    marked[f] = markers[f] == id;
  compute_dofs(marked);
}
//-----------------------------------------------------------------------------
void DirichletBC::compute_dofs(const MeshFunction<bool>& facets)
{
  _dofs = _space->dofmap().boundary_dofs(_space->mesh(), facets);
  if (_dofs.empty())
    log::warning("Dirichlet condition on an empty boundary");
  update();
}
//-----------------------------------------------------------------------------
void DirichletBC::update()
{
  const Mesh& mesh = _space->mesh();
  const auto& dm = _space->dofmap();
  const auto& e = dm.element();
  if (_g->value_size() != e.value_size())
  {
    throw Error(ErrorKind::ShapeMismatch,
                "boundary value of size " + std::to_string(_g->value_size())
                    + " for a space of value size " + std::to_string(e.value_size()));
  }
  // evaluate g once per cell touching a constrained dof
  std::map<std::int32_t, std::size_t> pos;
  for (std::size_t i = 0; i < _dofs.size(); ++i)
    pos[_dofs[i]] = i;
  _values.assign(_dofs.size(), 0.0);
  std::vector<char> done(_dofs.size(), 0);
  std::size_t remaining = _dofs.size();
  const int n = e.space_dim();
  std::vector<double> local(n);
  for (std::size_t c = 0; c < mesh.num_cells() and remaining > 0; ++c)
  {
    auto dofs = dm.cell_dofs(c);
    bool needed = false;
    for (auto d : dofs)
    {
      auto it = pos.find(d);
      needed = needed or (it != pos.end() and !done[it->second]);
    }
    if (!needed)
      continue;
    const auto x = mesh.cell_coordinates(c);
    interpolate_cell(*_g, e, mesh, c, x, local);
    for (int i = 0; i < n; ++i)
    {
      auto it = pos.find(dofs[i]);
      if (it == pos.end() or done[it->second])
        continue;
      _values[it->second] = local[i];
      done[it->second] = 1;
      --remaining;
    }
  }
}
//-----------------------------------------------------------------------------
const std::vector<std::int32_t>& DirichletBC::dofs() const { return _dofs; }
//-----------------------------------------------------------------------------
const std::vector<double>& DirichletBC::values() const { return _values; }
//-----------------------------------------------------------------------------
void DirichletBC::apply(la::Matrix* A, la::Vector* b, const std::vector<double>* x) const
{
  for (std::size_t i = 0; i < _dofs.size(); ++i)
  {
    const auto d = static_cast<std::size_t>(_dofs[i]);
    if (A)
      A->ident_row(d);
    if (b)
      (*b)[d] = x ? _values[i] - (*x)[d] : _values[i];
  }
}
//-----------------------------------------------------------------------------
std::map<std::int32_t, double> femkit::collect_bcs(const std::vector<DirichletBC>& bcs)
{
  std::map<std::int32_t, double> out;
  for (const auto& bc : bcs)
    for (std::size_t i = 0; i < bc.dofs().size(); ++i)
      out[bc.dofs()[i]] = bc.values()[i];
  return out;
}
//-----------------------------------------------------------------------------
std::pair<la::Matrix, la::Vector>
femkit::assemble_system(const fl::Form& a, const fl::Form& L,
                        std::shared_ptr<const FunctionSpace> V,
                        const std::vector<DirichletBC>& bcs, const Bindings& bindings,
                        const AssemblyOptions& options)
{
  const auto ca = compile_form(a, compile_options(options));
  const auto cL = compile_form(L, compile_options(options));
  if (ca.rank != 2 or cL.rank != 1)
    throw Error(ErrorKind::MixedRanks, "assemble_system needs a bilinear and a linear form");
  for (const auto& bc : bcs)
    if (&bc.function_space().mesh() != &V->mesh())
      throw Error(ErrorKind::MeshMismatch, "boundary condition on another mesh");
  const Mesh& mesh = V->mesh();
  BoundForm ba(ca, {V, V}, mesh, bindings, options);
  BoundForm bL(cL, {V}, mesh, bindings, options);
  const auto g = collect_bcs(bcs);

  la::Matrix A(create_pattern(ca, *V, *V));
  la::Vector b(V->dim());
  A.zero();
  b.zero();
  const int nthreads = thread_count(options);
  std::vector<double> At, bt;
  std::vector<char> fa, fb;
  std::vector<std::int32_t> dofs;
  std::vector<double> Ae, be;
  for (auto kind : all_kinds)
  {
    if (!ba.has_kind(kind) and !bL.has_kind(kind))
      continue;
    const auto ents = integration_entities(mesh, kind);
    const std::size_t na = ba.local_size(kind), nb = bL.local_size(kind);
    if (ba.has_kind(kind))
      tabulate_all(ba, ents, kind, nthreads, At, fa);
    else
      fa.assign(ents.size(), 0);
    if (bL.has_kind(kind))
      tabulate_all(bL, ents, kind, nthreads, bt, fb);
    else
      fb.assign(ents.size(), 0);
    for (std::size_t e = 0; e < ents.size(); ++e)
    {
      if (!fa[e] and !fb[e])
        continue;
      ba.dofs(ents[e], kind, 0, dofs);
      const std::size_t n = dofs.size();
      Ae.assign(na, 0.0);
      be.assign(nb, 0.0);
      if (fa[e])
        std::copy_n(At.data() + e * na, na, Ae.data());
      if (fb[e])
        std::copy_n(bt.data() + e * nb, nb, be.data());
      for (std::size_t j = 0; j < n; ++j)
      {
        auto it = g.find(dofs[j]);
        if (it == g.end())
          continue;
        if (fa[e])
        {
          for (std::size_t i = 0; i < n; ++i)
            if (i != j)
              be[i] -= it->second * Ae[i * n + j];
          for (std::size_t i = 0; i < n; ++i)
            Ae[i * n + j] = Ae[j * n + i] = 0.0;
          Ae[j * n + j] = 1.0;
          be[j] = it->second;
        }
        else
          be[j] = 0.0;
      }
      std::span<const std::int32_t> d(dofs);
      std::array<std::span<const std::int32_t>, 2> idx{d, d};
      if (fa[e])
        A.add_local(Ae.data(), idx);
      b.add_local(be.data(), {idx.data(), 1});
    }
  }
  // constrained dofs that no bilinear kernel touched
  for (const auto& [d, v] : g)
  {
    if (A.get(d, d) == 0.0)
    {
      A.ident_row(d);
      b[d] = v;
    }
  }
  A.finalize();
  return {std::move(A), std::move(b)};
}
//-----------------------------------------------------------------------------
NewtonError::NewtonError(int iterations, std::vector<double> residuals)
    : Error(ErrorKind::NewtonNoConvergence,
            [&]
            {
              std::ostringstream s;
              s << "no convergence after " << iterations << " iterations; residuals";
              s.precision(3);
              for (double r : residuals)
                s << " " << std::scientific << r;
              return s.str();
            }()),
      _iterations(iterations), _residuals(std::move(residuals))
{
}
//-----------------------------------------------------------------------------
VariationalProblem::VariationalProblem(fl::Form a, fl::Form L,
                                       std::shared_ptr<const FunctionSpace> V,
                                       std::vector<DirichletBC> bcs)
    : _a(std::move(a)), _L(std::move(L)), _space(std::move(V)), _bcs(std::move(bcs))
{
}
//-----------------------------------------------------------------------------
VariationalProblem VariationalProblem::nonlinear(fl::Form F, const std::string& unknown,
                                                 std::shared_ptr<const FunctionSpace> V,
                                                 std::vector<DirichletBC> bcs,
                                                 std::optional<fl::Form> J)
{
  VariationalProblem p;
  p._nonlinear = true;
  p._unknown = unknown;
  p._space = std::move(V);
  p._bcs = std::move(bcs);
  p._L = std::move(F);
  if (J)
    p._a = std::move(*J);
  else
  {
    fl::Expr u;
    for (const auto& c : p._L.coefficients())
      if (c->name == unknown)
        u = c;
    if (!u)
      throw Error(ErrorKind::UnknownIdentifier, "residual does not use '" + unknown + "'");
    p._a = fl::derivative(p._L, u);
  }
  return p;
}
//-----------------------------------------------------------------------------
la::Method VariationalProblem::pick_method(std::size_t n) const
{
  if (method)
    return *method;
  if (fl::is_symmetric(_a))
    return la::Method::cg;
  return n <= la::max_lu_size ? la::Method::lu : la::Method::bicgstab;
}
//-----------------------------------------------------------------------------
Function VariationalProblem::solve()
{
  Function u(_space);
  solve(u);
  return u;
}
//-----------------------------------------------------------------------------
SolveReport VariationalProblem::solve(Function& u)
{
  if (&u.function_space().mesh() != &_space->mesh()
      or !same_element(u.function_space().element(), _space->element()))
    throw Error(ErrorKind::ShapeMismatch, "solution function is not on the problem space");
  SolveReport rep;
  la::SolverOptions opt = solver;
  opt.method = rep.method = pick_method(_space->dim());

  if (!_nonlinear)
  {
    auto [A, b] = assemble_system(_a, _L, _space, _bcs, bindings, assembly);
    la::Vector x(u.vector());
    const auto res = la::solve(A, b, x, opt);
    u.vector() = x.array();
    rep.linear_iterations = res.iterations;
    rep.linear_residual = res.residual;
    log::info("linear solve: " + la::to_string(opt.method) + ", "
              + std::to_string(res.iterations) + " iterations");
    return rep;
  }

  Bindings b = bindings;
  b.set(_unknown, std::shared_ptr<const GenericFunction>(&u, [](const GenericFunction*) {}));
  const auto cF = compile_form(_L, compile_options(assembly));
  const auto cJ = compile_form(_a, compile_options(assembly));
  if (cF.rank != 1 or cJ.rank != 2)
    throw Error(ErrorKind::MixedRanks, "Newton needs a residual of rank 1 and a Jacobian of rank 2");
  const auto pattern = create_pattern(cJ, *_space, *_space);
  const Mesh& mesh = _space->mesh();
  double r0 = 0.0;
  for (int k = 0;; ++k)
  {
    la::Vector r(_space->dim());
    assemble(r, cF, {_space}, mesh, b, assembly);
    for (auto& v : r.array())
      v = -v;
    la::Matrix J(pattern);
    assemble(J, cJ, {_space, _space}, mesh, b, assembly);
    for (const auto& bc : _bcs)
      bc.apply(&J, &r, &u.vector());
    const double rn = r.norm();
    rep.residuals.push_back(rn);
    if (k == 0)
      r0 = rn;
    std::ostringstream msg;
    msg << "Newton iteration " << k << ": residual " << rn;
    log::info(msg.str());
    if (rn <= std::max(newton.atol, newton.rtol * r0))
    {
      rep.newton_iterations = k;
      return rep;
    }
    if (k >= newton.maxit or !std::isfinite(rn))
      throw NewtonError(k, rep.residuals);
    la::Vector du(_space->dim());
    const auto res = la::solve(J, r, du, opt);
    rep.linear_iterations += res.iterations;
    rep.linear_residual = res.residual;
    for (std::size_t i = 0; i < du.size(); ++i)
      u.vector()[i] += du[i];
  }
}
//-----------------------------------------------------------------------------
NormKind femkit::norm_kind_from_string(const std::string& name)
{
  std::string n;
  for (char c : name)
    n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (n == "l2")
    return NormKind::L2;
  if (n == "h1")
    return NormKind::H1;
  if (n == "h10" or n == "h1_0" or n == "h1-0")
    return NormKind::H10;
  if (n == "hdiv")
    return NormKind::Hdiv;
  throw Error(ErrorKind::UnsupportedKind, "unknown norm '" + name + "'");
}
//-----------------------------------------------------------------------------
namespace
{
fl::Form norm_form(const fl::Expr& e, NormKind kind)
{
  using namespace fl;
  switch (kind)
  {
  case NormKind::L2: return integrate(inner(e, e), Measure::cell);
  case NormKind::H10: return integrate(inner(grad(e), grad(e)), Measure::cell);
  case NormKind::H1:
    return integrate(sum(inner(e, e), inner(grad(e), grad(e))), Measure::cell);
  default: break;
  }
  throw Error(ErrorKind::UnsupportedKind, "H(div) norms need H(div) elements");
}

ElementDescriptor raised(const ElementDescriptor& d, int by)
{
  if (d.sub.empty())
    return ElementDescriptor::scalar(Family::DG, d.cell, d.degree + by);
  if (d.family == Family::Vector)
    return ElementDescriptor::vector(raised(d.sub[0], by), static_cast<int>(d.sub.size()));
  std::vector<ElementDescriptor> subs;
  for (const auto& s : d.sub)
    subs.push_back(raised(s, by));
  return ElementDescriptor::mixed(subs);
}
} // namespace
//-----------------------------------------------------------------------------
double femkit::norm(const Function& u, NormKind kind)
{
  const auto& V = u.function_space();
  auto e = fl::coefficient(0, "u", V.element_ptr());
  Bindings b;
  b.set("u", std::shared_ptr<const GenericFunction>(&u, [](const GenericFunction*) {}));
  const double v = assemble_scalar(norm_form(e, kind), V.mesh(), b);
  return std::sqrt(std::max(v, 0.0));
}
//-----------------------------------------------------------------------------
double femkit::errornorm(const Function& u, std::shared_ptr<const GenericFunction> exact,
                         NormKind kind)
{
  const auto& V = u.function_space();
  auto high = std::make_shared<FiniteElement>(raised(V.element().descriptor(), 2));
  auto e = fl::difference(fl::coefficient(0, "u", V.element_ptr()),
                          fl::coefficient(1, "u_exact", high));
  Bindings b;
  b.set("u", std::shared_ptr<const GenericFunction>(&u, [](const GenericFunction*) {}));
  b.set("u_exact", std::move(exact));
  const double v = assemble_scalar(norm_form(e, kind), V.mesh(), b);
  return std::sqrt(std::max(v, 0.0));
}
//-----------------------------------------------------------------------------
Function femkit::project(std::shared_ptr<const GenericFunction> source,
                         std::shared_ptr<const FunctionSpace> V,
                         const la::SolverOptions& options)
{
  using namespace fl;
  const auto& el = V->element_ptr();
  Expr f;
  if (auto* fn = dynamic_cast<const Function*>(source.get()))
    f = coefficient(0, "f", fn->function_space().element_ptr());
  else
  {
    int degree = el->degree() + 2;
    if (auto* ex = dynamic_cast<const Expression*>(source.get()))
      degree = ex->degree();
    f = point_coefficient(0, "f", source->value_shape(), degree, V->mesh().gdim());
  }
  auto v = argument(0, el), u = argument(1, el);
  VariationalProblem p(integrate(inner(v, u), Measure::cell),
                       integrate(inner(v, f), Measure::cell), V);
  p.bindings.set("f", std::move(source));
  p.method = la::Method::cg;
  p.solver = options;
  p.solver.method = la::Method::cg;
  return p.solve();
}
//-----------------------------------------------------------------------------
