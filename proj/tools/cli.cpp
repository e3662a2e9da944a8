// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include "cli.h"

#include <femkit/compiler.h>
#include <femkit/error.h>
#include <femkit/form_parser.h>
#include <femkit/io.h>
#include <femkit/log.h>
#include <femkit/problem.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <ostream>

using namespace femkit;

namespace
{
std::optional<la::Method> method_option(const std::string& s)
{
  if (s.empty())
    return std::nullopt;
  return la::method_from_string(s);
}

/// "id:region" pairs of --mark.
MeshFunction<int> facet_markers(const Mesh& mesh, const std::vector<std::string>& marks)
{
  const int tdim = mesh.tdim();
  MeshFunction<int> m(mesh, tdim - 1, 0);
  const auto ext = exterior_facets(mesh);
  const auto& fv = mesh.connectivity(tdim - 1, 0);
  for (const auto& spec : marks)
  {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
      throw Error(ErrorKind::InvalidArgument, "--mark expects id:region, got '" + spec + "'");
    const int id = std::stoi(spec.substr(0, colon));
    const Region region = problem::parse_region(spec.substr(colon + 1), mesh.gdim());
    for (std::size_t f = 0; f < fv.num_nodes(); ++f)
    {
      bool all = true;
      for (auto v : fv.links(f))
        all = all and region(mesh.vertex(v), ext[f]);
      if (all)
        m[f] = id;
    }
  }
  return m;
}

void mesh_info(const Mesh& mesh, const std::vector<io::Markers>& markers, std::ostream& out)
{
  const int tdim = mesh.tdim();
  out << "cell type   " << cell::to_string(mesh.cell_type()) << "\n";
  out << "dimensions  tdim " << tdim << ", gdim " << mesh.gdim() << "\n";
  long long euler = 0;
  for (int d = 0; d <= tdim; ++d)
  {
    const auto n = mesh.num_entities(d);
    out << "entities    dim " << d << ": " << n << "\n";
    euler += (d % 2 == 0 ? 1 : -1) * static_cast<long long>(n);
  }
  const auto ext = exterior_facets(mesh);
  out << "boundary    " << std::count(ext.values().begin(), ext.values().end(), true) << " facets\n";
  out << "euler       " << euler << "\n";
  out << "volume      " << total_volume(mesh) << "\n";
  for (const auto& m : markers)
  {
    std::map<int, int> counts;
    for (int v : m.values.values())
      if (v != 0)
        ++counts[v];
    out << "markers     dim " << m.values.dim() << (m.name.empty() ? "" : " (" + m.name + ")") << ":";
    for (const auto& [id, c] : counts)
      out << " " << id << "x" << c;
    out << "\n";
  }
}
} // namespace

//-----------------------------------------------------------------------------
std::string cli::compile_file(const std::string& path, int degree, std::vector<std::string>* skipped,
                              std::string* pseudocode, int* kernels)
{
  const auto file = fl::read_form_file(path);
  CompileOptions co;
  co.degree = degree;
  co.tdim = cell::topological_dimension(file.cell);
  co.gdim = co.tdim;
  nlohmann::ordered_json doc;
  doc["schema"] = "femkit-kir-1";
  doc["forms"] = nlohmann::ordered_json::array();
  int count = 0;
  for (const auto& [name, form] : file.forms)
  {
    CompiledForm cf;
    try
    {
      cf = compile_form(form, co);
    }
    catch (const Error& e)
    {
      // residual forms (e.g. F before lhs/rhs) are not compiled on their own
      if (e.kind() != ErrorKind::MixedRanks)
        throw Error(e.kind(), path + ": form '" + name + "': " + e.message(), e.line(), e.column());
      if (skipped)
        skipped->push_back(name);
      continue;
    }
    count += static_cast<int>(cf.kernels.size());
    if (pseudocode)
      *pseudocode += "# form " + name + "\n" + femkit::pseudocode(cf) + "\n";
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["ir"] = nlohmann::ordered_json::parse(to_ir(cf));
    doc["forms"].push_back(std::move(entry));
  }
  if (kernels)
    *kernels = count;
  return doc.dump(1) + "\n";
}
//-----------------------------------------------------------------------------
int cli::run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  CLI::App app{"femkit: finite element forms, meshes and solvers", "femkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("femkit 1.0"));

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "generate, refine or inspect meshes");
  mesh_cmd->require_subcommand(1);
  std::string shape, in_path, output;
  std::vector<std::size_t> divisions;
  std::vector<std::string> marks;
  int times = 1;
  std::string refine_region;
  auto* gen = mesh_cmd->add_subcommand("generate", "uniform unit interval, square or cube");
  gen->add_option("shape", shape, "interval, square or cube")
      ->required()
      ->check(CLI::IsMember({"interval", "square", "cube"}));
  gen->add_option("n", divisions, "divisions per direction")->required();
  gen->add_option("-o,--output", output, "mesh XML file")->required();
  gen->add_option("--mark", marks, "facet markers as id:region, e.g. '1:x[0] = 0'");
  auto* ref = mesh_cmd->add_subcommand("refine", "uniform or marked refinement");
  ref->add_option("mesh", in_path, "input mesh XML")->required()->check(CLI::ExistingFile);
  ref->add_option("-o,--output", output, "mesh XML file")->required();
  ref->add_option("--times", times, "number of refinements")->check(CLI::PositiveNumber);
  ref->add_option("--cells", refine_region, "refine only cells whose midpoint satisfies this region");
  auto* info = mesh_cmd->add_subcommand("info", "print entity counts and markers");
  info->add_option("mesh", in_path, "mesh XML file")->required()->check(CLI::ExistingFile);

  // compile
  auto* compile_cmd = app.add_subcommand("compile", "check forms and emit kernel IR");
  std::string forms_path, ir_path;
  int degree = -1;
  bool quiet_code = false;
  compile_cmd->add_option("forms", forms_path, "forms file")->required()->check(CLI::ExistingFile);
  compile_cmd->add_option("--emit-ir", ir_path, "write the kernel IR (JSON) here");
  compile_cmd->add_option("--degree", degree, "quadrature degree for every integral");
  compile_cmd->add_flag("--no-pseudocode", quiet_code, "print only the summary");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "run a problem descriptor");
  std::string problem_path, mesh_override, solver, vtk_out;
  double rtol = 0.0;
  int maxit = 0, threads = 1, solve_degree = -1;
  solve_cmd->add_option("problem", problem_path, "problem descriptor (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--mesh", mesh_override, "mesh XML replacing the descriptor's mesh");
  solve_cmd->add_option("--output", vtk_out, "VTK output (series base name for transient runs)");
  solve_cmd->add_option("--degree", solve_degree, "quadrature degree for every integral");
  solve_cmd->add_option("--solver", solver, "linear solver")
      ->check(CLI::IsMember({"cg", "bicgstab", "lu"}));
  solve_cmd->add_option("--rtol", rtol, "linear solver relative tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--maxit", maxit, "linear solver iteration limit")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--threads", threads, "threads for element tensor computation")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try
  {
    app.parse(reversed);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : usage;
  }

  try
  {
    if (*gen)
    {
      const std::size_t dims = shape == "interval" ? 1 : shape == "square" ? 2 : 3;
      if (divisions.size() == 1)
        divisions.resize(dims, divisions[0]);
      const UnitShape s = dims == 1 ? UnitShape::interval : dims == 2 ? UnitShape::square : UnitShape::cube;
      Mesh mesh = generate_unit_mesh(s, divisions);
      std::vector<io::Markers> markers;
      if (!marks.empty())
        markers.push_back({"boundaries", facet_markers(mesh, marks)});
      io::write_mesh_xml(mesh, output, markers);
      out << "wrote " << output << ": " << mesh.num_vertices() << " vertices, " << mesh.num_cells()
          << " cells\n";
    }
    else if (*ref)
    {
      if (!io::read_markers(in_path).empty())
        log::warning("markers of " + in_path + " are dropped by refinement");
      Mesh mesh = io::read_mesh_xml(in_path);
      for (int i = 0; i < times; ++i)
      {
        std::optional<MeshFunction<bool>> marked;
        if (!refine_region.empty())
        {
          const Region region = problem::parse_region(refine_region, mesh.gdim());
          marked = MeshFunction<bool>(mesh, mesh.tdim(), false);
          for (std::size_t c = 0; c < mesh.num_cells(); ++c)
            (*marked)[c] = region(MeshEntity(mesh, mesh.tdim(), c).midpoint(), false);
        }
        mesh = refine(mesh, marked);
      }
      io::write_mesh_xml(mesh, output);
      out << "wrote " << output << ": " << mesh.num_vertices() << " vertices, " << mesh.num_cells()
          << " cells\n";
    }
    else if (*info)
    {
      mesh_info(io::read_mesh_xml(in_path), io::read_markers(in_path), out);
    }
    else if (*compile_cmd)
    {
      std::vector<std::string> skipped;
      std::string code;
      int kernels = 0;
      const std::string ir = compile_file(forms_path, degree, &skipped, &code, &kernels);
      if (!quiet_code)
        out << code;
      for (const auto& s : skipped)
        out << "skipped form " << s << ": not of full arity (split it with lhs/rhs)\n";
      if (!ir_path.empty())
        io::write_file(ir_path, ir);
      out << "compiled " << forms_path << ": " << kernels << " kernel" << (kernels == 1 ? "" : "s");
      if (!ir_path.empty())
        out << ", IR written to " << ir_path;
      out << "\n";
    }
    else if (*solve_cmd)
    {
      problem::RunOptions opt;
      if (!mesh_override.empty())
        opt.mesh = mesh_override;
      if (!vtk_out.empty())
        opt.output = vtk_out;
      if (solve_degree >= 0)
        opt.degree = solve_degree;
      opt.method = method_option(solver);
      if (rtol > 0)
        opt.rtol = rtol;
      if (maxit > 0)
        opt.maxit = maxit;
      opt.threads = threads;
      opt.out = &out;
      const auto r = problem::run_file(problem_path, opt);
      for (const auto& f : r.written)
        out << "wrote " << f << "\n";
    }
  }
  catch (const NewtonError& e)
  {
    err << "femkit: error: " << e.what() << "\n";
    err << "femkit: Newton residuals:";
    for (double r : e.residuals())
      err << " " << r;
    err << "\n";
    return failure;
  }
  catch (const Error& e)
  {
    err << "femkit: error: " << e.what() << "\n";
    return failure;
  }
  catch (const std::exception& e)
  {
    err << "femkit: error: " << e.what() << "\n";
    return failure;
  }
  return ok;
}
//-----------------------------------------------------------------------------
