// Copyright (c) 2026 femkit contributors
// SPDX-License-Identifier:    MIT

#include <femkit/error.h>
#include <femkit/io.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

using namespace femkit;

namespace
{
struct XmlNode
{
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<std::unique_ptr<XmlNode>> children;
  int line = 0;

  const std::string* attr(const std::string& key) const
  {
    for (const auto& [k, v] : attrs)
      if (k == key)
        return &v;
    return nullptr;
  }
};

// Small non-validating XML reader: elements, attributes, comments,
// declarations. Text content is ignored.
class XmlReader
{
public:
  explicit XmlReader(const std::string& s) : _s(s) {}

  std::unique_ptr<XmlNode> parse()
  {
    std::unique_ptr<XmlNode> root;
    while (true)
    {
      skip_misc();
      if (_i >= _s.size())
        break;
      if (root)
        fail("content after the root element");
      root = element();
    }
    if (!root)
      fail("no root element");
    return root;
  }

private:
  const std::string& _s;
  std::size_t _i = 0;
  int _line = 1;

  [[noreturn]] void fail(const std::string& msg)
  {
    throw Error(ErrorKind::ParseError, msg, _line);
  }

  char peek() const { return _i < _s.size() ? _s[_i] : '\0'; }

  void advance(std::size_t n = 1)
  {
    for (std::size_t k = 0; k < n and _i < _s.size(); ++k)
      if (_s[_i++] == '\n')
        ++_line;
  }

  bool starts(const char* t) const { return _s.compare(_i, std::char_traits<char>::length(t), t) == 0; }

  void skip_space()
  {
    while (_i < _s.size() and std::isspace(static_cast<unsigned char>(_s[_i])))
      advance();
  }

  void skip_until(const char* end)
  {
    const auto p = _s.find(end, _i);
    if (p == std::string::npos)
      fail(std::string("missing '") + end + "'");
    advance(p + std::char_traits<char>::length(end) - _i);
  }

  // whitespace, comments, declarations and text
  void skip_misc()
  {
    while (_i < _s.size())
    {
      if (starts("<!--"))
        skip_until("-->");
      else if (starts("<?"))
        skip_until("?>");
      else if (starts("<!"))
        skip_until(">");
      else if (peek() != '<')
        advance();
      else
        return;
    }
  }

  std::string name()
  {
    std::string n;
    while (_i < _s.size()
           and (std::isalnum(static_cast<unsigned char>(_s[_i])) or _s[_i] == '_'
                or _s[_i] == '-' or _s[_i] == ':' or _s[_i] == '.'))
    {
      n += _s[_i];
      advance();
    }
    if (n.empty())
      fail("expected a name");
    return n;
  }

  static std::string unescape(const std::string& v)
  {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i)
    {
      if (v[i] != '&')
      {
        out += v[i];
        continue;
      }
      const auto semi = v.find(';', i);
      const std::string ent = v.substr(i + 1, semi - i - 1);
      if (ent == "lt")
        out += '<';
      else if (ent == "gt")
        out += '>';
      else if (ent == "amp")
        out += '&';
      else if (ent == "quot")
        out += '"';
      else if (ent == "apos")
        out += '\'';
      else
        out += "&" + ent + ";";
      i = semi;
    }
    return out;
  }

  std::unique_ptr<XmlNode> element()
  {
    auto node = std::make_unique<XmlNode>();
    node->line = _line;
    advance(); // '<'
    node->name = name();
    while (true)
    {
      skip_space();
      if (starts("/>"))
      {
        advance(2);
        return node;
      }
      if (peek() == '>')
      {
        advance();
        break;
      }
      if (_i >= _s.size())
        fail("unterminated tag <" + node->name + ">");
      std::string key = name();
      skip_space();
      if (peek() != '=')
        fail("expected '=' after attribute " + key);
      advance();
      skip_space();
      const char q = peek();
      if (q != '"' and q != '\'')
        fail("attribute " + key + " is not quoted");
      advance();
      const auto end = _s.find(q, _i);
      if (end == std::string::npos)
        fail("unterminated attribute value");
      std::string value = _s.substr(_i, end - _i);
      advance(end + 1 - _i);
      if (node->attr(key))
        fail("duplicate attribute " + key);
      node->attrs.emplace_back(std::move(key), unescape(value));
    }
    // children until the end tag
    while (true)
    {
      skip_misc();
      if (_i >= _s.size())
        fail("missing </" + node->name + ">");
      if (starts("</"))
      {
        advance(2);
        const std::string n = name();
        if (n != node->name)
          fail("</" + n + "> closes <" + node->name + ">");
        skip_space();
        if (peek() != '>')
          fail("expected '>'");
        advance();
        return node;
      }
      node->children.push_back(element());
    }
  }
};

[[noreturn]] void fail_at(const XmlNode& n, const std::string& msg)
{
  throw Error(ErrorKind::ParseError, "<" + n.name + ">: " + msg, n.line);
}

const std::string& required(const XmlNode& n, const std::string& key)
{
  const auto* v = n.attr(key);
  if (!v)
    fail_at(n, "missing attribute '" + key + "'");
  return *v;
}

long long to_int(const XmlNode& n, const std::string& key)
{
  const auto& s = required(n, key);
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() or p != s.data() + s.size())
    fail_at(n, "attribute '" + key + "' is not an integer: '" + s + "'");
  return v;
}

double to_double(const XmlNode& n, const std::string& key)
{
  const auto& s = required(n, key);
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() or p != s.data() + s.size())
    fail_at(n, "attribute '" + key + "' is not a number: '" + s + "'");
  return v;
}

std::unique_ptr<XmlNode> parse_root(const std::string& text)
{
  auto root = XmlReader(text).parse();
  if (root->name != "dolfin")
    throw Error(ErrorKind::SchemaMismatch, "root element is <" + root->name + ">, expected <dolfin>", root->line);
  return root;
}

const XmlNode* child(const XmlNode& n, const std::string& name)
{
  for (const auto& c : n.children)
    if (c->name == name)
      return c.get();
  return nullptr;
}

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Indexed entries of a block: every index in [0, size) exactly once.
template <typename F>
void read_indexed(const XmlNode& block, const std::string& item, bool complete, F&& take)
{
  const long long size = to_int(block, "size");
  if (size < 0)
    fail_at(block, "negative size");
  std::vector<char> seen(static_cast<std::size_t>(size), 0);
  for (const auto& c : block.children)
  {
    if (c->name != item)
      fail_at(*c, "unexpected element in <" + block.name + ">");
    const long long i = to_int(*c, "index");
    if (i < 0 or i >= size)
      fail_at(*c, "index " + std::to_string(i) + " out of range");
    if (seen[i])
      fail_at(*c, "duplicate index " + std::to_string(i));
    seen[i] = 1;
    take(static_cast<std::size_t>(i), *c);
  }
  if (complete)
    for (long long i = 0; i < size; ++i)
      if (!seen[i])
        fail_at(block, "missing " + item + " with index " + std::to_string(i));
}
} // namespace

//-----------------------------------------------------------------------------
std::string io::read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
//-----------------------------------------------------------------------------
void io::write_file(const std::string& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out)
    throw Error(ErrorKind::IoError, "failed writing '" + path + "'");
}
//-----------------------------------------------------------------------------
std::string io::mesh_to_xml(const Mesh& mesh, const std::vector<Markers>& markers)
{
  const int tdim = mesh.tdim(), gdim = mesh.gdim();
  const std::string ct = cell::to_string(mesh.cell_type());
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dolfin>\n";
  s << "  <mesh celltype=\"" << ct << "\" dim=\"" << gdim << "\">\n";
  s << "    <vertices size=\"" << mesh.num_vertices() << "\">\n";
  const char* axes[] = {"x", "y", "z"};
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
  {
    s << "      <vertex index=\"" << v << "\"";
    for (int k = 0; k < gdim; ++k)
      s << " " << axes[k] << "=\"" << num(mesh.vertex(v)[k]) << "\"";
    s << "/>\n";
  }
  s << "    </vertices>\n";
  s << "    <cells size=\"" << mesh.num_cells() << "\">\n";
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
  {
    s << "      <" << ct << " index=\"" << c << "\"";
    auto vs = mesh.cell_vertices(c);
    for (int i = 0; i <= tdim; ++i)
      s << " v" << i << "=\"" << vs[i] << "\"";
    s << "/>\n";
  }
  s << "    </cells>\n  </mesh>\n";
  for (const auto& m : markers)
  {
    s << "  <meshfunction";
    if (!m.name.empty())
      s << " name=\"" << m.name << "\"";
    s << " dim=\"" << m.values.dim() << "\" size=\"" << m.values.size() << "\">\n";
    for (std::size_t i = 0; i < m.values.size(); ++i)
      if (m.values[i] != 0)
        s << "    <entity index=\"" << i << "\" value=\"" << m.values[i] << "\"/>\n";
    s << "  </meshfunction>\n";
  }
  s << "</dolfin>\n";
  return s.str();
}
//-----------------------------------------------------------------------------
Mesh io::mesh_from_xml(const std::string& text)
{
  const auto root = parse_root(text);
  const XmlNode* m = child(*root, "mesh");
  if (!m)
    throw Error(ErrorKind::SchemaMismatch, "no <mesh> element", root->line);
  const std::string& ct = required(*m, "celltype");
  if (ct != "interval" and ct != "triangle" and ct != "tetrahedron")
    throw Error(ErrorKind::SchemaMismatch, "unsupported cell type '" + ct + "'", m->line);
  const int tdim = cell::topological_dimension(cell::from_string(ct));
  const long long gdim = to_int(*m, "dim");
  if (gdim < tdim or gdim > 3)
    throw Error(ErrorKind::SchemaMismatch, "dim " + std::to_string(gdim) + " for " + ct + " cells", m->line);
  const XmlNode* vs = child(*m, "vertices");
  const XmlNode* cs = child(*m, "cells");
  if (!vs or !cs)
    fail_at(*m, "needs <vertices> and <cells>");

  const char* axes[] = {"x", "y", "z"};
  std::vector<double> x(static_cast<std::size_t>(to_int(*vs, "size")) * gdim);
  read_indexed(*vs, "vertex", true,
               [&](std::size_t i, const XmlNode& n)
               {
                 for (int k = 0; k < gdim; ++k)
                   x[i * gdim + k] = to_double(n, axes[k]);
               });
  const std::size_t nv = x.size() / gdim;
  std::vector<std::int32_t> cells(static_cast<std::size_t>(to_int(*cs, "size")) * (tdim + 1));
  read_indexed(*cs, ct, true,
               [&](std::size_t i, const XmlNode& n)
               {
                 for (int k = 0; k <= tdim; ++k)
                 {
                   const long long v = to_int(n, "v" + std::to_string(k));
                   if (v < 0 or static_cast<std::size_t>(v) >= nv)
                     fail_at(n, "vertex " + std::to_string(v) + " out of range");
                   cells[i * (tdim + 1) + k] = static_cast<std::int32_t>(v);
                 }
               });
  return Mesh(std::move(x), std::move(cells), tdim, static_cast<int>(gdim));
}
//-----------------------------------------------------------------------------
std::vector<io::Markers> io::markers_from_xml(const std::string& text)
{
  const auto root = parse_root(text);
  std::vector<Markers> out;
  for (const auto& c : root->children)
  {
    if (c->name != "meshfunction")
      continue;
    Markers m;
    if (const auto* n = c->attr("name"))
      m.name = *n;
    const long long dim = to_int(*c, "dim");
    if (dim < 0 or dim > 3)
      fail_at(*c, "dim out of range");
    std::vector<int> values(static_cast<std::size_t>(std::max(0LL, to_int(*c, "size"))), 0);
    read_indexed(*c, "entity", false,
                 [&](std::size_t i, const XmlNode& n)
                 { values[i] = static_cast<int>(to_int(n, "value")); });
    m.values = MeshFunction<int>(static_cast<int>(dim), std::move(values));
    out.push_back(std::move(m));
  }
  return out;
}
//-----------------------------------------------------------------------------
void io::write_mesh_xml(const Mesh& mesh, const std::string& path,
                        const std::vector<Markers>& markers)
{
  write_file(path, mesh_to_xml(mesh, markers));
}
//-----------------------------------------------------------------------------
Mesh io::read_mesh_xml(const std::string& path)
{
  try
  {
    return mesh_from_xml(read_file(path));
  }
  catch (const Error& e)
  {
    if (e.kind() == ErrorKind::IoError)
      throw;
    throw Error(e.kind(), path + ": " + e.message(), e.line(), e.column());
  }
}
//-----------------------------------------------------------------------------
std::vector<io::Markers> io::read_markers(const std::string& path)
{
  return markers_from_xml(read_file(path));
}
//-----------------------------------------------------------------------------
std::string io::function_to_xml(const Function& u)
{
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<dolfin>\n";
  s << "  <function element=\"" << u.function_space().element().descriptor().str()
    << "\" size=\"" << u.vector().size() << "\">\n";
  for (std::size_t i = 0; i < u.vector().size(); ++i)
    s << "    <dof index=\"" << i << "\" value=\"" << num(u.vector()[i]) << "\"/>\n";
  s << "  </function>\n</dolfin>\n";
  return s.str();
}
//-----------------------------------------------------------------------------
std::vector<double> io::function_values_from_xml(const std::string& text)
{
  const auto root = parse_root(text);
  const XmlNode* f = child(*root, "function");
  if (!f)
    throw Error(ErrorKind::SchemaMismatch, "no <function> element", root->line);
  std::vector<double> x(static_cast<std::size_t>(std::max(0LL, to_int(*f, "size"))));
  read_indexed(*f, "dof", true,
               [&](std::size_t i, const XmlNode& n) { x[i] = to_double(n, "value"); });
  return x;
}
//-----------------------------------------------------------------------------
void io::write_function_xml(const Function& u, const std::string& path)
{
  write_file(path, function_to_xml(u));
}
//-----------------------------------------------------------------------------
void io::read_function_xml(Function& u, const std::string& path)
{
  auto x = function_values_from_xml(read_file(path));
  if (x.size() != u.vector().size())
  {
    throw Error(ErrorKind::ShapeMismatch, path + ": " + std::to_string(x.size())
                                              + " values for a space of dimension "
                                              + std::to_string(u.vector().size()));
  }
  u.vector() = std::move(x);
}
//-----------------------------------------------------------------------------
std::string io::vtk_text(const Mesh& mesh,
                         const std::vector<std::pair<std::string, const Function*>>& functions)
{
  const int tdim = mesh.tdim(), gdim = mesh.gdim();
  const std::size_t nv = mesh.num_vertices(), nc = mesh.num_cells();

  // flatten mixed functions into components
  std::vector<std::pair<std::string, Function>> parts;
  std::vector<std::string> notes;
  for (const auto& [name, f] : functions)
  {
    if (&f->function_space().mesh() != &mesh)
      throw Error(ErrorKind::MeshMismatch, "function '" + name + "' lives on another mesh");
    if (f->function_space().element().is_mixed())
    {
      auto split = f->split();
      for (std::size_t i = 0; i < split.size(); ++i)
        parts.emplace_back(name + "_" + std::to_string(i), std::move(split[i]));
    }
    else
      parts.emplace_back(name, *f);
  }

  std::ostringstream s;
  std::string title = "femkit output";
  for (const auto& [name, f] : parts)
  {
    const auto& e = f.function_space().element();
    const auto& d = e.is_vector() ? e.sub_element(0).descriptor() : e.descriptor();
    if (d.family != Family::CG or d.degree != 1)
      notes.push_back(name + ": " + e.descriptor().str() + " reduced to vertex values");
    if (f.value_size() > 3)
      throw Error(ErrorKind::Unsupported, "cannot write '" + name + "' with more than 3 components");
  }
  for (const auto& n : notes)
    title += "; " + n;
  if (title.size() > 255)
    title = title.substr(0, 255);

  s << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  s << "POINTS " << nv << " double\n";
  for (std::size_t v = 0; v < nv; ++v)
  {
    for (int k = 0; k < 3; ++k)
      s << (k ? " " : "") << num(k < gdim ? mesh.vertex(v)[k] : 0.0);
    s << "\n";
  }
  s << "CELLS " << nc << " " << nc * (tdim + 2) << "\n";
  for (std::size_t c = 0; c < nc; ++c)
  {
    s << tdim + 1;
    for (auto v : mesh.cell_vertices(c))
      s << " " << v;
    s << "\n";
  }
  const int type = tdim == 1 ? 3 : tdim == 2 ? 5 : 10;
  s << "CELL_TYPES " << nc << "\n";
  for (std::size_t c = 0; c < nc; ++c)
    s << type << "\n";
  if (parts.empty())
    return s.str();

  s << "POINT_DATA " << nv << "\n";
  const auto& vc = mesh.connectivity(0, tdim);
  for (const auto& [name, f] : parts)
  {
    const int m = f.value_size();
    std::vector<double> val(m);
    if (m == 1)
      s << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    else
      s << "VECTORS " << name << " double\n";
    for (std::size_t v = 0; v < nv; ++v)
    {
      auto cells = vc.links(v);
      f.eval_cell(mesh.vertex(v), mesh, cells[0], val);
      if (m == 1)
        s << num(val[0]) << "\n";
      else
      {
        for (int k = 0; k < 3; ++k)
          s << (k ? " " : "") << num(k < m ? val[k] : 0.0);
        s << "\n";
      }
    }
  }
  return s.str();
}
//-----------------------------------------------------------------------------
void io::write_vtk(const std::string& path, const Mesh& mesh,
                   const std::vector<std::pair<std::string, const Function*>>& functions)
{
  write_file(path, vtk_text(mesh, functions));
}
//-----------------------------------------------------------------------------
