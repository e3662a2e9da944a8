#include <femkit/dofmap.h>
#include <femkit/error.h>
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

using namespace femkit;
using cell::Type;

namespace
{
std::shared_ptr<const FiniteElement> make(Family f, Type c, int q)
{
  return std::make_shared<FiniteElement>(ElementDescriptor::scalar(f, c, q));
}

void check_surjective(const DofMap& dm)
{
  std::set<std::int32_t> all;
  for (std::size_t c = 0; c < dm.num_cells(); ++c)
    for (auto d : dm.cell_dofs(c))
    {
      ASSERT_GE(d, 0);
      ASSERT_LT(static_cast<std::size_t>(d), dm.global_dim());
      all.insert(d);
    }
  EXPECT_EQ(all.size(), dm.global_dim());
}

// Each global dof must map to one physical point from every cell.
void check_continuity(const DofMap& dm, const Mesh& mesh)
{
  const auto& e = dm.element();
  const int tdim = mesh.tdim(), gdim = mesh.gdim();
  std::map<std::int32_t, std::vector<double>> seen;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
  {
    auto x = mesh.cell_coordinates(c);
    auto dofs = dm.cell_dofs(c);
    for (int i = 0; i < e.space_dim(); ++i)
    {
      std::vector<double> p(gdim);
      for (int k = 0; k < gdim; ++k)
      {
        p[k] = x[k];
        for (int j = 0; j < tdim; ++j)
          p[k] += (x[(j + 1) * gdim + k] - x[k]) * e.dof_points()[i * tdim + j];
      }
      auto [it, fresh] = seen.insert({dofs[i], p});
      if (!fresh)
        for (int k = 0; k < gdim; ++k)
          EXPECT_NEAR(it->second[k], p[k], 1e-12) << e.descriptor().str();
    }
  }
}
} // namespace

TEST(DofMap, GlobalDimensions)
{
  auto sq = unit_square(2, 2);
  EXPECT_EQ(DofMap(make(Family::CG, Type::triangle, 1), sq).global_dim(), 9u);
  EXPECT_EQ(DofMap(make(Family::DG, Type::triangle, 1), sq).global_dim(), 24u);
  EXPECT_EQ(DofMap(make(Family::DG, Type::triangle, 0), sq).global_dim(), 8u);
  auto sq1 = unit_square(1, 1);
  // entity count oracle: vertices + edges
  EXPECT_EQ(DofMap(make(Family::CG, Type::triangle, 2), sq1).global_dim(),
            sq1.num_entities(0) + sq1.num_entities(1));
  EXPECT_EQ(DofMap(make(Family::CG, Type::triangle, 2), sq1).global_dim(), 9u);
  EXPECT_EQ(DofMap(make(Family::CR, Type::triangle, 1), sq1).global_dim(), 5u);

  auto th = std::make_shared<FiniteElement>(ElementDescriptor::mixed(
      {ElementDescriptor::vector(ElementDescriptor::scalar(Family::CG, Type::triangle, 2), 2),
       ElementDescriptor::scalar(Family::CG, Type::triangle, 1)}));
  EXPECT_EQ(DofMap(th, sq).global_dim(), 59u);
}

TEST(DofMap, ShapeMismatch)
{
  auto sq = unit_square(1, 1);
  try
  {
    DofMap dm(make(Family::CG, Type::tetrahedron, 1), sq);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
  }
}

TEST(DofMap, VertexDofsFollowVertices)
{
  auto sq = unit_square(2, 2);
  DofMap dm(make(Family::CG, Type::triangle, 1), sq);
  for (std::size_t c = 0; c < sq.num_cells(); ++c)
  {
    auto d = dm.cell_dofs(c);
    auto v = sq.cell_vertices(c);
    EXPECT_TRUE(std::equal(d.begin(), d.end(), v.begin()));
  }
  try
  {
    dm.cell_dofs(8);
    FAIL();
  }
  catch (const Error& e)
  {
    EXPECT_EQ(e.kind(), ErrorKind::IndexOutOfRange);
  }
}

TEST(DofMap, DiscontinuousDisjoint)
{
  auto sq = unit_square(1, 1);
  DofMap dm(make(Family::DG, Type::triangle, 1), sq);
  auto a = dm.cell_dofs(0);
  auto b = dm.cell_dofs(1);
  for (auto x : a)
    EXPECT_EQ(std::find(b.begin(), b.end(), x), b.end());
}

TEST(DofMap, SurjectiveAndContinuous)
{
  for (auto mesh : {unit_square(3, 2), unit_cube(2, 1, 2), unit_interval(4)})
  {
    const auto t = mesh.cell_type();
    for (int q = 1; q <= 5; ++q)
    {
      DofMap dm(make(Family::CG, t, q), mesh);
      check_surjective(dm);
      check_continuity(dm, mesh);
    }
    DofMap cr(make(Family::CR, t, 1), mesh);
    check_surjective(cr);
    check_continuity(cr, mesh);
    DofMap d2(make(Family::DG, t, 2), mesh);
    check_surjective(d2);
  }
}

TEST(DofMap, ContinuityUnderVertexPermutation)
{
  // Reversed local vertex order in one cell exercises edge dof orientation
  Mesh mesh({0, 0, 1, 0, 0, 1, 1, 1}, {0, 1, 2, 3, 2, 1}, 2, 2);
  for (int q = 3; q <= 6; ++q)
  {
    DofMap dm(make(Family::CG, Type::triangle, q), mesh);
    check_surjective(dm);
    check_continuity(dm, mesh);
  }
  Mesh tets({0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1}, {0, 1, 2, 3, 4, 3, 2, 1},
            3, 3);
  for (int q = 3; q <= 5; ++q)
  {
    DofMap dm(make(Family::CG, Type::tetrahedron, q), tets);
    check_surjective(dm);
    check_continuity(dm, tets);
  }
}

TEST(DofMap, MixedBlocks)
{
  auto sq = unit_square(2, 2);
  auto p2 = ElementDescriptor::scalar(Family::CG, Type::triangle, 2);
  auto th = std::make_shared<FiniteElement>(ElementDescriptor::mixed(
      {ElementDescriptor::vector(p2, 2),
       ElementDescriptor::scalar(Family::CG, Type::triangle, 1)}));
  DofMap dm(th, sq);
  auto u = dm.sub(0);
  auto p = dm.sub(1);
  EXPECT_EQ(u.range(), (std::pair<std::int32_t, std::int32_t>{0, 50}));
  EXPECT_EQ(p.range(), (std::pair<std::int32_t, std::int32_t>{50, 59}));
  auto ux = u.sub(0);
  auto uy = u.sub(1);
  EXPECT_EQ(ux.range(), (std::pair<std::int32_t, std::int32_t>{0, 25}));
  EXPECT_EQ(uy.range(), (std::pair<std::int32_t, std::int32_t>{25, 50}));
  // collapsed pressure numbering equals the scalar CG1 map shifted
  DofMap p1(make(Family::CG, Type::triangle, 1), sq);
  for (std::size_t c = 0; c < sq.num_cells(); ++c)
    for (int i = 0; i < 3; ++i)
      EXPECT_EQ(p.cell_dofs(c)[i] - 50, p1.cell_dofs(c)[i]);
  auto comp = dm.dof_components();
  EXPECT_EQ(comp[0], 0);
  EXPECT_EQ(comp[30], 1);
  EXPECT_EQ(comp[55], 2);
}

TEST(DofMap, BoundaryDofs)
{
  auto sq = unit_square(2, 2);
  auto ext = exterior_facets(sq);
  DofMap p1(make(Family::CG, Type::triangle, 1), sq);
  EXPECT_EQ(p1.boundary_dofs(sq, ext).size(), 8u);

  auto sq1 = unit_square(1, 1);
  MeshFunction<bool> one(sq1, 1, false);
  // mark left edge x = 0
  const auto& fv = sq1.connectivity(1, 0);
  for (std::size_t f = 0; f < fv.num_nodes(); ++f)
  {
    auto v = fv.links(f);
    if (sq1.vertex(v[0])[0] == 0.0 and sq1.vertex(v[1])[0] == 0.0)
      one[f] = true;
  }
  DofMap p2(make(Family::CG, Type::triangle, 2), sq1);
  std::vector<double> x;
  auto d = p2.boundary_dofs(sq1, one, &x);
  ASSERT_EQ(d.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR(x[2 * i], 0.0, 1e-15);

  DofMap d1(make(Family::DG, Type::triangle, 1), sq1);
  auto dd = d1.boundary_dofs(sq1, one, &x);
  EXPECT_EQ(dd.size(), 2u);
  for (std::size_t i = 0; i < dd.size(); ++i)
    EXPECT_NEAR(x[2 * i], 0.0, 1e-15);

  MeshFunction<bool> none(sq1, 1, false);
  EXPECT_TRUE(p2.boundary_dofs(sq1, none).empty());
}

TEST(DofMap, SparsityCounts)
{
  auto sq1 = unit_square(1, 1);
  DofMap p1(make(Family::CG, Type::triangle, 1), sq1);
  auto pat = sparsity_pattern(sq1, p1, p1, false);
  // brute-force pair enumeration
  std::set<std::pair<int, int>> pairs;
  for (std::size_t c = 0; c < sq1.num_cells(); ++c)
    for (auto i : p1.cell_dofs(c))
      for (auto j : p1.cell_dofs(c))
        pairs.insert({i, j});
  EXPECT_EQ(pat->num_nonzeros(), pairs.size());
  EXPECT_EQ(pat->num_nonzeros(), 14u);

  DofMap d0(make(Family::DG, Type::triangle, 0), sq1);
  EXPECT_EQ(sparsity_pattern(sq1, d0, d0, false)->num_nonzeros(), 2u);
  EXPECT_EQ(sparsity_pattern(sq1, d0, d0, true)->num_nonzeros(), 4u);
}
