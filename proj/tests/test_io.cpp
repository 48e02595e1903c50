#include <gtest/gtest.h>

#include <sstream>

#include "cutflux/io.hpp"
#include "support.hpp"

using namespace cutflux;
using cutflux::testing::Case;

namespace {

std::vector<std::string> lines(const std::string& s)
{
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string line;
    while (std::getline(is, line))
        out.push_back(line);
    return out;
}

std::size_t find_line(const std::vector<std::string>& v, const std::string& prefix)
{
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i].rfind(prefix, 0) == 0)
            return i;
    return v.size();
}

} // namespace

TEST(MeshText, RoundTrip)
{
    const auto mesh = build_structured_mesh(3, 2, {-1, -1, 1, 1});
    std::ostringstream os;
    write_mesh_text(os, mesh);
    std::istringstream is(os.str());
    const auto back = read_mesh_text(is);
    ASSERT_EQ(back.num_vertices(), mesh.num_vertices());
    ASSERT_EQ(back.num_triangles(), mesh.num_triangles());
    for (Index v = 0; v < mesh.num_vertices(); ++v)
        EXPECT_EQ(back.vertex(v), mesh.vertex(v));
    for (Index t = 0; t < mesh.num_triangles(); ++t)
    {
        EXPECT_EQ(back.triangle(t), mesh.triangle(t));
        EXPECT_DOUBLE_EQ(back.area(t), mesh.area(t));
    }
}

TEST(MeshText, ReorientsAndLabelsLongestEdge)
{
    std::istringstream is("4\n0 0\n1 0\n1 1\n0 1\n2\n0 2 1\n0 3 2\n");
    const auto mesh = read_mesh_text(is);
    EXPECT_EQ(check_mesh_invariants(mesh), "");
    for (Index t = 0; t < 2; ++t)
    {
        EXPECT_NEAR(mesh.area(t), 0.5, 1e-15);
        // the diagonal is the refinement edge
        EXPECT_NEAR(mesh.edge(mesh.triangle_edges(t)[2]).length, std::sqrt(2.0), 1e-15);
    }
    const std::vector<Index> marked{0};
    EXPECT_EQ(refine(mesh, marked).num_triangles(), 4);
}

TEST(MeshText, RejectsMalformedInput)
{
    auto read = [](const std::string& text) {
        std::istringstream is(text);
        return read_mesh_text(is);
    };
    EXPECT_THROW(read(""), invalid_argument);
    EXPECT_THROW(read("3\n0 0\n1 0\n"), invalid_argument);
    EXPECT_THROW(read("3\n0 0\n1 0\n0 1\n1\n0 1 3\n"), invalid_argument);
    EXPECT_THROW(read("3\n0 0\n1 0\n2 0\n1\n0 1 2\n"), invalid_argument);
    EXPECT_THROW(read("3\n0 0\n1 0\n0 1\n1\n0 1 2\nextra\n"), invalid_argument);
    EXPECT_THROW(read("3\n0 0\n1 nan\n0 1\n1\n0 1 2\n"), invalid_argument);
    EXPECT_THROW(read_mesh_text(std::filesystem::path("/nonexistent/mesh.txt")), invalid_argument);
}

TEST(Vtk, MeshLayout)
{
    Case s(4, petal_problem());
    std::ostringstream os;
    write_mesh_vtk(os, s.cut);
    const auto v = lines(os.str());
    EXPECT_EQ(v[0], "# vtk DataFile Version 3.0");
    EXPECT_EQ(v[2], "ASCII");
    EXPECT_EQ(v[3], "DATASET UNSTRUCTURED_GRID");
    EXPECT_EQ(v[find_line(v, "POINTS")], "POINTS 25 double");
    EXPECT_EQ(v[find_line(v, "CELLS")], "CELLS 32 128");
    EXPECT_EQ(v[find_line(v, "CELL_DATA")], "CELL_DATA 32");
    const std::size_t data = find_line(v, "LOOKUP_TABLE") + 1;
    ASSERT_EQ(v.size(), data + 32);
    for (Index t = 0; t < 32; ++t)
        EXPECT_EQ(std::stoi(v[data + t]), static_cast<int>(s.cut.cell_class(t)));
}

TEST(Vtk, SolutionAndFlux)
{
    Case s(6, petal_problem());
    const auto u = solve_primal(*s.disc, s.problem);
    const auto theta = compute_multipliers_local(u, s.problem);
    const auto sigma = recover_flux(u, theta);
    const auto div = divergence_residual(sigma, *s.disc, s.problem);

    std::ostringstream so;
    write_solution_vtk(so, u);
    const auto sv = lines(so.str());
    const Index pieces = s.mesh.num_triangles() + 2 * s.cut.num_cut_cells();
    EXPECT_EQ(sv[find_line(sv, "POINTS")], "POINTS " + std::to_string(3 * pieces) + " double");
    EXPECT_EQ(sv[find_line(sv, "POINT_DATA")], "POINT_DATA " + std::to_string(3 * pieces));
    EXPECT_EQ(sv[find_line(sv, "CELL_DATA")], "CELL_DATA " + std::to_string(pieces));

    std::ostringstream fo;
    write_flux_vtk(fo, sigma, div);
    const auto fv = lines(fo.str());
    const std::size_t vec = find_line(fv, "VECTORS sigma double");
    ASSERT_LT(vec, fv.size());
    std::istringstream first(fv[vec + 1]);
    double x = 0, y = 0, z = 1;
    first >> x >> y >> z;
    const Point expected = sigma.value(0, s.mesh.centroid(0));
    EXPECT_NEAR(x, expected.x(), 1e-14 * (1 + std::abs(expected.x())));
    EXPECT_NEAR(y, expected.y(), 1e-14 * (1 + std::abs(expected.y())));
    EXPECT_EQ(z, 0.0);
    EXPECT_LT(find_line(fv, "SCALARS div_residual"), fv.size());

    DivergenceReport wrong;
    EXPECT_THROW(write_flux_vtk(fo, sigma, wrong), invalid_argument);
}
