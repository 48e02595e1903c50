#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "cutflux/estimators.hpp"

namespace cutflux {

namespace detail {

inline void vtk_header(std::ostream& os, const std::string& title)
{
    os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    os.precision(17);
}

inline void vtk_triangles(std::ostream& os, const std::vector<Point>& points, Index triangles)
{
    os << "POINTS " << points.size() << " double\n";
    for (const auto& p : points)
        os << p.x() << ' ' << p.y() << " 0\n";
    os << "CELLS " << triangles << ' ' << 4 * triangles << '\n';
    for (Index t = 0; t < triangles; ++t)
        os << "3 " << 3 * t << ' ' << 3 * t + 1 << ' ' << 3 * t + 2 << '\n';
    os << "CELL_TYPES " << triangles << '\n';
    for (Index t = 0; t < triangles; ++t)
        os << "5\n";
}

inline void vtk_mesh(std::ostream& os, const TriangleMesh& mesh)
{
    os << "POINTS " << mesh.num_vertices() << " double\n";
    for (const auto& p : mesh.vertices())
        os << p.x() << ' ' << p.y() << " 0\n";
    os << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (const auto& tri : mesh.triangles())
        os << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    os << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        os << "5\n";
}

} // namespace detail

/// Mesh with the cell class (0 = region 1, 1 = region 2, 2 = cut) as cell data.
inline void write_mesh_vtk(std::ostream& os, const CutTopology& cut)
{
    const auto& mesh = cut.mesh();
    detail::vtk_header(os, "cutflux mesh");
    detail::vtk_mesh(os, mesh);
    os << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS class int 1\nLOOKUP_TABLE default\n";
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        os << static_cast<int>(cut.cell_class(t)) << '\n';
}

/// u_h on the sub-triangles of every element, each with its own corner
/// points so the jump across the interface is visible.
inline void write_solution_vtk(std::ostream& os, const PrimalSolution& u)
{
    const auto& cut = u.discretization().cut();
    std::vector<Point> points;
    std::vector<double> values;
    std::vector<int> regions;
    for (Index t = 0; t < cut.mesh().num_triangles(); ++t)
        for (int region = 1; region <= 2; ++region)
            for (const auto& tri : cut.subtriangles(t, static_cast<Region>(region)))
            {
                for (const auto& p : tri)
                {
                    points.push_back(p);
                    values.push_back(u.value(region, t, p));
                }
                regions.push_back(region);
            }
    const auto n = static_cast<Index>(regions.size());
    detail::vtk_header(os, "cutflux solution");
    detail::vtk_triangles(os, points, n);
    os << "POINT_DATA " << points.size() << "\nSCALARS u double 1\nLOOKUP_TABLE default\n";
    for (double v : values)
        os << v << '\n';
    os << "CELL_DATA " << n << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
    for (int r : regions)
        os << r << '\n';
}

/// sigma_h at element centroids and the per-element divergence residual.
inline void write_flux_vtk(std::ostream& os, const FluxField& sigma, const DivergenceReport& div)
{
    const auto& mesh = sigma.mesh();
    if (div.residual.size() != static_cast<std::size_t>(mesh.num_triangles()))
        throw invalid_argument("write_flux_vtk: residual does not match the mesh");
    detail::vtk_header(os, "cutflux flux");
    detail::vtk_mesh(os, mesh);
    os << "CELL_DATA " << mesh.num_triangles() << "\nVECTORS sigma double\n";
    for (Index t = 0; t < mesh.num_triangles(); ++t)
    {
        const Point s = sigma.value(t, mesh.centroid(t));
        os << s.x() << ' ' << s.y() << " 0\n";
    }
    os << "SCALARS div_residual double 1\nLOOKUP_TABLE default\n";
    for (double r : div.residual)
        os << r << '\n';
}

/// Text mesh: vertex count, one "x y" per line, triangle count, one
/// "i j k" (0-based) per line. Triangles are reoriented counterclockwise and
/// rotated so that the longest edge is the first refinement edge.
inline TriangleMesh read_mesh_text(std::istream& is)
{
    auto fail = [](const std::string& what) { return invalid_argument("mesh file: " + what); };
    long long nv = -1;
    if (!(is >> nv) || nv < 3)
        throw fail("bad vertex count");
    std::vector<Point> vertices(static_cast<std::size_t>(nv));
    for (auto& p : vertices)
        if (!(is >> p.x() >> p.y()) || !p.allFinite())
            throw fail("bad vertex coordinates");
    long long nt = -1;
    if (!(is >> nt) || nt < 1)
        throw fail("bad triangle count");
    std::vector<std::array<Index, 3>> triangles(static_cast<std::size_t>(nt));
    for (auto& tri : triangles)
    {
        for (auto& v : tri)
        {
            long long id = -1;
            if (!(is >> id) || id < 0 || id >= nv)
                throw fail("bad triangle vertex index");
            v = static_cast<Index>(id);
        }
        const double area = cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
        if (area == 0.0)
            throw fail("degenerate triangle");
        if (area < 0.0)
            std::swap(tri[1], tri[2]);
        int longest = 2;
        double best = -1.0;
        for (int j = 0; j < 3; ++j)
        {
            const double len = (vertices[tri[(j + 1) % 3]] - vertices[tri[(j + 2) % 3]]).norm();
            if (len > best)
            {
                best = len;
                longest = j;
            }
        }
        std::rotate(tri.begin(), tri.begin() + (longest + 1) % 3, tri.end());
    }
    std::string rest;
    if (is >> rest)
        throw fail("trailing content '" + rest + "'");
    return TriangleMesh(std::move(vertices), std::move(triangles));
}

inline TriangleMesh read_mesh_text(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw invalid_argument("cannot open mesh file " + path.string());
    return read_mesh_text(is);
}

inline void write_mesh_text(std::ostream& os, const TriangleMesh& mesh)
{
    os.precision(17);
    os << mesh.num_vertices() << '\n';
    for (const auto& p : mesh.vertices())
        os << p.x() << ' ' << p.y() << '\n';
    os << mesh.num_triangles() << '\n';
    for (const auto& tri : mesh.triangles())
        os << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
}

} // namespace cutflux
