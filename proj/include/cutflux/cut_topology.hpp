#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cutflux/common.hpp"
#include "cutflux/level_set.hpp"
#include "cutflux/mesh.hpp"
#include "cutflux/quadrature.hpp"

namespace cutflux {

enum class CellClass : std::uint8_t
{
    in1,
    in2,
    cut
};

inline const char* to_string(CellClass c)
{
    switch (c)
    {
    case CellClass::in1: return "IN_1";
    case CellClass::in2: return "IN_2";
    case CellClass::cut: return "CUT";
    }
    return "?";
}

/// Region selector for sub-cell quadrature.
enum class Region : int
{
    whole = 0,
    one = 1,
    two = 2
};

/// Geometry of a cut triangle A1 A2 A3 where A1 is the lone vertex on its
/// side of the interface, M lies on A1A2 and N on A1A3.
struct CutCell
{
    Index element = no_index;
    int lone = 0;        // local index of A1
    int lone_region = 1; // region holding the triangular part A1 M N
    Point M = Point::Zero();
    Point N = Point::Zero();
    Index edge_M = no_index;
    Index edge_N = no_index;
    Point normal = Point::Zero(); // from region 1 into region 2
    double gamma_length = 0.0;
    double area_triangle = 0.0;
    double area_quad = 0.0;
    double h_min = 0.0;

    int quad_region() const { return 3 - lone_region; }

    double region_area(int region) const { return region == lone_region ? area_triangle : area_quad; }
};

/// Per-mesh interface classification and cut geometry. Holds a pointer to the
/// mesh, which must outlive it. Immutable after construction.
class CutTopology
{
public:
    const TriangleMesh& mesh() const { return *mesh_; }

    CellClass cell_class(Index t) const { return class_[t]; }
    bool is_cut(Index t) const { return class_[t] == CellClass::cut; }

    /// T in T_h^i: the element meets region i.
    bool in_domain(int region, Index t) const { return in_domain_[region - 1][t] != 0; }

    /// F in F_h^i: interior edges whose two neighbours are in T_h^i, and
    /// boundary edges that meet region i.
    bool edge_in(int region, Index e) const { return edge_in_[region - 1][e] != 0; }

    /// F in F_g^i: interior edges of F_h^i with at least one cut neighbour.
    bool ghost_edge(int region, Index e) const { return ghost_[region - 1][e] != 0; }

    /// F in F_h^Gamma.
    bool edge_cut(Index e) const { return edge_cut_[e] != 0; }

    /// Fraction along edge e (from its vertices[0]) where the interface crosses.
    double edge_crossing(Index e) const { return edge_t_[e]; }

    /// Parameter interval [s0, s1] (fractions from vertices[0]) of e inside
    /// region i; s0 == s1 when empty.
    std::array<double, 2> edge_segment(int region, Index e) const
    {
        const auto& edge = mesh_->edge(e);
        const int r0 = vertex_region_[edge.vertices[0]];
        if (!edge_cut(e))
            return r0 == region ? std::array<double, 2>{0.0, 1.0} : std::array<double, 2>{0.0, 0.0};
        const double t = edge_t_[e];
        return r0 == region ? std::array<double, 2>{0.0, t} : std::array<double, 2>{t, 1.0};
    }

    double vertex_value(Index v) const { return phi_[v]; }
    int vertex_region(Index v) const { return vertex_region_[v]; }

    /// Interior node of Omega_h^i: off the domain boundary with every incident
    /// element in T_h^i.
    bool interior_node(int region, Index v) const
    {
        if (mesh_->boundary_vertex(v))
            return false;
        for (Index t : mesh_->vertex_triangles(v))
            if (!in_domain(region, t))
                return false;
        return true;
    }

    Index num_cut_cells() const { return static_cast<Index>(cells_.size()); }
    const std::vector<CutCell>& cut_cells() const { return cells_; }
    const CutCell& cut_cell(Index t) const { return cells_[cut_index_[t]]; }

    double region_area(Index t, int region) const
    {
        if (is_cut(t))
            return cut_cell(t).region_area(region);
        return in_domain(region, t) ? mesh_->area(t) : 0.0;
    }

    /// Triangles tiling T cap region (region = whole gives T itself).
    std::vector<std::array<Point, 3>> subtriangles(Index t, Region region) const
    {
        const auto c = mesh_->corners(t);
        if (region == Region::whole)
            return {{c[0], c[1], c[2]}};
        const int r = static_cast<int>(region);
        if (!is_cut(t))
        {
            if (in_domain(r, t))
                return {{c[0], c[1], c[2]}};
            return {};
        }
        const auto& cell = cut_cell(t);
        const Point& a1 = c[cell.lone];
        const Point& a2 = c[(cell.lone + 1) % 3];
        const Point& a3 = c[(cell.lone + 2) % 3];
        if (r == cell.lone_region)
            return {{a1, cell.M, cell.N}};
        return {{cell.M, a2, a3}, {cell.M, a3, cell.N}};
    }

    Index count(CellClass c) const
    {
        Index n = 0;
        for (auto k : class_)
            n += (k == c);
        return n;
    }

    friend CutTopology classify_cells(const TriangleMesh& mesh, const LevelSet& ls);

private:
    const TriangleMesh* mesh_ = nullptr;
    std::vector<double> phi_;
    std::vector<int> vertex_region_;
    std::vector<CellClass> class_;
    std::vector<Index> cut_index_;
    std::vector<CutCell> cells_;
    std::array<std::vector<char>, 2> in_domain_;
    std::array<std::vector<char>, 2> edge_in_;
    std::array<std::vector<char>, 2> ghost_;
    std::vector<char> edge_cut_;
    std::vector<double> edge_t_;
};

inline constexpr double snap_factor = 1e-10;

/// Classifies every element against the zero set of `ls`, reconstructing the
/// interface as one straight segment per cut element from linear
/// interpolation of vertex values. Vertex values within the snap tolerance of
/// zero are moved to +tolerance so no cut passes through a vertex.
inline CutTopology classify_cells(const TriangleMesh& mesh, const LevelSet& ls)
{
    CutTopology cut;
    cut.mesh_ = &mesh;
    const Index nv = mesh.num_vertices();
    const Index nt = mesh.num_triangles();
    const Index ne = mesh.num_edges();

    std::vector<double> raw(nv);
    std::vector<double> tol(nv);
    cut.phi_.resize(nv);
    cut.vertex_region_.resize(nv);
    for (Index v = 0; v < nv; ++v)
    {
        const Point& p = mesh.vertex(v);
        raw[v] = ls(p);
        if (!std::isfinite(raw[v]))
            throw invalid_argument("classify_cells: level set not finite at vertex " + std::to_string(v));
        double h = 0.0;
        for (Index e : mesh.vertex_edges(v))
            h = std::max(h, mesh.edge(e).length);
        tol[v] = ls.has_gradient() ? snap_factor * h * ls.gradient(p).norm() : snap_factor;
        cut.phi_[v] = std::abs(raw[v]) <= tol[v] ? tol[v] : raw[v];
        cut.vertex_region_[v] = cut.phi_[v] < 0.0 ? 1 : 2;
    }

    for (Index t = 0; t < nt; ++t)
    {
        const auto& tri = mesh.triangle(t);
        bool all_small = true;
        for (Index v : tri)
            all_small = all_small && std::abs(raw[v]) <= tol[v];
        if (all_small)
            throw degenerate_interface_error("classify_cells: element " + std::to_string(t) +
                                             " has all vertex values within snap tolerance of zero");
    }

    cut.edge_cut_.assign(ne, 0);
    cut.edge_t_.assign(ne, 0.0);
    for (Index e = 0; e < ne; ++e)
    {
        const auto& edge = mesh.edge(e);
        const double p0 = cut.phi_[edge.vertices[0]];
        const double p1 = cut.phi_[edge.vertices[1]];
        if (cut.vertex_region_[edge.vertices[0]] != cut.vertex_region_[edge.vertices[1]])
        {
            cut.edge_cut_[e] = 1;
            cut.edge_t_[e] = p0 / (p0 - p1);
        }
    }
    auto crossing_point = [&](Index e) -> Point {
        const auto& edge = mesh.edge(e);
        const double t = cut.edge_t_[e];
        return (1.0 - t) * mesh.vertex(edge.vertices[0]) + t * mesh.vertex(edge.vertices[1]);
    };

    cut.class_.resize(nt);
    cut.cut_index_.assign(nt, no_index);
    for (auto& d : cut.in_domain_)
        d.assign(nt, 0);
    for (Index t = 0; t < nt; ++t)
    {
        const auto& tri = mesh.triangle(t);
        std::array<int, 3> region{cut.vertex_region_[tri[0]], cut.vertex_region_[tri[1]],
                                  cut.vertex_region_[tri[2]]};
        if (region[0] == region[1] && region[1] == region[2])
        {
            cut.class_[t] = region[0] == 1 ? CellClass::in1 : CellClass::in2;
            cut.in_domain_[region[0] - 1][t] = 1;
            continue;
        }
        cut.class_[t] = CellClass::cut;
        cut.in_domain_[0][t] = cut.in_domain_[1][t] = 1;

        CutCell cell;
        cell.element = t;
        for (int j = 0; j < 3; ++j)
            if (region[j] != region[(j + 1) % 3] && region[j] != region[(j + 2) % 3])
                cell.lone = j;
        cell.lone_region = region[cell.lone];
        const auto c = mesh.corners(t);
        const Point& a1 = c[cell.lone];
        const Point& a2 = c[(cell.lone + 1) % 3];
        const Point& a3 = c[(cell.lone + 2) % 3];
        // local edge opposite A3 joins A1 and A2
        cell.edge_M = mesh.triangle_edges(t)[(cell.lone + 2) % 3];
        cell.edge_N = mesh.triangle_edges(t)[(cell.lone + 1) % 3];
        cell.M = crossing_point(cell.edge_M);
        cell.N = crossing_point(cell.edge_N);
        cell.gamma_length = (cell.N - cell.M).norm();
        Point n = rotate_cw(cell.N - cell.M) / cell.gamma_length;
        const Point& towards_two = cell.lone_region == 2 ? a1 : a2;
        if (n.dot(towards_two - cell.M) < 0.0)
            n = -n;
        cell.normal = n;
        cell.area_triangle = 0.5 * std::abs(cross(cell.M - a1, cell.N - a1));
        cell.area_quad = mesh.area(t) - cell.area_triangle;
        cell.h_min = std::min({(cell.M - a1).norm(), (a2 - cell.M).norm(), (cell.N - a1).norm(),
                               (a3 - cell.N).norm()});
        cut.cut_index_[t] = static_cast<Index>(cut.cells_.size());
        cut.cells_.push_back(cell);
    }

    for (int i = 0; i < 2; ++i)
    {
        cut.edge_in_[i].assign(ne, 0);
        cut.ghost_[i].assign(ne, 0);
    }
    for (Index e = 0; e < ne; ++e)
    {
        const auto& edge = mesh.edge(e);
        for (int i = 0; i < 2; ++i)
        {
            const int region = i + 1;
            if (edge.on_boundary())
            {
                const bool touches = cut.vertex_region_[edge.vertices[0]] == region ||
                                     cut.vertex_region_[edge.vertices[1]] == region;
                cut.edge_in_[i][e] = touches && cut.in_domain(region, edge.minus);
            }
            else
            {
                const bool inside = cut.in_domain(region, edge.minus) && cut.in_domain(region, edge.plus);
                cut.edge_in_[i][e] = inside;
                cut.ghost_[i][e] = inside && (cut.is_cut(edge.minus) || cut.is_cut(edge.plus));
            }
        }
    }
    return cut;
}

/// Quadrature on T cap region; empty when the element misses the region.
inline QuadratureRule subcell_quadrature(const CutTopology& cut, Index element, Region region, int degree)
{
    if (element < 0 || element >= cut.mesh().num_triangles())
        throw invalid_argument("subcell_quadrature: unknown element");
    if (degree < 0 || degree > max_quadrature_degree)
        throw invalid_argument("subcell_quadrature: unsupported degree");
    QuadratureRule rule;
    rule.degree = degree;
    for (const auto& tri : cut.subtriangles(element, region))
        rule.append(triangle_rule(tri[0], tri[1], tri[2], degree));
    return rule;
}

/// Gauss-Legendre rule on the interface segment of a cut element.
inline QuadratureRule interface_quadrature(const CutTopology& cut, Index element, int degree)
{
    if (element < 0 || element >= cut.mesh().num_triangles() || !cut.is_cut(element))
        throw invalid_argument("interface_quadrature: element is not cut");
    const auto& cell = cut.cut_cell(element);
    return segment_rule(cell.M, cell.N, degree);
}

/// CSV: element, class, gamma_length, h_min.
inline void write_cut_topology_csv(std::ostream& os, const CutTopology& cut)
{
    os << "element,class,gamma_length,h_min\n";
    os.precision(17);
    for (Index t = 0; t < cut.mesh().num_triangles(); ++t)
    {
        os << t << ',' << to_string(cut.cell_class(t)) << ',';
        if (cut.is_cut(t))
            os << cut.cut_cell(t).gamma_length << ',' << cut.cut_cell(t).h_min << '\n';
        else
            os << "0,0\n";
    }
}

} // namespace cutflux
