#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cutflux/common.hpp"

namespace cutflux {

struct Rectangle
{
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 1.0;
    double y1 = 1.0;
};

/// An edge with a fixed orientation. The normal points from `minus` into
/// `plus`; on the domain boundary `plus` is `no_index` and the normal is the
/// outward one. Vertices are stored with the lower id first, and the edge
/// arclength coordinate runs from vertices[0] to vertices[1].
struct MeshEdge
{
    std::array<Index, 2> vertices{};
    Index minus = no_index;
    Index plus = no_index;
    Point normal = Point::Zero();
    double length = 0.0;

    bool on_boundary() const { return plus == no_index; }

    /// +1 if `element` is the minus side, -1 for the plus side.
    int sign_for(Index element) const { return element == minus ? 1 : -1; }

    Index other(Index element) const { return element == minus ? plus : minus; }
};

/// Conforming triangulation with oriented edge adjacency.
///
/// Triangles are counterclockwise. The edge (v0, v1) of every triangle is its
/// refinement edge for newest-vertex bisection, v2 being the newest vertex.
/// Local edge j is the edge opposite local vertex j.
class TriangleMesh
{
public:
    TriangleMesh() = default;

    TriangleMesh(std::vector<Point> vertices, std::vector<std::array<Index, 3>> triangles,
                 std::vector<Index> parent = {})
        : vertices_(std::move(vertices)), triangles_(std::move(triangles)), parent_(std::move(parent))
    {
        if (parent_.empty())
        {
            parent_.resize(triangles_.size());
            for (std::size_t t = 0; t < parent_.size(); ++t)
                parent_[t] = static_cast<Index>(t);
        }
        if (parent_.size() != triangles_.size())
            throw invalid_argument("TriangleMesh: parent map size mismatch");
        build_topology();
    }

    Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
    Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
    Index num_edges() const { return static_cast<Index>(edges_.size()); }

    const Point& vertex(Index v) const { return vertices_[v]; }
    const std::vector<Point>& vertices() const { return vertices_; }
    const std::array<Index, 3>& triangle(Index t) const { return triangles_[t]; }
    const std::vector<std::array<Index, 3>>& triangles() const { return triangles_; }
    const MeshEdge& edge(Index e) const { return edges_[e]; }
    const std::vector<MeshEdge>& edges() const { return edges_; }

    /// Edge ids of triangle t, local edge j opposite local vertex j.
    const std::array<Index, 3>& triangle_edges(Index t) const { return triangle_edges_[t]; }
    std::span<const Index> vertex_triangles(Index v) const { return vertex_triangles_[v]; }
    std::span<const Index> vertex_edges(Index v) const { return vertex_edges_[v]; }
    bool boundary_vertex(Index v) const { return boundary_vertex_[v]; }

    /// Element id in the mesh this one was refined from.
    Index parent(Index t) const { return parent_[t]; }
    const std::vector<Index>& parents() const { return parent_; }

    double area(Index t) const { return area_[t]; }
    double diameter(Index t) const { return diameter_[t]; }

    std::array<Point, 3> corners(Index t) const
    {
        const auto& tri = triangles_[t];
        return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
    }

    Point centroid(Index t) const
    {
        const auto c = corners(t);
        return (c[0] + c[1] + c[2]) / 3.0;
    }

    /// Local index (0..2) of global vertex v in triangle t, or -1.
    int local_vertex(Index t, Index v) const
    {
        const auto& tri = triangles_[t];
        for (int j = 0; j < 3; ++j)
            if (tri[j] == v)
                return j;
        return -1;
    }

    int local_edge(Index t, Index e) const
    {
        const auto& te = triangle_edges_[t];
        for (int j = 0; j < 3; ++j)
            if (te[j] == e)
                return j;
        return -1;
    }

    /// Gradients of the three barycentric coordinates of triangle t.
    std::array<Point, 3> barycentric_gradients(Index t) const
    {
        const auto c = corners(t);
        const double twice_area = cross(c[1] - c[0], c[2] - c[0]);
        std::array<Point, 3> g;
        for (int j = 0; j < 3; ++j)
        {
            const Point& a = c[(j + 1) % 3];
            const Point& b = c[(j + 2) % 3];
            g[j] = Point(a.y() - b.y(), b.x() - a.x()) / twice_area;
        }
        return g;
    }

    /// Barycentric coordinates of point p with respect to triangle t.
    Eigen::Vector3d barycentric(Index t, const Point& p) const
    {
        const auto c = corners(t);
        const double twice_area = cross(c[1] - c[0], c[2] - c[0]);
        Eigen::Vector3d lambda;
        lambda[0] = cross(c[1] - p, c[2] - p) / twice_area;
        lambda[1] = cross(c[2] - p, c[0] - p) / twice_area;
        lambda[2] = 1.0 - lambda[0] - lambda[1];
        return lambda;
    }

    /// Smallest interior angle over all triangles, in radians.
    double min_angle() const
    {
        double result = std::numbers::pi;
        for (Index t = 0; t < num_triangles(); ++t)
        {
            const auto c = corners(t);
            for (int j = 0; j < 3; ++j)
            {
                const Point a = c[(j + 1) % 3] - c[j];
                const Point b = c[(j + 2) % 3] - c[j];
                result = std::min(result, std::acos(std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0)));
            }
        }
        return result;
    }

private:
    void build_topology()
    {
        const Index nv = num_vertices();
        const Index nt = num_triangles();
        area_.resize(nt);
        diameter_.resize(nt);
        triangle_edges_.assign(nt, {no_index, no_index, no_index});
        vertex_triangles_.assign(nv, {});
        vertex_edges_.assign(nv, {});
        boundary_vertex_.assign(nv, false);
        edges_.clear();

        std::map<std::pair<Index, Index>, Index> lookup;
        for (Index t = 0; t < nt; ++t)
        {
            const auto& tri = triangles_[t];
            for (Index v : tri)
                if (v < 0 || v >= nv)
                    throw invalid_argument("TriangleMesh: vertex id out of range");
            const auto c = corners(t);
            area_[t] = 0.5 * cross(c[1] - c[0], c[2] - c[0]);
            if (!(area_[t] > 0.0))
                throw invalid_argument("TriangleMesh: triangle " + std::to_string(t) +
                                       " is not counterclockwise or is degenerate");
            for (int j = 0; j < 3; ++j)
            {
                Index a = tri[(j + 1) % 3];
                Index b = tri[(j + 2) % 3];
                auto key = std::minmax(a, b);
                auto [it, inserted] = lookup.try_emplace({key.first, key.second}, num_edges());
                if (inserted)
                {
                    MeshEdge e;
                    e.vertices = {key.first, key.second};
                    e.minus = t;
                    edges_.push_back(e);
                }
                else
                {
                    auto& e = edges_[it->second];
                    if (e.plus != no_index)
                        throw invalid_argument("TriangleMesh: edge shared by more than two triangles");
                    e.plus = t;
                }
                triangle_edges_[t][j] = it->second;
            }
            for (Index v : tri)
                vertex_triangles_[v].push_back(t);
        }

        for (Index e = 0; e < num_edges(); ++e)
        {
            auto& edge = edges_[e];
            const Point& p0 = vertices_[edge.vertices[0]];
            const Point& p1 = vertices_[edge.vertices[1]];
            edge.length = (p1 - p0).norm();
            Point n = rotate_cw(p1 - p0) / edge.length;
            // orient away from the minus element
            const int j = local_edge(edge.minus, e);
            const Point& opposite = vertices_[triangles_[edge.minus][j]];
            if (n.dot(opposite - p0) > 0.0)
                n = -n;
            edge.normal = n;
            vertex_edges_[edge.vertices[0]].push_back(e);
            vertex_edges_[edge.vertices[1]].push_back(e);
            if (edge.on_boundary())
            {
                boundary_vertex_[edge.vertices[0]] = true;
                boundary_vertex_[edge.vertices[1]] = true;
            }
        }

        for (Index t = 0; t < nt; ++t)
        {
            double h = 0.0;
            for (Index e : triangle_edges_[t])
                h = std::max(h, edges_[e].length);
            diameter_[t] = h;
        }
    }

    std::vector<Point> vertices_;
    std::vector<std::array<Index, 3>> triangles_;
    std::vector<Index> parent_;
    std::vector<MeshEdge> edges_;
    std::vector<std::array<Index, 3>> triangle_edges_;
    std::vector<std::vector<Index>> vertex_triangles_;
    std::vector<std::vector<Index>> vertex_edges_;
    std::vector<bool> boundary_vertex_;
    std::vector<double> area_;
    std::vector<double> diameter_;
};

/// Structured nx-by-ny grid, every square split along its bottom-left to
/// top-right diagonal. The diagonal is the refinement edge of both halves.
inline TriangleMesh build_structured_mesh(Index nx, Index ny, const Rectangle& domain)
{
    if (nx < 1 || ny < 1)
        throw invalid_argument("build_structured_mesh: cell counts must be positive");
    if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0))
        throw invalid_argument("build_structured_mesh: degenerate rectangle");

    std::vector<Point> vertices;
    vertices.reserve((nx + 1) * (ny + 1));
    for (Index j = 0; j <= ny; ++j)
        for (Index i = 0; i <= nx; ++i)
            vertices.emplace_back(domain.x0 + (domain.x1 - domain.x0) * double(i) / double(nx),
                                  domain.y0 + (domain.y1 - domain.y0) * double(j) / double(ny));

    auto id = [nx](Index i, Index j) { return j * (nx + 1) + i; };
    std::vector<std::array<Index, 3>> triangles;
    triangles.reserve(2 * nx * ny);
    for (Index j = 0; j < ny; ++j)
    {
        for (Index i = 0; i < nx; ++i)
        {
            const Index bl = id(i, j), br = id(i + 1, j), tr = id(i + 1, j + 1), tl = id(i, j + 1);
            triangles.push_back({tr, bl, br});
            triangles.push_back({bl, tr, tl});
        }
    }
    return TriangleMesh(std::move(vertices), std::move(triangles));
}

/// Newest-vertex bisection of the marked elements with conforming closure.
/// The parent map of the result points into `mesh`.
inline TriangleMesh refine(const TriangleMesh& mesh, std::span<const Index> marked)
{
    const Index nt = mesh.num_triangles();
    std::vector<char> edge_marked(mesh.num_edges(), 0);
    auto refinement_edge = [&](Index t) { return mesh.triangle_edges(t)[2]; };

    for (Index t : marked)
    {
        if (t < 0 || t >= nt)
            throw invalid_argument("refine: element id " + std::to_string(t) + " out of range");
        edge_marked[refinement_edge(t)] = 1;
    }

    bool changed = true;
    while (changed)
    {
        changed = false;
        for (Index t = 0; t < nt; ++t)
        {
            const Index re = refinement_edge(t);
            if (edge_marked[re])
                continue;
            for (Index e : mesh.triangle_edges(t))
            {
                if (edge_marked[e])
                {
                    edge_marked[re] = 1;
                    changed = true;
                    break;
                }
            }
        }
    }

    std::vector<Point> vertices = mesh.vertices();
    std::map<std::pair<Index, Index>, Index> midpoint;
    for (Index e = 0; e < mesh.num_edges(); ++e)
    {
        if (!edge_marked[e])
            continue;
        const auto& edge = mesh.edge(e);
        midpoint[{edge.vertices[0], edge.vertices[1]}] = static_cast<Index>(vertices.size());
        vertices.push_back(0.5 * (mesh.vertex(edge.vertices[0]) + mesh.vertex(edge.vertices[1])));
    }

    std::vector<std::array<Index, 3>> triangles;
    std::vector<Index> parent;
    triangles.reserve(nt + 2 * midpoint.size());

    auto bisect = [&](auto&& self, std::array<Index, 3> tri, Index origin) -> void {
        auto key = std::minmax(tri[0], tri[1]);
        auto it = midpoint.find({key.first, key.second});
        if (it == midpoint.end())
        {
            triangles.push_back(tri);
            parent.push_back(origin);
            return;
        }
        const Index m = it->second;
        self(self, {tri[2], tri[0], m}, origin);
        self(self, {tri[1], tri[2], m}, origin);
    };
    for (Index t = 0; t < nt; ++t)
        bisect(bisect, mesh.triangle(t), t);

    return TriangleMesh(std::move(vertices), std::move(triangles), std::move(parent));
}

inline TriangleMesh refine_uniform(const TriangleMesh& mesh)
{
    std::vector<Index> all(mesh.num_triangles());
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        all[t] = t;
    return refine(mesh, all);
}

struct PatchEdge
{
    Index edge = no_index;
    int sign = 1; // s_{F,N}
};

/// Edges meeting `node`, sorted counterclockwise by direction. The sign is +1
/// when the edge normal is the clockwise rotation of the unit vector leaving
/// the node along the edge.
inline std::vector<PatchEdge> edge_patch(const TriangleMesh& mesh, Index node)
{
    if (node < 0 || node >= mesh.num_vertices())
        throw invalid_argument("edge_patch: vertex id out of range");
    const Point& p = mesh.vertex(node);
    std::vector<std::pair<double, PatchEdge>> sorted;
    for (Index e : mesh.vertex_edges(node))
    {
        const auto& edge = mesh.edge(e);
        const Index other = edge.vertices[0] == node ? edge.vertices[1] : edge.vertices[0];
        const Point t = (mesh.vertex(other) - p) / edge.length;
        const int sign = edge.normal.dot(rotate_cw(t)) > 0.0 ? 1 : -1;
        sorted.push_back({std::atan2(t.y(), t.x()), {e, sign}});
    }
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<PatchEdge> result;
    result.reserve(sorted.size());
    for (auto& s : sorted)
        result.push_back(s.second);
    return result;
}

/// Conformity report; empty string when every invariant holds.
inline std::string check_mesh_invariants(const TriangleMesh& mesh)
{
    for (Index t = 0; t < mesh.num_triangles(); ++t)
    {
        if (!(mesh.area(t) > 0.0))
            return "non-positive area in triangle " + std::to_string(t);
        for (Index e : mesh.triangle_edges(t))
            if (mesh.edge(e).length > mesh.diameter(t) * (1 + 1e-14))
                return "edge longer than diameter";
    }
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& v : mesh.vertices())
    {
        xmin = std::min(xmin, v.x());
        xmax = std::max(xmax, v.x());
        ymin = std::min(ymin, v.y());
        ymax = std::max(ymax, v.y());
    }
    const double tol = 1e-12 * std::max(xmax - xmin, ymax - ymin);
    for (Index e = 0; e < mesh.num_edges(); ++e)
    {
        const auto& edge = mesh.edge(e);
        const Point& a = mesh.vertex(edge.vertices[0]);
        const Point& b = mesh.vertex(edge.vertices[1]);
        const Point mid = 0.5 * (a + b);
        // normal must leave the minus element
        const Point inside = mesh.centroid(edge.minus);
        if (edge.normal.dot(mid - inside) <= 0.0)
            return "edge normal does not leave its minus element";
        if (edge.on_boundary())
        {
            // for a rectangle every boundary edge lies on the bounding box; an
            // edge off the box is a hanging-node artefact
            const bool on_box = (std::abs(a.x() - xmin) < tol && std::abs(b.x() - xmin) < tol) ||
                                (std::abs(a.x() - xmax) < tol && std::abs(b.x() - xmax) < tol) ||
                                (std::abs(a.y() - ymin) < tol && std::abs(b.y() - ymin) < tol) ||
                                (std::abs(a.y() - ymax) < tol && std::abs(b.y() - ymax) < tol);
            if (!on_box)
                return "boundary edge " + std::to_string(e) + " not on the domain boundary (hanging node)";
        }
        else
        {
            const Point other = mesh.centroid(edge.plus);
            if (edge.normal.dot(other - mid) <= 0.0)
                return "edge normal does not point into its plus element";
        }
    }
    if (mesh.num_vertices() - mesh.num_edges() + mesh.num_triangles() + 1 != 2)
        return "Euler relation violated";
    return {};
}

} // namespace cutflux
