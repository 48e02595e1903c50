#pragma once

#include <array>
#include <numeric>
#include <vector>

#include <Eigen/Sparse>

#include "cutflux/common.hpp"
#include "cutflux/cut_topology.hpp"

namespace cutflux {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Nodal P1 degrees of freedom of C_h = C_h^1 x C_h^2.
///
/// Each region owns the vertices of its elements. Around a vertex, the region
/// elements are grouped into fans connected through edges of F_h^i; every fan
/// carries its own value (almost always a single fan per vertex).
class DofHandlerC
{
public:
    DofHandlerC() = default;

    explicit DofHandlerC(const CutTopology& cut)
    {
        const auto& mesh = cut.mesh();
        const Index nt = mesh.num_triangles();
        for (int i = 0; i < 2; ++i)
            local_[i].assign(nt, {no_index, no_index, no_index});

        std::vector<Index> parent;
        auto find = [&](Index a) {
            while (parent[a] != a)
                a = parent[a] = parent[parent[a]];
            return a;
        };
        for (int region = 1; region <= 2; ++region)
        {
            auto& local = local_[region - 1];
            for (Index v = 0; v < mesh.num_vertices(); ++v)
            {
                const auto tris = mesh.vertex_triangles(v);
                std::vector<Index> members;
                for (Index t : tris)
                    if (cut.in_domain(region, t))
                        members.push_back(t);
                if (members.empty())
                    continue;
                parent.resize(members.size());
                std::iota(parent.begin(), parent.end(), Index{0});
                auto slot = [&](Index t) {
                    for (std::size_t k = 0; k < members.size(); ++k)
                        if (members[k] == t)
                            return static_cast<Index>(k);
                    return no_index;
                };
                for (Index e : mesh.vertex_edges(v))
                {
                    const auto& edge = mesh.edge(e);
                    if (edge.on_boundary() || !cut.edge_in(region, e))
                        continue;
                    const Index a = find(slot(edge.minus));
                    const Index b = find(slot(edge.plus));
                    if (a != b)
                        parent[std::max(a, b)] = std::min(a, b);
                }
                std::vector<Index> component_dof(members.size(), no_index);
                for (std::size_t k = 0; k < members.size(); ++k)
                {
                    const Index root = find(static_cast<Index>(k));
                    if (component_dof[root] == no_index)
                    {
                        component_dof[root] = static_cast<Index>(vertex_.size());
                        vertex_.push_back(v);
                        region_.push_back(region);
                    }
                    const Index t = members[k];
                    local[t][mesh.local_vertex(t, v)] = component_dof[root];
                }
            }
        }

        dirichlet_.assign(vertex_.size(), 0);
        for (Index e = 0; e < mesh.num_edges(); ++e)
        {
            const auto& edge = mesh.edge(e);
            if (!edge.on_boundary())
                continue;
            for (int region = 1; region <= 2; ++region)
            {
                if (!cut.edge_in(region, e))
                    continue;
                for (Index v : edge.vertices)
                    dirichlet_[dof(region, edge.minus, mesh.local_vertex(edge.minus, v))] = 1;
            }
        }
    }

    Index size() const { return static_cast<Index>(vertex_.size()); }

    /// Dof of local vertex j of element t in the given region (no_index when
    /// t is not in T_h^region).
    Index dof(int region, Index t, int j) const { return local_[region - 1][t][j]; }

    Index vertex(Index dof) const { return vertex_[dof]; }
    int region(Index dof) const { return region_[dof]; }
    bool dirichlet(Index dof) const { return dirichlet_[dof] != 0; }

    Index num_dirichlet() const
    {
        Index n = 0;
        for (char d : dirichlet_)
            n += d;
        return n;
    }

private:
    std::array<std::vector<std::array<Index, 3>>, 2> local_;
    std::vector<Index> vertex_;
    std::vector<int> region_;
    std::vector<char> dirichlet_;
};

/// Elementwise discontinuous P1 on T_h^1 and T_h^2: three values per element
/// and region.
class DofHandlerD
{
public:
    DofHandlerD() = default;

    explicit DofHandlerD(const CutTopology& cut)
    {
        const Index nt = cut.mesh().num_triangles();
        Index next = 0;
        for (int region = 1; region <= 2; ++region)
        {
            auto& offset = offset_[region - 1];
            offset.assign(nt, no_index);
            for (Index t = 0; t < nt; ++t)
            {
                if (!cut.in_domain(region, t))
                    continue;
                offset[t] = next;
                element_.push_back(t);
                region_.push_back(region);
                next += 3;
            }
        }
        size_ = next;
    }

    Index size() const { return size_; }
    Index dof(int region, Index t, int j) const
    {
        const Index o = offset_[region - 1][t];
        return o == no_index ? no_index : o + j;
    }
    bool has(int region, Index t) const { return offset_[region - 1][t] != no_index; }

    Index block_count() const { return static_cast<Index>(element_.size()); }
    /// Element and region of dof block b (dofs 3b..3b+2).
    Index block_element(Index b) const { return element_[b]; }
    int block_region(Index b) const { return region_[b]; }

private:
    std::array<std::vector<Index>, 2> offset_;
    std::vector<Index> element_;
    std::vector<int> region_;
    Index size_ = 0;
};

/// Endpoint values of the P1 edge multipliers of M_h (before the nodal
/// constraint), two per edge of F_h^i and region.
class MultiplierDofs
{
public:
    MultiplierDofs() = default;

    explicit MultiplierDofs(const CutTopology& cut)
    {
        const Index ne = cut.mesh().num_edges();
        Index next = 0;
        for (int region = 1; region <= 2; ++region)
        {
            auto& offset = offset_[region - 1];
            offset.assign(ne, no_index);
            for (Index e = 0; e < ne; ++e)
            {
                if (!cut.edge_in(region, e))
                    continue;
                offset[e] = next;
                edge_.push_back(e);
                region_.push_back(region);
                next += 2;
            }
        }
        size_ = next;
    }

    Index size() const { return size_; }

    /// Value of the region multiplier on edge e at edge.vertices[endpoint].
    Index dof(int region, Index e, int endpoint) const
    {
        const Index o = offset_[region - 1][e];
        return o == no_index ? no_index : o + endpoint;
    }

    Index pair_count() const { return static_cast<Index>(edge_.size()); }
    Index pair_edge(Index p) const { return edge_[p]; }
    int pair_region(Index p) const { return region_[p]; }

private:
    std::array<std::vector<Index>, 2> offset_;
    std::vector<Index> edge_;
    std::vector<int> region_;
    Index size_ = 0;
};

/// Injection C_h -> D_h.
inline SparseMatrix prolongation(const DofHandlerC& c, const DofHandlerD& d)
{
    std::vector<Triplet> entries;
    entries.reserve(d.size());
    for (Index b = 0; b < d.block_count(); ++b)
    {
        const Index t = d.block_element(b);
        const int region = d.block_region(b);
        for (int j = 0; j < 3; ++j)
            entries.emplace_back(d.dof(region, t, j), c.dof(region, t, j), 1.0);
    }
    SparseMatrix p(d.size(), c.size());
    p.setFromTriplets(entries.begin(), entries.end());
    return p;
}

} // namespace cutflux
