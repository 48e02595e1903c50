#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "cutflux/common.hpp"
#include "cutflux/cut_topology.hpp"
#include "cutflux/dofs.hpp"
#include "cutflux/problem.hpp"
#include "cutflux/quadrature.hpp"

namespace cutflux {

enum class BoundaryMode
{
    homogeneous,
    interpolated_exact
};

struct SolverConfig
{
    double gamma = 10.0;   // Nitsche penalty
    double gamma_g = 0.1;  // ghost penalty
    double tolerance = 1e-12;
    int rt_order = 1;
    int stiffness_degree = 2;
    int source_degree = 7;
    int error_degree = 7;
    BoundaryMode boundary = BoundaryMode::interpolated_exact;

    void validate() const
    {
        if (!(gamma > 0.0))
            throw invalid_argument("SolverConfig: gamma must be positive");
        if (!(gamma_g >= 0.0))
            throw invalid_argument("SolverConfig: gamma_g must be non-negative");
        if (rt_order != 0 && rt_order != 1)
            throw invalid_argument("SolverConfig: RT order must be 0 or 1");
        if (!(tolerance > 0.0))
            throw invalid_argument("SolverConfig: tolerance must be positive");
    }
};

/// Everything the forms need: mesh, cut geometry, coefficients, parameters
/// and the three dof layouts. References the cut topology (and its mesh),
/// which must outlive it.
class Discretization
{
public:
    Discretization(const CutTopology& cut, const DiffusionData& K, const SolverConfig& cfg)
        : cut_(&cut), K_(K), cfg_(cfg), dofs_c_(cut), dofs_d_(cut), dofs_m_(cut)
    {
        cfg_.validate();
        prolongation_ = prolongation(dofs_c_, dofs_d_);
    }

    const TriangleMesh& mesh() const { return cut_->mesh(); }
    const CutTopology& cut() const { return *cut_; }
    const DiffusionData& diffusion() const { return K_; }
    const SolverConfig& config() const { return cfg_; }
    const DofHandlerC& dofs_c() const { return dofs_c_; }
    const DofHandlerD& dofs_d() const { return dofs_d_; }
    const MultiplierDofs& dofs_m() const { return dofs_m_; }
    /// D_h coefficients of a C_h field.
    const SparseMatrix& prolongation_matrix() const { return prolongation_; }

private:
    const CutTopology* cut_;
    DiffusionData K_;
    SolverConfig cfg_;
    DofHandlerC dofs_c_;
    DofHandlerD dofs_d_;
    MultiplierDofs dofs_m_;
    SparseMatrix prolongation_;
};

namespace detail {

inline void add_outer(std::vector<Triplet>& out, std::span<const Index> rows, const Eigen::VectorXd& r,
                      std::span<const Index> cols, const Eigen::VectorXd& c, double scale)
{
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b)
        {
            const double v = scale * r[a] * c[b];
            if (v != 0.0)
                out.emplace_back(rows[a], cols[b], v);
        }
}

/// Dofs and normal-derivative coefficients of the jump [[grad v . n_F]] over
/// an interior edge, for one region.
struct EdgeJump
{
    std::array<Index, 6> dofs{};
    Eigen::VectorXd coeff = Eigen::VectorXd::Zero(6);
};

inline EdgeJump normal_derivative_jump(const Discretization& disc, int region, Index e)
{
    const auto& mesh = disc.mesh();
    const auto& edge = mesh.edge(e);
    EdgeJump jump;
    const auto gm = mesh.barycentric_gradients(edge.minus);
    const auto gp = mesh.barycentric_gradients(edge.plus);
    for (int j = 0; j < 3; ++j)
    {
        jump.dofs[j] = disc.dofs_d().dof(region, edge.minus, j);
        jump.dofs[3 + j] = disc.dofs_d().dof(region, edge.plus, j);
        jump.coeff[j] = gm[j].dot(edge.normal);
        jump.coeff[3 + j] = -gp[j].dot(edge.normal);
    }
    return jump;
}

inline SparseMatrix from_triplets(Index rows, Index cols, const std::vector<Triplet>& entries)
{
    SparseMatrix m(rows, cols);
    m.setFromTriplets(entries.begin(), entries.end());
    return m;
}

} // namespace detail

/// Which parts of the Nitsche form to assemble.
struct FormParts
{
    bool volume = true;
    bool ghost = true;
    bool interface = true;
};

/// Matrix of a_h on D_h x D_h: cut volume terms, ghost penalty over full
/// edges of F_g^i, and the three Nitsche interface terms.
inline SparseMatrix nitsche_matrix(const Discretization& disc, FormParts parts = {})
{
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    const auto& K = disc.diffusion();
    const auto& cfg = disc.config();
    const auto& dofs = disc.dofs_d();
    std::vector<Triplet> entries;
    entries.reserve(9 * dofs.size());

    if (parts.volume)
    {
        for (Index b = 0; b < dofs.block_count(); ++b)
        {
            const Index t = dofs.block_element(b);
            const int region = dofs.block_region(b);
            const double weight = K.k(region) * cut.region_area(t, region);
            const auto g = mesh.barycentric_gradients(t);
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c)
                    entries.emplace_back(3 * b + a, 3 * b + c, weight * g[a].dot(g[c]));
        }
    }

    if (parts.ghost)
    {
        for (Index e = 0; e < mesh.num_edges(); ++e)
        {
            for (int region = 1; region <= 2; ++region)
            {
                if (!cut.ghost_edge(region, e))
                    continue;
                const double h = mesh.edge(e).length;
                const auto jump = detail::normal_derivative_jump(disc, region, e);
                detail::add_outer(entries, jump.dofs, jump.coeff, jump.dofs, jump.coeff,
                                  cfg.gamma_g * h * K.k(region) * h);
            }
        }
    }

    if (parts.interface)
    {
        const double kg = K.k_gamma();
        for (const auto& cell : cut.cut_cells())
        {
            const Index t = cell.element;
            const auto g = mesh.barycentric_gradients(t);
            const double h = mesh.diameter(t);
            std::array<Index, 6> d{};
            Eigen::VectorXd flux(6);
            for (int j = 0; j < 3; ++j)
            {
                d[j] = dofs.dof(1, t, j);
                d[3 + j] = dofs.dof(2, t, j);
                // {K grad v . n} = omega_1 k_1 grad v^1 . n + omega_2 k_2 grad v^2 . n
                flux[j] = kg * g[j].dot(cell.normal);
                flux[3 + j] = kg * g[j].dot(cell.normal);
            }
            const auto rule = segment_rule(cell.M, cell.N, 2);
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                const auto lambda = mesh.barycentric(t, rule.points[q]);
                Eigen::VectorXd jump(6);
                for (int j = 0; j < 3; ++j)
                {
                    jump[j] = lambda[j];
                    jump[3 + j] = -lambda[j];
                }
                const double w = rule.weights[q];
                detail::add_outer(entries, d, jump, d, jump, w * cfg.gamma * kg / h);
                detail::add_outer(entries, d, jump, d, flux, -w);
                detail::add_outer(entries, d, flux, d, jump, -w);
            }
        }
    }
    return detail::from_triplets(dofs.size(), dofs.size(), entries);
}

/// J with J(u, v) = sum_i sum_{F in F_h^i} int_{F cap Omega^i} <k_i grad u . n_F> [[v]] ds,
/// stored with rows indexing v. The symmetric d_h form is J + J^T.
inline SparseMatrix jump_flux_matrix(const Discretization& disc)
{
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    const auto& K = disc.diffusion();
    const auto& dofs = disc.dofs_d();
    std::vector<Triplet> entries;

    for (Index e = 0; e < mesh.num_edges(); ++e)
    {
        const auto& edge = mesh.edge(e);
        const Point& p0 = mesh.vertex(edge.vertices[0]);
        const Point& p1 = mesh.vertex(edge.vertices[1]);
        for (int region = 1; region <= 2; ++region)
        {
            if (!cut.edge_in(region, e))
                continue;
            const auto seg = cut.edge_segment(region, e);
            const double length = (seg[1] - seg[0]) * edge.length;
            if (length <= 0.0)
                continue;
            const Point mid = p0 + 0.5 * (seg[0] + seg[1]) * (p1 - p0);
            const double k = K.k(region);
            const bool interior = !edge.on_boundary();
            const int sides = interior ? 2 : 1;
            std::array<Index, 6> d{};
            Eigen::VectorXd flux = Eigen::VectorXd::Zero(3 * sides);
            Eigen::VectorXd jump = Eigen::VectorXd::Zero(3 * sides);
            for (int s = 0; s < sides; ++s)
            {
                const Index t = s == 0 ? edge.minus : edge.plus;
                const auto g = mesh.barycentric_gradients(t);
                const auto lambda = mesh.barycentric(t, mid);
                const double avg = interior ? 0.5 : 1.0;
                const double sign = s == 0 ? 1.0 : -1.0;
                for (int j = 0; j < 3; ++j)
                {
                    d[3 * s + j] = dofs.dof(region, t, j);
                    flux[3 * s + j] = avg * k * g[j].dot(edge.normal);
                    jump[3 * s + j] = sign * lambda[j] * length;
                }
            }
            std::span<const Index> dd(d.data(), 3 * sides);
            detail::add_outer(entries, dd, jump, dd, flux, 1.0);
        }
    }
    return detail::from_triplets(dofs.size(), dofs.size(), entries);
}

/// Matrix of b_h with rows indexing D_h and columns the multiplier endpoint
/// values: b_h(mu, v) = v^T B mu.
inline SparseMatrix multiplier_matrix(const Discretization& disc)
{
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    const auto& K = disc.diffusion();
    std::vector<Triplet> entries;
    for (Index e = 0; e < mesh.num_edges(); ++e)
    {
        const auto& edge = mesh.edge(e);
        for (int region = 1; region <= 2; ++region)
        {
            if (!cut.edge_in(region, e))
                continue;
            const double c = 0.5 * K.k(region) * edge.length;
            for (int end = 0; end < 2; ++end)
            {
                const Index m = disc.dofs_m().dof(region, e, end);
                const Index v = edge.vertices[end];
                entries.emplace_back(disc.dofs_d().dof(region, edge.minus, mesh.local_vertex(edge.minus, v)), m, c);
                if (!edge.on_boundary())
                    entries.emplace_back(disc.dofs_d().dof(region, edge.plus, mesh.local_vertex(edge.plus, v)), m,
                                         -c);
            }
        }
    }
    return detail::from_triplets(disc.dofs_d().size(), disc.dofs_m().size(), entries);
}

/// l_h on D_h: sum_i int_{T cap Omega^i} f^i v^i.
inline Vector load_vector(const Discretization& disc, const RegionFunction& f, int degree)
{
    const auto& mesh = disc.mesh();
    const auto& dofs = disc.dofs_d();
    Vector l = Vector::Zero(dofs.size());
    for (Index b = 0; b < dofs.block_count(); ++b)
    {
        const Index t = dofs.block_element(b);
        const int region = dofs.block_region(b);
        const auto rule = subcell_quadrature(disc.cut(), t, static_cast<Region>(region), degree);
        for (std::size_t q = 0; q < rule.size(); ++q)
        {
            const double fw = rule.weights[q] * f(rule.points[q], region);
            const auto lambda = mesh.barycentric(t, rule.points[q]);
            for (int j = 0; j < 3; ++j)
                l[3 * b + j] += fw * lambda[j];
        }
    }
    return l;
}

/// Gram matrix of the discrete norm ||.||_h on D_h (broken volume, ghost
/// jumps and interface jumps, without penalty parameters).
inline SparseMatrix h_norm_matrix(const Discretization& disc)
{
    SolverConfig unit = disc.config();
    unit.gamma_g = 1.0;
    const Discretization plain(disc.cut(), disc.diffusion(), unit);
    SparseMatrix m = nitsche_matrix(plain, {true, true, false});

    const auto& mesh = disc.mesh();
    const auto& dofs = disc.dofs_d();
    const double kg = disc.diffusion().k_gamma();
    std::vector<Triplet> entries;
    for (const auto& cell : disc.cut().cut_cells())
    {
        const Index t = cell.element;
        std::array<Index, 6> d{};
        for (int j = 0; j < 3; ++j)
        {
            d[j] = dofs.dof(1, t, j);
            d[3 + j] = dofs.dof(2, t, j);
        }
        const auto rule = segment_rule(cell.M, cell.N, 2);
        for (std::size_t q = 0; q < rule.size(); ++q)
        {
            const auto lambda = mesh.barycentric(t, rule.points[q]);
            Eigen::VectorXd jump(6);
            for (int j = 0; j < 3; ++j)
            {
                jump[j] = lambda[j];
                jump[3 + j] = -lambda[j];
            }
            detail::add_outer(entries, d, jump, d, jump, rule.weights[q] * kg / mesh.diameter(t));
        }
    }
    m += detail::from_triplets(dofs.size(), dofs.size(), entries);
    return m;
}

/// Gram matrix of sum_i sum_{F in F_h^i} k_i / h_F ||[[v^i]]||_F^2.
inline SparseMatrix edge_jump_norm_matrix(const Discretization& disc)
{
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    const auto& dofs = disc.dofs_d();
    std::vector<Triplet> entries;
    for (Index e = 0; e < mesh.num_edges(); ++e)
    {
        const auto& edge = mesh.edge(e);
        const Point& p0 = mesh.vertex(edge.vertices[0]);
        const Point& p1 = mesh.vertex(edge.vertices[1]);
        const auto rule = segment_rule(p0, p1, 2);
        for (int region = 1; region <= 2; ++region)
        {
            if (!cut.edge_in(region, e))
                continue;
            const int sides = edge.on_boundary() ? 1 : 2;
            std::array<Index, 6> d{};
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                Eigen::VectorXd jump = Eigen::VectorXd::Zero(3 * sides);
                for (int s = 0; s < sides; ++s)
                {
                    const Index t = s == 0 ? edge.minus : edge.plus;
                    const auto lambda = mesh.barycentric(t, rule.points[q]);
                    for (int j = 0; j < 3; ++j)
                    {
                        d[3 * s + j] = dofs.dof(region, t, j);
                        jump[3 * s + j] = (s == 0 ? 1.0 : -1.0) * lambda[j];
                    }
                }
                std::span<const Index> dd(d.data(), 3 * sides);
                detail::add_outer(entries, dd, jump, dd, jump,
                                  rule.weights[q] * disc.diffusion().k(region) / edge.length);
            }
        }
    }
    return detail::from_triplets(dofs.size(), dofs.size(), entries);
}

/// Gram matrix of ||mu||_{M_h}^2 = sum_i sum_F k_i h_F ||mu^i||_F^2.
inline SparseMatrix multiplier_norm_matrix(const Discretization& disc)
{
    const auto& mesh = disc.mesh();
    const auto& dofs = disc.dofs_m();
    std::vector<Triplet> entries;
    for (Index p = 0; p < dofs.pair_count(); ++p)
    {
        const Index e = dofs.pair_edge(p);
        const int region = dofs.pair_region(p);
        const double h = mesh.edge(e).length;
        // int_F mu^2 = h/6 (2 mu0^2 + 2 mu0 mu1 + 2 mu1^2)
        const double c = disc.diffusion().k(region) * h * h / 6.0;
        const Index m0 = dofs.dof(region, e, 0);
        const Index m1 = dofs.dof(region, e, 1);
        entries.emplace_back(m0, m0, 2 * c);
        entries.emplace_back(m1, m1, 2 * c);
        entries.emplace_back(m0, m1, c);
        entries.emplace_back(m1, m0, c);
    }
    return detail::from_triplets(dofs.size(), dofs.size(), entries);
}

} // namespace cutflux
