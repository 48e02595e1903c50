#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "cutflux/flux.hpp"

namespace cutflux {

/// Per-element indicators and global sums. The per-element columns hold
/// norms, so eta^2 = sum eta_T^2 and likewise for the other two.
struct EstimatorReport
{
    std::vector<double> eta_T;
    std::vector<double> eta_tilde_T; // zero off the interface
    std::vector<double> osc_T;       // h_T / sqrt(delta_T) ||f - pi f||_T
    double eta = 0.0;
    double eta_gamma = 0.0;
    double eps = 0.0;
    double error = std::numeric_limits<double>::quiet_NaN();
    double gap = 0.0; // |I_h u_h - u_h|_{1,K,h}

    double effectivity() const { return (eta + eta_gamma) / error; }
};

namespace detail {

inline double sum_sqrt(const std::vector<double>& v)
{
    double s = 0.0;
    for (double x : v)
        s += x * x;
    return std::sqrt(s);
}

} // namespace detail

/// eta_T^2 = sum_i int_{T cap Omega^i} k_i^{-1} |sigma - k_i grad u^i|^2.
inline std::vector<double> compute_eta(const FluxField& sigma, const PrimalSolution& u)
{
    const auto& disc = u.discretization();
    const auto& mesh = disc.mesh();
    if (&sigma.mesh() != &mesh)
        throw invalid_argument("compute_eta: flux and solution live on different meshes");
    const auto& K = disc.diffusion();
    std::vector<double> eta(mesh.num_triangles(), 0.0);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
    {
        double s = 0.0;
        for (int region = 1; region <= 2; ++region)
        {
            const auto rule = subcell_quadrature(disc.cut(), t, static_cast<Region>(region), 2 * sigma.order() + 2);
            if (rule.size() == 0)
                continue;
            const double k = K.k(region);
            const Point ku = k * u.gradient(region, t);
            for (std::size_t q = 0; q < rule.size(); ++q)
                s += rule.weights[q] * (sigma.value_unchecked(t, rule.points[q]) - ku).squaredNorm() / k;
        }
        eta[t] = std::sqrt(s);
    }
    return eta;
}

/// eta~_T^2 = h_T k_Gamma / (|Gamma_T| h_T^min) ||[u_h]||^2 on the reconstructed
/// segment; zero on uncut elements.
inline std::vector<double> compute_eta_gamma(const PrimalSolution& u)
{
    const auto& disc = u.discretization();
    const auto& cut = disc.cut();
    const double kg = disc.diffusion().k_gamma();
    std::vector<double> eta(disc.mesh().num_triangles(), 0.0);
    for (const auto& cell : cut.cut_cells())
    {
        const Index t = cell.element;
        const auto rule = interface_quadrature(cut, t, 2);
        const double j2 = rule.integrate([&](const Point& p) {
            const double j = u.value(1, t, p) - u.value(2, t, p);
            return j * j;
        });
        eta[t] = std::sqrt(disc.mesh().diameter(t) * kg / (cell.gamma_length * cell.h_min) * j2);
    }
    return eta;
}

/// h_T / sqrt(delta_T) ||f - pi^m_T f||_T, with the projection taken over the
/// whole element and f integrated region by region.
inline std::vector<double> compute_data_oscillation(const Discretization& disc, const InterfaceProblem& problem,
                                                    int order)
{
    const auto& mesh = disc.mesh();
    const auto& K = disc.diffusion();
    const int degree = std::max(source_degree(disc, problem), disc.config().error_degree);
    std::vector<double> osc(mesh.num_triangles(), 0.0);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
    {
        const auto pi = project_source(disc, problem, t, order);
        const Point c = mesh.centroid(t);
        const double h = mesh.diameter(t);
        double s = 0.0;
        for (int region = 1; region <= 2; ++region)
        {
            const auto rule = subcell_quadrature(disc.cut(), t, static_cast<Region>(region), degree);
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                const Point xi = (rule.points[q] - c) / h;
                const double r = problem.source(rule.points[q], region) - (pi[0] + pi[1] * xi.x() + pi[2] * xi.y());
                s += rule.weights[q] * r * r;
            }
        }
        osc[t] = h * std::sqrt(s / K.delta(disc.cut(), t));
    }
    return osc;
}

/// |u - u_h|_{1,K,h} from the exact gradient, region by region.
inline double exact_energy_error(const PrimalSolution& u, const RegionGradient& exact_gradient, int degree)
{
    if (!exact_gradient)
        throw invalid_argument("exact_energy_error: no exact gradient");
    const auto& disc = u.discretization();
    const auto& K = disc.diffusion();
    double s = 0.0;
    for (Index t = 0; t < disc.mesh().num_triangles(); ++t)
        for (int region = 1; region <= 2; ++region)
        {
            const auto rule = subcell_quadrature(disc.cut(), t, static_cast<Region>(region), degree);
            if (rule.size() == 0)
                continue;
            const Point g = u.gradient(region, t);
            for (std::size_t q = 0; q < rule.size(); ++q)
                s += rule.weights[q] * K.k(region) * (exact_gradient(rule.points[q], region) - g).squaredNorm();
        }
    return std::sqrt(s);
}

inline double exact_energy_error(const PrimalSolution& u, const RegionGradient& exact_gradient)
{
    return exact_energy_error(u, exact_gradient, u.discretization().config().error_degree);
}

/// Continuous piecewise-linear field on the split mesh: uncut elements keep
/// u_h, each cut element A1 A2 A3 is split into A1 M N and two triangles
/// covering the quadrilateral, with nodal values u_h(A_i) from the region
/// owning A_i and {u_h}* at M and N.
class ConformingInterpolant
{
public:
    struct Piece
    {
        std::array<Point, 3> nodes;
        Eigen::Vector3d values;
        int region = 1;

        Point gradient() const
        {
            const Point e1 = nodes[1] - nodes[0];
            const Point e2 = nodes[2] - nodes[0];
            const double det = cross(e1, e2);
            const double d1 = values[1] - values[0];
            const double d2 = values[2] - values[0];
            return Point(d1 * e2.y() - d2 * e1.y(), d2 * e1.x() - d1 * e2.x()) / det;
        }

        double area() const { return 0.5 * std::abs(cross(nodes[1] - nodes[0], nodes[2] - nodes[0])); }

        Eigen::Vector3d barycentric(const Point& p) const
        {
            const double det = cross(nodes[1] - nodes[0], nodes[2] - nodes[0]);
            const double l1 = cross(p - nodes[0], nodes[2] - nodes[0]) / det;
            const double l2 = cross(nodes[1] - nodes[0], p - nodes[0]) / det;
            return Eigen::Vector3d(1.0 - l1 - l2, l1, l2);
        }
    };

    explicit ConformingInterpolant(const PrimalSolution& u) : u_(&u)
    {
        const auto& disc = u.discretization();
        const auto& mesh = disc.mesh();
        const auto& cut = disc.cut();
        const auto& K = disc.diffusion();
        index_.assign(mesh.num_triangles(), no_index);
        for (const auto& cell : cut.cut_cells())
        {
            const Index t = cell.element;
            const auto c = mesh.corners(t);
            const int i1 = cell.lone;
            const int i2 = (cell.lone + 1) % 3;
            const int i3 = (cell.lone + 2) % 3;
            const int r1 = cell.lone_region;
            const int r2 = cell.quad_region();
            const double a1 = u.local(r1, t)[i1];
            const double a2 = u.local(r2, t)[i2];
            const double a3 = u.local(r2, t)[i3];
            auto mean_star = [&](const Point& p) {
                return K.omega2() * u.value(1, t, p) + K.omega1() * u.value(2, t, p);
            };
            const double m = mean_star(cell.M);
            const double n = mean_star(cell.N);

            std::array<Piece, 3> pieces;
            pieces[0] = {{c[i1], cell.M, cell.N}, {a1, m, n}, r1};
            // diagonal from the quad vertex opposite the shorter cut sub-segment
            const double a2m = (c[i2] - cell.M).norm();
            const double a3n = (c[i3] - cell.N).norm();
            if (a2m <= a3n)
            {
                pieces[1] = {{cell.M, c[i2], c[i3]}, {m, a2, a3}, r2};
                pieces[2] = {{cell.M, c[i3], cell.N}, {m, a3, n}, r2};
            }
            else
            {
                pieces[1] = {{cell.M, c[i2], cell.N}, {m, a2, n}, r2};
                pieces[2] = {{cell.N, c[i2], c[i3]}, {n, a2, a3}, r2};
            }
            index_[t] = static_cast<Index>(pieces_.size());
            pieces_.push_back(pieces);
            if (cell.h_min <= snap_factor * mesh.diameter(t))
                flagged_.push_back(t);
        }
    }

    bool is_split(Index t) const { return index_[t] != no_index; }

    const std::array<Piece, 3>& pieces(Index t) const
    {
        if (!is_split(t))
            throw invalid_argument("ConformingInterpolant: element is not cut");
        return pieces_[index_[t]];
    }

    /// Cut elements whose shortest cut sub-segment is below the snap floor.
    const std::vector<Index>& flagged() const { return flagged_; }

    double value(Index t, const Point& p) const
    {
        if (!is_split(t))
        {
            const auto& cut = u_->discretization().cut();
            return u_->value(cut.in_domain(1, t) ? 1 : 2, t, p);
        }
        const Piece* best = nullptr;
        double best_min = -std::numeric_limits<double>::infinity();
        for (const auto& piece : pieces(t))
        {
            const double lmin = piece.barycentric(p).minCoeff();
            if (lmin > best_min)
            {
                best_min = lmin;
                best = &piece;
            }
        }
        return best->values.dot(best->barycentric(p));
    }

    /// |I_h u_h - u_h|_{1,K,T}, nonzero on cut elements only.
    double gap(Index t) const
    {
        if (!is_split(t))
            return 0.0;
        const auto& K = u_->discretization().diffusion();
        double s = 0.0;
        for (const auto& piece : pieces(t))
            s += K.k(piece.region) * piece.area() * (piece.gradient() - u_->gradient(piece.region, t)).squaredNorm();
        return std::sqrt(s);
    }

    double gap() const
    {
        double s = 0.0;
        for (Index t = 0; t < static_cast<Index>(index_.size()); ++t)
            s += std::pow(gap(t), 2);
        return std::sqrt(s);
    }

private:
    const PrimalSolution* u_;
    std::vector<Index> index_;
    std::vector<std::array<Piece, 3>> pieces_;
    std::vector<Index> flagged_;
};

/// All estimator quantities for one solve. The exact error is filled in when
/// the problem carries an exact gradient.
inline EstimatorReport compute_estimators(const PrimalSolution& u, const FluxField& sigma,
                                          const InterfaceProblem& problem)
{
    const auto& disc = u.discretization();
    EstimatorReport r;
    r.eta_T = compute_eta(sigma, u);
    r.eta_tilde_T = compute_eta_gamma(u);
    r.osc_T = compute_data_oscillation(disc, problem, sigma.order());
    r.eta = detail::sum_sqrt(r.eta_T);
    r.eta_gamma = detail::sum_sqrt(r.eta_tilde_T);
    r.eps = detail::sum_sqrt(r.osc_T);
    if (problem.exact_gradient)
        r.error = exact_energy_error(u, problem.exact_gradient);
    r.gap = ConformingInterpolant(u).gap();
    return r;
}

/// CSV: element, class, eta_T, eta_tilde_T, osc_T.
inline void write_estimators_csv(std::ostream& os, const EstimatorReport& r, const CutTopology& cut)
{
    os << "element,class,eta_T,eta_tilde_T,osc_T\n";
    os.precision(17);
    for (std::size_t t = 0; t < r.eta_T.size(); ++t)
        os << t << ',' << to_string(cut.cell_class(static_cast<Index>(t))) << ',' << r.eta_T[t] << ','
           << r.eta_tilde_T[t] << ',' << r.osc_T[t] << '\n';
}

} // namespace cutflux
