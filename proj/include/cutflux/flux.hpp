#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "cutflux/multipliers.hpp"

namespace cutflux {

/// Local Raviart-Thomas basis in xi = (x - centroid) / h_T.
/// Order 0: (1,0), (0,1), xi. Order 1 adds (xi_1,0), (xi_2,0), (0,xi_1),
/// (0,xi_2) and xi_1 xi, xi_2 xi (replacing the plain xi).
inline int rt_dimension(int order)
{
    return order == 0 ? 3 : 8;
}

inline void rt_basis(int order, const Point& xi, std::vector<Point>& out)
{
    out.clear();
    out.emplace_back(1.0, 0.0);
    out.emplace_back(0.0, 1.0);
    if (order == 0)
    {
        out.push_back(xi);
        return;
    }
    out.emplace_back(xi.x(), 0.0);
    out.emplace_back(xi.y(), 0.0);
    out.emplace_back(0.0, xi.x());
    out.emplace_back(0.0, xi.y());
    out.push_back(xi.x() * xi);
    out.push_back(xi.y() * xi);
}

/// Divergence of the basis functions (with respect to x) at xi.
inline void rt_divergence(int order, const Point& xi, double h, std::vector<double>& out)
{
    out.clear();
    out.push_back(0.0);
    out.push_back(0.0);
    if (order == 0)
    {
        out.push_back(2.0 / h);
        return;
    }
    out.push_back(1.0 / h);
    out.push_back(0.0);
    out.push_back(0.0);
    out.push_back(1.0 / h);
    out.push_back(3.0 * xi.x() / h);
    out.push_back(3.0 * xi.y() / h);
}

/// Flux in RT^m with normal moments on every edge (against 1 and the
/// normalised arclength s / h_F measured from vertices[0], oriented by n_F)
/// and, for m = 1, the moments against e_x and e_y on every element.
class FluxField
{
public:
    FluxField() = default;

    FluxField(const TriangleMesh& mesh, int order, Matrix edge_moments, Matrix interior_moments)
        : mesh_(&mesh), order_(order), edge_moments_(std::move(edge_moments)),
          interior_moments_(std::move(interior_moments))
    {
        if (order != 0 && order != 1)
            throw invalid_argument("FluxField: RT order must be 0 or 1");
        if (edge_moments_.rows() != mesh.num_edges() || edge_moments_.cols() != order + 1)
            throw invalid_argument("FluxField: edge moment layout does not match the mesh");
        if (order == 1 && (interior_moments_.rows() != mesh.num_triangles() || interior_moments_.cols() != 2))
            throw invalid_argument("FluxField: interior moment layout does not match the mesh");
        const int dim = rt_dimension(order);
        coefficients_.resize(mesh.num_triangles(), dim);
        for (Index t = 0; t < mesh.num_triangles(); ++t)
        {
            const Matrix M = moment_matrix(t);
            Vector rhs(dim);
            const auto& edges = mesh.triangle_edges(t);
            for (int j = 0; j < 3; ++j)
                for (int w = 0; w <= order; ++w)
                    rhs[j * (order + 1) + w] = edge_moments_(edges[j], w);
            if (order == 1)
            {
                rhs[6] = interior_moments_(t, 0);
                rhs[7] = interior_moments_(t, 1);
            }
            const Eigen::JacobiSVD<Matrix> svd(M);
            const auto& sv = svd.singularValues();
            const double cond = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : INFINITY;
            max_condition_ = std::max(max_condition_, cond);
            if (!std::isfinite(cond))
                throw singular_system_error("FluxField: singular moment matrix on element " + std::to_string(t));
            coefficients_.row(t) = Eigen::PartialPivLU<Matrix>(M).solve(rhs).transpose();
        }
    }

    int order() const { return order_; }
    const TriangleMesh& mesh() const { return *mesh_; }
    /// Moment of sigma . n_F against 1 (w = 0) or s / h_F (w = 1).
    double edge_moment(Index e, int w) const { return edge_moments_(e, w); }
    const Matrix& edge_moments() const { return edge_moments_; }
    const Matrix& interior_moments() const { return interior_moments_; }
    const Matrix& coefficients() const { return coefficients_; }
    /// Worst condition number of the per-element moment matrices.
    double max_condition() const { return max_condition_; }

    /// sigma_h(p) from the polynomial of element t; p must lie in t.
    Point value(Index t, const Point& p) const
    {
        check_inside(t, p);
        return value_unchecked(t, p);
    }

    double divergence(Index t, const Point& p) const
    {
        check_inside(t, p);
        std::vector<double> d;
        rt_divergence(order_, local(t, p), mesh_->diameter(t), d);
        double s = 0.0;
        for (std::size_t b = 0; b < d.size(); ++b)
            s += coefficients_(t, static_cast<Index>(b)) * d[b];
        return s;
    }

    Point value_unchecked(Index t, const Point& p) const
    {
        std::vector<Point> phi;
        rt_basis(order_, local(t, p), phi);
        Point s(0.0, 0.0);
        for (std::size_t b = 0; b < phi.size(); ++b)
            s += coefficients_(t, static_cast<Index>(b)) * phi[b];
        return s;
    }

    /// Mean divergence from the edge moments alone (divergence theorem).
    double mean_divergence_from_moments(Index t) const
    {
        double s = 0.0;
        for (Index e : mesh_->triangle_edges(t))
            s += mesh_->edge(e).sign_for(t) * edge_moments_(e, 0);
        return s / mesh_->area(t);
    }

private:
    Point local(Index t, const Point& p) const { return (p - mesh_->centroid(t)) / mesh_->diameter(t); }

    void check_inside(Index t, const Point& p) const
    {
        if (t < 0 || t >= mesh_->num_triangles())
            throw invalid_argument("FluxField: element id out of range");
        const auto lambda = mesh_->barycentric(t, p);
        if (lambda.minCoeff() < -1e-10)
            throw invalid_argument("FluxField: point outside element " + std::to_string(t));
    }

    Matrix moment_matrix(Index t) const
    {
        const int dim = rt_dimension(order_);
        Matrix M = Matrix::Zero(dim, dim);
        std::vector<Point> phi;
        const auto& edges = mesh_->triangle_edges(t);
        for (int j = 0; j < 3; ++j)
        {
            const auto& edge = mesh_->edge(edges[j]);
            const Point& a = mesh_->vertex(edge.vertices[0]);
            const Point& b = mesh_->vertex(edge.vertices[1]);
            const auto rule = segment_rule(a, b, 2 * order_ + 1);
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                rt_basis(order_, local(t, rule.points[q]), phi);
                const double s = (rule.points[q] - a).norm() / edge.length;
                for (int c = 0; c < dim; ++c)
                {
                    const double flux = rule.weights[q] * phi[c].dot(edge.normal);
                    M(j * (order_ + 1), c) += flux;
                    if (order_ == 1)
                        M(j * 2 + 1, c) += flux * s;
                }
            }
        }
        if (order_ == 1)
        {
            const auto c = mesh_->corners(t);
            const auto rule = triangle_rule(c[0], c[1], c[2], 2);
            for (std::size_t q = 0; q < rule.size(); ++q)
            {
                rt_basis(order_, local(t, rule.points[q]), phi);
                for (int b = 0; b < dim; ++b)
                {
                    M(6, b) += rule.weights[q] * phi[b].x();
                    M(7, b) += rule.weights[q] * phi[b].y();
                }
            }
        }
        return M;
    }

    const TriangleMesh* mesh_ = nullptr;
    int order_ = 0;
    Matrix edge_moments_;
    Matrix interior_moments_;
    Matrix coefficients_;
    double max_condition_ = 0.0;
};

inline Point eval_flux(const FluxField& sigma, Index element, const Point& point)
{
    return sigma.value(element, point);
}

/// Normal-flux moment on an edge lying on the interface, with u1 / u2 the P1
/// values of the two one-sided solutions on the elements side1 / side2:
/// int_F ({K grad u . n} - gamma k_Gamma / h_F [u]) w . (n . n_F), w = 1 or s / h_F.
inline double interface_edge_moment(const TriangleMesh& mesh, const DiffusionData& K, double gamma, Index e,
                                    Index side1, const Eigen::Vector3d& u1, Index side2, const Eigen::Vector3d& u2,
                                    int w)
{
    const auto& edge = mesh.edge(e);
    if (edge.on_boundary() || !((side1 == edge.minus && side2 == edge.plus) ||
                                (side1 == edge.plus && side2 == edge.minus)))
        throw invalid_argument("interface_edge_moment: elements are not the two sides of the edge");
    if (w != 0 && w != 1)
        throw invalid_argument("interface_edge_moment: test function index must be 0 or 1");
    const double orientation = side1 == edge.minus ? 1.0 : -1.0;
    const Point n = orientation * edge.normal;
    auto grad = [&](Index t, const Eigen::Vector3d& u) {
        const auto g = mesh.barycentric_gradients(t);
        return Point(u[0] * g[0] + u[1] * g[1] + u[2] * g[2]);
    };
    const double mean_flux = K.k_gamma() * (grad(side1, u1) + grad(side2, u2)).dot(n);
    const Point& a = mesh.vertex(edge.vertices[0]);
    const auto rule = segment_rule(a, mesh.vertex(edge.vertices[1]), 3);
    double s = 0.0;
    for (std::size_t q = 0; q < rule.size(); ++q)
    {
        const Point& p = rule.points[q];
        const double jump = u1.dot(mesh.barycentric(side1, p)) - u2.dot(mesh.barycentric(side2, p));
        const double weight = w == 0 ? 1.0 : (p - a).norm() / edge.length;
        s += rule.weights[q] * (mean_flux - gamma * K.k_gamma() / edge.length * jump) * weight;
    }
    return orientation * s;
}

/// Edge and interior moments of sigma_h from u_h and the multipliers, then
/// the RT^m field they determine.
inline FluxField recover_flux(const PrimalSolution& u, const MultiplierField& theta, int order)
{
    const auto& disc = u.discretization();
    if (theta.disc != &disc || theta.values.size() != disc.dofs_m().size())
        throw invalid_argument("recover_flux: multiplier layout does not match the solution");
    if (order != 0 && order != 1)
        throw invalid_argument("recover_flux: RT order must be 0 or 1");
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    const auto& K = disc.diffusion();

    Matrix edge_moments = Matrix::Zero(mesh.num_edges(), order + 1);
    for (Index e = 0; e < mesh.num_edges(); ++e)
    {
        const auto& edge = mesh.edge(e);
        const double h = edge.length;
        for (int region = 1; region <= 2; ++region)
        {
            if (!cut.edge_in(region, e))
                continue;
            const double k = K.k(region);
            const Point g = edge.on_boundary()
                                ? u.gradient(region, edge.minus)
                                : Point(0.5 * (u.gradient(region, edge.minus) + u.gradient(region, edge.plus)));
            const double flux = k * g.dot(edge.normal);
            const auto seg = cut.edge_segment(region, e);
            const double t0 = theta.value(region, e, 0);
            const double t1 = theta.value(region, e, 1);
            edge_moments(e, 0) += flux * (seg[1] - seg[0]) * h - 0.5 * k * h * (t0 + t1);
            if (order == 1)
                edge_moments(e, 1) += flux * 0.5 * (seg[1] * seg[1] - seg[0] * seg[0]) * h - 0.5 * k * h * t1;
        }
    }

    Matrix interior_moments;
    if (order == 1)
    {
        interior_moments = Matrix::Zero(mesh.num_triangles(), 2);
        const double gg = disc.config().gamma_g;
        for (Index t = 0; t < mesh.num_triangles(); ++t)
        {
            Point m(0.0, 0.0);
            for (int region = 1; region <= 2; ++region)
            {
                if (!u.defined(region, t))
                    continue;
                const double k = K.k(region);
                m += k * cut.region_area(t, region) * u.gradient(region, t);
                for (Index e : mesh.triangle_edges(t))
                {
                    if (!cut.ghost_edge(region, e))
                        continue;
                    const auto& edge = mesh.edge(e);
                    const double jump = (u.gradient(region, edge.minus) - u.gradient(region, edge.plus)).dot(edge.normal);
                    m += gg * k * edge.length * edge.length * jump * edge.sign_for(t) * edge.normal;
                }
            }
            if (cut.is_cut(t))
            {
                const auto& cell = cut.cut_cell(t);
                const Point mid = 0.5 * (cell.M + cell.N);
                const double jump = u.value(1, t, mid) - u.value(2, t, mid);
                m -= 2.0 * K.k_gamma() * cell.gamma_length * jump * cell.normal;
            }
            interior_moments.row(t) = m.transpose();
        }
    }
    return FluxField(mesh, order, std::move(edge_moments), std::move(interior_moments));
}

inline FluxField recover_flux(const PrimalSolution& u, const MultiplierField& theta)
{
    return recover_flux(u, theta, u.discretization().config().rt_order);
}

/// Coefficients of the L2 projection of f onto P^m(T) in the basis
/// {1, xi_1, xi_2}, using the source quadrature of the load vector region by
/// region.
inline Eigen::Vector3d project_source(const Discretization& disc, const InterfaceProblem& problem, Index t, int order)
{
    const auto& mesh = disc.mesh();
    const Point c = mesh.centroid(t);
    const double h = mesh.diameter(t);
    const int n = order == 0 ? 1 : 3;
    auto basis = [&](const Point& p) {
        const Point xi = (p - c) / h;
        return Eigen::Vector3d(1.0, xi.x(), xi.y());
    };
    Matrix mass = Matrix::Zero(n, n);
    Vector rhs = Vector::Zero(n);
    const auto corners = mesh.corners(t);
    const auto exact = triangle_rule(corners[0], corners[1], corners[2], 2);
    for (std::size_t q = 0; q < exact.size(); ++q)
    {
        const Vector b = basis(exact.points[q]).head(n);
        mass += exact.weights[q] * b * b.transpose();
    }
    const int degree = source_degree(disc, problem);
    for (int region = 1; region <= 2; ++region)
    {
        const auto rule = subcell_quadrature(disc.cut(), t, static_cast<Region>(region), degree);
        for (std::size_t q = 0; q < rule.size(); ++q)
            rhs += rule.weights[q] * problem.source(rule.points[q], region) * basis(rule.points[q]).head(n);
    }
    Eigen::Vector3d out = Eigen::Vector3d::Zero();
    out.head(n) = mass.ldlt().solve(rhs);
    return out;
}

struct DivergenceReport
{
    std::vector<double> residual; // ||div sigma + pi f||_T
    std::vector<double> source_norm; // ||f||_T
    double worst_relative = 0.0;  // max residual / (1 + ||f||_T)
};

inline DivergenceReport divergence_residual(const FluxField& sigma, const Discretization& disc,
                                            const InterfaceProblem& problem)
{
    const auto& mesh = disc.mesh();
    if (&sigma.mesh() != &mesh)
        throw invalid_argument("divergence_residual: flux and discretization live on different meshes");
    DivergenceReport report;
    report.residual.resize(mesh.num_triangles());
    report.source_norm.resize(mesh.num_triangles());
    const int degree = source_degree(disc, problem);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
    {
        const auto pi = project_source(disc, problem, t, sigma.order());
        const Point c = mesh.centroid(t);
        const double h = mesh.diameter(t);
        const auto corners = mesh.corners(t);
        const auto rule = triangle_rule(corners[0], corners[1], corners[2], 2);
        double r2 = 0.0;
        for (std::size_t q = 0; q < rule.size(); ++q)
        {
            const Point xi = (rule.points[q] - c) / h;
            const double projected = pi[0] + pi[1] * xi.x() + pi[2] * xi.y();
            const double r = sigma.divergence(t, rule.points[q]) + projected;
            r2 += rule.weights[q] * r * r;
        }
        double f2 = 0.0;
        for (int region = 1; region <= 2; ++region)
        {
            const auto sub = subcell_quadrature(disc.cut(), t, static_cast<Region>(region), degree);
            for (std::size_t q = 0; q < sub.size(); ++q)
            {
                const double f = problem.source(sub.points[q], region);
                f2 += sub.weights[q] * f * f;
            }
        }
        report.residual[t] = std::sqrt(r2);
        report.source_norm[t] = std::sqrt(f2);
        report.worst_relative = std::max(report.worst_relative, report.residual[t] / (1.0 + report.source_norm[t]));
    }
    return report;
}

/// Largest difference of the one-sided traces of sigma_h . n_Gamma at three
/// points of every interface segment, relative to 1 + |sigma_h . n_Gamma|.
inline double transmission_jump(const FluxField& sigma, const CutTopology& cut)
{
    double worst = 0.0;
    for (const auto& cell : cut.cut_cells())
    {
        const Index t = cell.element;
        for (double s : {0.25, 0.5, 0.75})
        {
            const Point p = cell.M + s * (cell.N - cell.M);
            const double delta = 1e-14 * cut.mesh().diameter(t);
            const double from_one = sigma.value_unchecked(t, p - delta * cell.normal).dot(cell.normal);
            const double from_two = sigma.value_unchecked(t, p + delta * cell.normal).dot(cell.normal);
            worst = std::max(worst, std::abs(from_one - from_two) / (1.0 + std::abs(from_one)));
        }
    }
    return worst;
}

} // namespace cutflux
