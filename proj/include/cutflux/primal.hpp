#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "cutflux/common.hpp"
#include "cutflux/forms.hpp"
#include "cutflux/problem.hpp"

namespace cutflux {

/// Symmetric system on C_h with Dirichlet rows and columns replaced by the
/// identity. `full_matrix` / `full_rhs` keep a_h and l_h on all of C_h.
struct SparseLinearSystem
{
    SparseMatrix matrix;
    Vector rhs;
    SparseMatrix full_matrix;
    Vector full_rhs;
    Vector dirichlet_values;
    Vector solution;
};

/// Values of the boundary data at the Dirichlet dofs (zero elsewhere).
inline Vector dirichlet_data(const Discretization& disc, const InterfaceProblem& problem)
{
    const auto& dofs = disc.dofs_c();
    Vector g = Vector::Zero(dofs.size());
    if (disc.config().boundary == BoundaryMode::homogeneous)
        return g;
    if (!problem.exact)
        throw invalid_argument("dirichlet_data: interpolated boundary data needs an exact solution");
    for (Index d = 0; d < dofs.size(); ++d)
        if (dofs.dirichlet(d))
            g[d] = problem.exact(disc.mesh().vertex(dofs.vertex(d)), dofs.region(d));
    return g;
}

/// Source quadrature degree: low for polynomial data, high otherwise.
inline int source_degree(const Discretization& disc, const InterfaceProblem& problem)
{
    return problem.polynomial_source ? std::max(2, disc.config().stiffness_degree) : disc.config().source_degree;
}

inline SparseLinearSystem assemble_primal(const Discretization& disc, const InterfaceProblem& problem)
{
    const SparseMatrix& P = disc.prolongation_matrix();
    SparseLinearSystem sys;
    const SparseMatrix a_broken = nitsche_matrix(disc);
    sys.full_matrix = SparseMatrix(P.transpose() * a_broken * P);
    sys.full_rhs = P.transpose() * load_vector(disc, problem.source, source_degree(disc, problem));
    sys.dirichlet_values = dirichlet_data(disc, problem);

    const auto& dofs = disc.dofs_c();
    const Vector lifted = sys.full_matrix * sys.dirichlet_values;
    sys.rhs = sys.full_rhs - lifted;
    std::vector<Triplet> entries;
    entries.reserve(sys.full_matrix.nonZeros());
    for (int col = 0; col < sys.full_matrix.outerSize(); ++col)
        for (SparseMatrix::InnerIterator it(sys.full_matrix, col); it; ++it)
            if (!dofs.dirichlet(it.row()) && !dofs.dirichlet(it.col()))
                entries.emplace_back(it.row(), it.col(), it.value());
    for (Index d = 0; d < dofs.size(); ++d)
    {
        if (dofs.dirichlet(d))
        {
            entries.emplace_back(d, d, 1.0);
            sys.rhs[d] = sys.dirichlet_values[d];
        }
    }
    sys.matrix.resize(dofs.size(), dofs.size());
    sys.matrix.setFromTriplets(entries.begin(), entries.end());
    return sys;
}

/// Discrete solution on C_h with its D_h expansion for elementwise queries.
class PrimalSolution
{
public:
    PrimalSolution(const Discretization& disc, Vector coefficients)
        : disc_(&disc), coefficients_(std::move(coefficients))
    {
        broken_ = disc.prolongation_matrix() * coefficients_;
    }

    const Discretization& discretization() const { return *disc_; }
    const Vector& coefficients() const { return coefficients_; }
    /// Coefficients in D_h.
    const Vector& broken() const { return broken_; }

    double relative_residual = 0.0;

    bool defined(int region, Index t) const { return disc_->dofs_d().has(region, t); }

    Eigen::Vector3d local(int region, Index t) const
    {
        const Index d = disc_->dofs_d().dof(region, t, 0);
        return broken_.segment<3>(d);
    }

    double value(int region, Index t, const Point& p) const
    {
        return local(region, t).dot(disc_->mesh().barycentric(t, p));
    }

    Point gradient(int region, Index t) const
    {
        const auto g = disc_->mesh().barycentric_gradients(t);
        const auto u = local(region, t);
        return u[0] * g[0] + u[1] * g[1] + u[2] * g[2];
    }

private:
    const Discretization* disc_;
    Vector coefficients_;
    Vector broken_;
};

/// Sparse LDL^T factorization with iterative refinement to the configured
/// backward-error tolerance.
inline PrimalSolution solve_primal(SparseLinearSystem& sys, const Discretization& disc)
{
    Eigen::SimplicialLDLT<SparseMatrix> ldlt;
    ldlt.compute(sys.matrix);
    if (ldlt.info() != Eigen::Success)
        throw singular_system_error("solve_primal: factorization failed");
    const Vector diag = ldlt.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (diag.minCoeff() < -1e-14 * dmax)
        throw penalty_too_small_error("solve_primal: Nitsche matrix is indefinite; increase gamma");
    if (diag.cwiseAbs().minCoeff() <= 1e-14 * dmax)
        throw singular_system_error("solve_primal: matrix is singular");

    Vector x = ldlt.solve(sys.rhs);
    const double a_norm = [&] {
        double m = 0.0;
        for (int k = 0; k < sys.matrix.outerSize(); ++k)
        {
            double s = 0.0;
            for (SparseMatrix::InnerIterator it(sys.matrix, k); it; ++it)
                s += std::abs(it.value());
            m = std::max(m, s);
        }
        return m;
    }();
    auto backward_error = [&](const Vector& r) {
        const double scale = a_norm * x.cwiseAbs().maxCoeff() + sys.rhs.cwiseAbs().maxCoeff();
        return scale > 0.0 ? r.cwiseAbs().maxCoeff() / scale : 0.0;
    };
    Vector r = sys.rhs - sys.matrix * x;
    double err = backward_error(r);
    for (int it = 0; it < 10 && err > disc.config().tolerance; ++it)
    {
        x += ldlt.solve(r);
        r = sys.rhs - sys.matrix * x;
        err = backward_error(r);
    }
    if (err > disc.config().tolerance)
        throw singular_system_error("solve_primal: residual " + std::to_string(err) + " above tolerance");
    sys.solution = x;
    PrimalSolution u(disc, x);
    u.relative_residual = err;
    return u;
}

inline PrimalSolution solve_primal(const Discretization& disc, const InterfaceProblem& problem)
{
    auto sys = assemble_primal(disc, problem);
    return solve_primal(sys, disc);
}

/// |v|_{1,K,h} = (sum_i sum_T int_{T cap Omega^i} k_i |grad v^i|^2)^{1/2} for a D_h field.
inline double energy_seminorm(const Discretization& disc, const Vector& broken)
{
    const auto& mesh = disc.mesh();
    const auto& dofs = disc.dofs_d();
    double sum = 0.0;
    for (Index b = 0; b < dofs.block_count(); ++b)
    {
        const Index t = dofs.block_element(b);
        const int region = dofs.block_region(b);
        const auto g = mesh.barycentric_gradients(t);
        const Point grad = broken[3 * b] * g[0] + broken[3 * b + 1] * g[1] + broken[3 * b + 2] * g[2];
        sum += disc.diffusion().k(region) * disc.cut().region_area(t, region) * grad.squaredNorm();
    }
    return std::sqrt(sum);
}

/// ||v_h||_h for a C_h field.
inline double discrete_norm_h(const Discretization& disc, const Vector& coefficients)
{
    const Vector v = disc.prolongation_matrix() * coefficients;
    const SparseMatrix H = h_norm_matrix(disc);
    return std::sqrt(std::max(0.0, v.dot(H * v)));
}

} // namespace cutflux
