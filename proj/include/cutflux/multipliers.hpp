#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include "cutflux/primal.hpp"

namespace cutflux {

/// Edge multipliers of M_h, one P1 function per region and edge of F_h^i,
/// stored as endpoint values in the MultiplierDofs layout.
struct MultiplierField
{
    const Discretization* disc = nullptr;
    Vector values;

    /// mu^region on edge e at edge.vertices[endpoint]
    double value(int region, Index e, int endpoint) const
    {
        const Index d = disc->dofs_m().dof(region, e, endpoint);
        if (d == no_index)
            throw invalid_argument("MultiplierField: edge not in F_h^" + std::to_string(region));
        return values[d];
    }
};

/// b_h(mu, v) for a multiplier vector and a D_h field.
inline double eval_b_h(const Discretization& disc, const Vector& mu, const Vector& v)
{
    if (mu.size() != disc.dofs_m().size() || v.size() != disc.dofs_d().size())
        throw invalid_argument("eval_b_h: incompatible dof layouts");
    return v.dot(multiplier_matrix(disc) * mu);
}

/// d_h(u, v) with boundary edges using [[w]] = w.
inline double eval_d_h(const Discretization& disc, const Vector& u, const Vector& v)
{
    if (u.size() != disc.dofs_d().size() || v.size() != disc.dofs_d().size())
        throw invalid_argument("eval_d_h: incompatible dof layouts");
    const SparseMatrix J = jump_flux_matrix(disc);
    return v.dot(J * u) + u.dot(J * v);
}

/// ||v||_{D_h} for a D_h field.
inline double norm_d(const Discretization& disc, const Vector& v)
{
    const SparseMatrix G = h_norm_matrix(disc) + edge_jump_norm_matrix(disc);
    return std::sqrt(std::max(0.0, v.dot(G * v)));
}

/// ||mu||_{M_h}.
inline double norm_m(const Discretization& disc, const Vector& mu)
{
    return std::sqrt(std::max(0.0, mu.dot(multiplier_norm_matrix(disc) * mu)));
}

/// Rows of the nodal constraint sum_F s_{F,N} h_F mu|_F(N) = 0, one per
/// region and node interior to Omega_h^i.
inline SparseMatrix multiplier_constraints(const Discretization& disc)
{
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    std::vector<Triplet> entries;
    Index row = 0;
    for (int region = 1; region <= 2; ++region)
        for (Index v = 0; v < mesh.num_vertices(); ++v)
        {
            if (!cut.interior_node(region, v))
                continue;
            for (const auto& pe : edge_patch(mesh, v))
            {
                const auto& edge = mesh.edge(pe.edge);
                const int end = edge.vertices[0] == v ? 0 : 1;
                entries.emplace_back(row, disc.dofs_m().dof(region, pe.edge, end), pe.sign * edge.length);
            }
            ++row;
        }
    return detail::from_triplets(row, disc.dofs_m().size(), entries);
}

/// Residual functional of the first mixed equation at a conforming u_h,
/// R(v) = l_h(v) - a~_h(u_h, v), on the D_h basis, together with the size of
/// the terms it is built from.
struct MixedResidual
{
    Vector values;
    double scale = 0.0;
};

/// Boundary jumps of u_h are taken relative to the Dirichlet data, so the
/// second d_h term vanishes for the discrete solution.
inline MixedResidual mixed_residual(const PrimalSolution& u, const InterfaceProblem& problem)
{
    const auto& disc = u.discretization();
    const SparseMatrix A = nitsche_matrix(disc);
    const SparseMatrix J = jump_flux_matrix(disc);
    const Vector l = load_vector(disc, problem.source, source_degree(disc, problem));
    const Vector& ud = u.broken();
    MixedResidual r;
    r.values = l - A * ud + J * ud;
    const Vector size = l.cwiseAbs() + A.cwiseAbs() * ud.cwiseAbs() + J.cwiseAbs() * ud.cwiseAbs();
    r.scale = size.size() ? size.maxCoeff() : 0.0;
    return r;
}

/// Node-by-node multiplier construction. For region i and node N the
/// unknowns are theta^i|_F(N), F in F_N cap F_h^i, with one equation per
/// element T of T_h^i at N (testing with the hat piece on T) plus the M_h
/// constraint at nodes interior to Omega_h^i.
inline MultiplierField compute_multipliers_local(const PrimalSolution& u, const InterfaceProblem& problem,
                                                 double tolerance = 1e-9)
{
    const auto& disc = u.discretization();
    const auto& mesh = disc.mesh();
    const auto& cut = disc.cut();
    const auto residual = mixed_residual(u, problem);
    const double floor = tolerance * std::max(residual.scale, 1e-300);

    MultiplierField theta;
    theta.disc = &disc;
    theta.values = Vector::Zero(disc.dofs_m().size());

    for (int region = 1; region <= 2; ++region)
    {
        const double k = disc.diffusion().k(region);
        for (Index v = 0; v < mesh.num_vertices(); ++v)
        {
            std::vector<Index> elements;
            for (Index t : mesh.vertex_triangles(v))
                if (cut.in_domain(region, t))
                    elements.push_back(t);
            if (elements.empty())
                continue;
            std::vector<PatchEdge> unknowns;
            for (const auto& pe : edge_patch(mesh, v))
                if (cut.edge_in(region, pe.edge))
                    unknowns.push_back(pe);
            if (unknowns.empty())
                continue;

            const bool interior = cut.interior_node(region, v);
            const Index rows = static_cast<Index>(elements.size()) + (interior ? 1 : 0);
            Matrix A = Matrix::Zero(rows, static_cast<Index>(unknowns.size()));
            Vector b = Vector::Zero(rows);
            for (std::size_t r = 0; r < elements.size(); ++r)
            {
                const Index t = elements[r];
                for (std::size_t c = 0; c < unknowns.size(); ++c)
                {
                    const auto& edge = mesh.edge(unknowns[c].edge);
                    if (mesh.local_edge(t, unknowns[c].edge) >= 0)
                        A(r, c) = edge.sign_for(t) * 0.5 * k * edge.length;
                }
                b[r] = residual.values[disc.dofs_d().dof(region, t, mesh.local_vertex(t, v))];
            }
            if (interior)
                for (std::size_t c = 0; c < unknowns.size(); ++c)
                    A(rows - 1, c) = unknowns[c].sign * mesh.edge(unknowns[c].edge).length;

            const Vector x = A.completeOrthogonalDecomposition().solve(b);
            const double mismatch = (A * x - b).cwiseAbs().maxCoeff();
            if (!(mismatch <= floor))
                throw patch_inconsistency_error("compute_multipliers_local: region " + std::to_string(region) +
                                                " node " + std::to_string(v) + " residual " +
                                                std::to_string(mismatch));
            for (std::size_t c = 0; c < unknowns.size(); ++c)
            {
                const auto& edge = mesh.edge(unknowns[c].edge);
                theta.values[disc.dofs_m().dof(region, unknowns[c].edge, edge.vertices[0] == v ? 0 : 1)] = x[c];
            }
        }
    }
    return theta;
}

struct MixedReport
{
    double eq1 = 0.0;        // max |R(v) - b_h(theta, v)| / scale over the D_h basis
    double eq2 = 0.0;        // max |b_h(mu, u_h) - boundary data| over the M_h endpoint basis
    double constraint = 0.0; // worst relative violation of the nodal constraint
    double scale = 0.0;
};

inline MixedReport verify_mixed_equivalence(const PrimalSolution& u, const MultiplierField& theta,
                                            const InterfaceProblem& problem)
{
    const auto& disc = u.discretization();
    if (theta.disc != &disc || theta.values.size() != disc.dofs_m().size())
        throw invalid_argument("verify_mixed_equivalence: multiplier layout does not match the solution");
    const auto& mesh = disc.mesh();
    const SparseMatrix B = multiplier_matrix(disc);
    const auto residual = mixed_residual(u, problem);
    MixedReport report;
    report.scale = residual.scale;
    const Vector r1 = residual.values - B * theta.values;
    report.eq1 = r1.size() ? r1.cwiseAbs().maxCoeff() / std::max(residual.scale, 1e-300) : 0.0;

    // boundary data enters through the single-sided jumps on boundary edges
    Vector r2 = B.transpose() * u.broken();
    const auto& dofs = disc.dofs_m();
    const auto& dc = disc.dofs_c();
    const Vector g = dirichlet_data(disc, problem);
    for (Index p = 0; p < dofs.pair_count(); ++p)
    {
        const Index e = dofs.pair_edge(p);
        const auto& edge = mesh.edge(e);
        if (!edge.on_boundary())
            continue;
        const int region = dofs.pair_region(p);
        const double c = 0.5 * disc.diffusion().k(region) * edge.length;
        for (int end = 0; end < 2; ++end)
        {
            const Index d = dc.dof(region, edge.minus, mesh.local_vertex(edge.minus, edge.vertices[end]));
            r2[dofs.dof(region, e, end)] -= c * g[d];
        }
    }
    report.eq2 = r2.size() ? r2.cwiseAbs().maxCoeff() : 0.0;

    const SparseMatrix C = multiplier_constraints(disc);
    const Vector c = C * theta.values;
    const Vector size = C.cwiseAbs() * theta.values.cwiseAbs();
    for (Index i = 0; i < c.size(); ++i)
        if (size[i] > 0.0)
            report.constraint = std::max(report.constraint, std::abs(c[i]) / size[i]);
    return report;
}

struct InfSupResult
{
    double beta = 0.0;
    double largest = 0.0; // continuity constant of b_h in the same norms
    Index zero_modes = 0; // multipliers invisible to D_h (boundary-node patches)
    Index dimension = 0;  // dim M_h
};

inline constexpr Index infsup_size_limit = 4000;

/// Discrete inf-sup constant of b_h in the D_h and M_h norms: the square root
/// of the smallest nonzero generalized eigenvalue of B^T M_D^{-1} B against
/// M_M restricted to M_h. Dense; for small meshes only.
inline InfSupResult compute_infsup_constant(const Discretization& disc)
{
    const Index nd = disc.dofs_d().size();
    const Index nm = disc.dofs_m().size();
    if (nd > infsup_size_limit || nm > infsup_size_limit)
        throw invalid_argument("compute_infsup_constant: mesh too large for dense eigenvalues (" +
                               std::to_string(nd) + " D_h dofs)");
    const Matrix MD = Matrix(h_norm_matrix(disc) + edge_jump_norm_matrix(disc));
    const Matrix MM = Matrix(multiplier_norm_matrix(disc));
    const Matrix B = Matrix(multiplier_matrix(disc));
    const Matrix C = Matrix(multiplier_constraints(disc));

    const Eigen::LLT<Matrix> md(MD);
    if (md.info() != Eigen::Success)
        throw singular_system_error("compute_infsup_constant: D_h norm matrix is not positive definite");
    Matrix Z;
    if (C.rows() == 0)
        Z = Matrix::Identity(nm, nm);
    else
        Z = Eigen::FullPivLU<Matrix>(C).kernel();

    const Matrix BZ = B * Z;
    const Matrix S = BZ.transpose() * md.solve(BZ);
    const Matrix G = Z.transpose() * MM * Z;
    const Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()),
                                                               0.5 * (G + G.transpose()), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
        throw singular_system_error("compute_infsup_constant: eigenvalue computation failed");
    const Vector& lambda = eig.eigenvalues();
    InfSupResult result;
    result.dimension = Z.cols();
    const double top = lambda.maxCoeff();
    result.largest = std::sqrt(std::max(0.0, top));
    const double threshold = 1e-10 * top;
    double smallest = top;
    for (Index i = 0; i < lambda.size(); ++i)
    {
        if (lambda[i] <= threshold)
            ++result.zero_modes;
        else
            smallest = std::min(smallest, lambda[i]);
    }
    result.beta = std::sqrt(smallest);
    return result;
}

/// CSV: subdomain, edge, value at vertices[0], value at vertices[1].
inline void write_multipliers_csv(std::ostream& os, const MultiplierField& theta)
{
    const auto& dofs = theta.disc->dofs_m();
    os << "subdomain,edge,value0,value1\n";
    os.precision(17);
    for (Index p = 0; p < dofs.pair_count(); ++p)
    {
        const Index e = dofs.pair_edge(p);
        const int region = dofs.pair_region(p);
        os << region << ',' << e << ',' << theta.value(region, e, 0) << ',' << theta.value(region, e, 1) << '\n';
    }
}

} // namespace cutflux
