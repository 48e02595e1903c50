#include <gtest/gtest.h>

#include "cutflux/primal.hpp"

using namespace cutflux;

namespace {

Vector interpolate(const Discretization& disc, const InterfaceProblem& p)
{
    const auto& dofs = disc.dofs_c();
    Vector u(dofs.size());
    for (Index d = 0; d < dofs.size(); ++d)
        u[d] = p.exact(disc.mesh().vertex(dofs.vertex(d)), dofs.region(d));
    return u;
}

double asymmetry(const SparseMatrix& a)
{
    const SparseMatrix d = SparseMatrix(a.transpose()) - a;
    double worst = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(d, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    return worst;
}

} // namespace

TEST(Diffusion, WeightsAndHarmonicMean)
{
    const DiffusionData K(1.0, 100.0);
    EXPECT_NEAR(K.omega1(), 100.0 / 101.0, 1e-15);
    EXPECT_NEAR(K.omega2(), 1.0 / 101.0, 1e-15);
    EXPECT_NEAR(K.k_gamma(), 100.0 / 101.0, 1e-15);
    EXPECT_NEAR(K.omega1() * K.k1, K.k_gamma(), 1e-15);
    EXPECT_NEAR(K.omega2() * K.k2, K.k_gamma(), 1e-15);
    EXPECT_THROW(DiffusionData(0.0, 1.0), invalid_argument);
    EXPECT_THROW(DiffusionData(1.0, -2.0), invalid_argument);
}

TEST(Dofs, UncutMeshIsPlainP1)
{
    const auto mesh = build_structured_mesh(5, 4, {0, 0, 1, 1});
    const auto cut = classify_cells(mesh, constant_level_set(-1.0));
    const Discretization disc(cut, {2.0, 5.0}, {});
    EXPECT_EQ(disc.dofs_c().size(), mesh.num_vertices());
    EXPECT_EQ(disc.dofs_d().size(), 3 * mesh.num_triangles());
    EXPECT_EQ(disc.dofs_c().num_dirichlet(), 2 * (5 + 4));
    EXPECT_EQ(disc.dofs_m().size(), 2 * mesh.num_edges());
}

TEST(Dofs, CutMeshDuplicatesCutVertices)
{
    const auto mesh = build_structured_mesh(8, 8, {-1, -1, 1, 1});
    const auto cut = classify_cells(mesh, vertical_line_level_set(0.3));
    const Discretization disc(cut, {1.0, 100.0}, {});
    Index expected = 0;
    for (int r = 1; r <= 2; ++r)
        for (Index v = 0; v < mesh.num_vertices(); ++v)
        {
            bool touches = false;
            for (Index t : mesh.vertex_triangles(v))
                touches = touches || cut.in_domain(r, t);
            expected += touches;
        }
    EXPECT_EQ(disc.dofs_c().size(), expected);
    const SparseMatrix& P = disc.prolongation_matrix();
    EXPECT_EQ(P.nonZeros(), disc.dofs_d().size());
    const Vector ones = P * Vector::Ones(P.cols());
    EXPECT_NEAR((ones - Vector::Ones(P.rows())).cwiseAbs().maxCoeff(), 0.0, 0.0);
}

TEST(Config, Validation)
{
    SolverConfig cfg;
    cfg.gamma = 0.0;
    EXPECT_THROW(cfg.validate(), invalid_argument);
    cfg = {};
    cfg.rt_order = 2;
    EXPECT_THROW(cfg.validate(), invalid_argument);
    cfg = {};
    cfg.gamma_g = -1.0;
    EXPECT_THROW(cfg.validate(), invalid_argument);
}

TEST(Primal, EnergySeminormOfLinearField)
{
    const auto mesh = build_structured_mesh(3, 3, {0, 0, 1, 1});
    const auto cut = classify_cells(mesh, constant_level_set(-1.0));
    const Discretization disc(cut, {2.0, 7.0}, {});
    Vector v(disc.dofs_c().size());
    for (Index d = 0; d < v.size(); ++d)
        v[d] = mesh.vertex(disc.dofs_c().vertex(d)).x();
    EXPECT_NEAR(energy_seminorm(disc, disc.prolongation_matrix() * v), std::sqrt(2.0), 1e-14);
}

TEST(Primal, LinearInterfaceReproducedExactly)
{
    for (const auto& K : {DiffusionData(1, 100), DiffusionData(1, 1), DiffusionData(3, 1e4)})
    {
        const auto mesh = build_structured_mesh(8, 8, {-1, -1, 1, 1});
        const auto problem = linear_interface_problem(0.3, K);
        const auto cut = classify_cells(mesh, problem.level_set);
        const Discretization disc(cut, K, {});
        const auto u = solve_primal(disc, problem);
        const Vector exact = interpolate(disc, problem);
        EXPECT_LT((u.coefficients() - exact).cwiseAbs().maxCoeff(), 1e-10) << K.k2;
    }
}

TEST(Primal, MatrixSymmetricAndGalerkinOrthogonal)
{
    const auto mesh = build_structured_mesh(12, 12, {-1, -1, 1, 1});
    const auto problem = petal_problem();
    const auto cut = classify_cells(mesh, problem.level_set);
    const Discretization disc(cut, problem.diffusion, {});
    auto sys = assemble_primal(disc, problem);
    const double scale = Eigen::Map<const Vector>(sys.full_matrix.valuePtr(), sys.full_matrix.nonZeros()).cwiseAbs().maxCoeff();
    EXPECT_LT(asymmetry(sys.full_matrix), 1e-13 * scale);
    EXPECT_LT(asymmetry(sys.matrix), 1e-13 * scale);
    const auto u = solve_primal(sys, disc);
    const Vector r = sys.full_matrix * u.coefficients() - sys.full_rhs;
    for (Index d = 0; d < r.size(); ++d)
    {
        if (!disc.dofs_c().dirichlet(d))
            EXPECT_LT(std::abs(r[d]), 1e-9 * (1 + sys.full_rhs.cwiseAbs().maxCoeff()));
        else
            EXPECT_DOUBLE_EQ(u.coefficients()[d], sys.dirichlet_values[d]);
    }
}

TEST(Primal, ZeroDataGivesZero)
{
    const auto mesh = build_structured_mesh(6, 6, {-1, -1, 1, 1});
    auto problem = petal_problem();
    problem.source = [](const Point&, int) { return 0.0; };
    const auto cut = classify_cells(mesh, problem.level_set);
    SolverConfig cfg;
    cfg.boundary = BoundaryMode::homogeneous;
    const Discretization disc(cut, problem.diffusion, cfg);
    const auto u = solve_primal(disc, problem);
    EXPECT_EQ(u.coefficients().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Primal, PetalNodalErrorDecreases)
{
    const auto problem = petal_problem();
    double previous = 1e300;
    double first = 0.0;
    for (Index n : {16, 32, 64})
    {
        const auto mesh = build_structured_mesh(n, n, {-1, -1, 1, 1});
        const auto cut = classify_cells(mesh, problem.level_set);
        const Discretization disc(cut, problem.diffusion, {});
        const auto u = solve_primal(disc, problem);
        const double err = (u.coefficients() - interpolate(disc, problem)).cwiseAbs().maxCoeff();
        EXPECT_LT(err, previous) << n;
        if (n == 16)
            first = err;
        previous = err;
    }
    EXPECT_LT(previous, first / 4);
}

TEST(Primal, SolutionQueries)
{
    const auto mesh = build_structured_mesh(4, 4, {-1, -1, 1, 1});
    const auto K = DiffusionData(1, 10);
    const auto problem = linear_interface_problem(0.1, K);
    const auto cut = classify_cells(mesh, problem.level_set);
    const Discretization disc(cut, K, {});
    const auto u = solve_primal(disc, problem);
    EXPECT_LT(u.relative_residual, 1e-12);
    for (Index t = 0; t < mesh.num_triangles(); ++t)
        for (int r = 1; r <= 2; ++r)
        {
            if (!u.defined(r, t))
                continue;
            EXPECT_NEAR((u.gradient(r, t) - Point(1.0 / K.k(r), 0)).norm(), 0.0, 1e-10);
            const Point c = mesh.centroid(t);
            EXPECT_NEAR(u.value(r, t, c), (c.x() - 0.1) / K.k(r), 1e-10);
        }
}
