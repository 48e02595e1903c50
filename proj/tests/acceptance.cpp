// One PASS/FAIL line per acceptance criterion; exit code 0 iff all pass.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "cutflux/adaptive.hpp"

using namespace cutflux;

namespace {

struct Outcome
{
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c, d);
    return buf;
}

struct Case
{
    TriangleMesh mesh;
    InterfaceProblem problem;
    CutTopology cut;
    std::unique_ptr<Discretization> disc;

    Case(Index n, InterfaceProblem p, SolverConfig cfg = {})
        : mesh(build_structured_mesh(n, n, {-1, -1, 1, 1})), problem(std::move(p))
    {
        cut = classify_cells(mesh, problem.level_set);
        disc = std::make_unique<Discretization>(cut, problem.diffusion, cfg);
    }
};

Outcome conservation()
{
    double worst = 0.0;
    std::size_t iterations = 0;
    for (int order : {0, 1})
    {
        BenchmarkConfig cfg;
        cfg.rt_order = order;
        cfg.max_iterations = 4; // initial mesh plus three adaptive steps
        const auto trace = adaptive_loop(cfg);
        iterations += trace.records.size();
        for (const auto& r : trace.records)
            worst = std::max(worst, r.conservation);
    }
    return {iterations == 8 && worst <= 1e-9, fmt("max relative residual %.2e over 4 meshes x 2 orders", worst)};
}

Outcome mixed_equivalence()
{
    Case s(8, petal_problem());
    const auto u = solve_primal(*s.disc, s.problem);
    const auto theta = compute_multipliers_local(u, s.problem);
    const auto report = verify_mixed_equivalence(u, theta, s.problem);

    const SparseMatrix B = multiplier_matrix(*s.disc);
    const SparseMatrix& P = s.disc->prolongation_matrix();
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> coin(-1.0, 1.0);
    double worst_b = 0.0;
    for (int k = 0; k < 50; ++k)
    {
        Vector mu(B.cols()), c(P.cols());
        for (auto& x : mu)
            x = coin(rng);
        for (Index d = 0; d < c.size(); ++d)
            c[d] = s.disc->dofs_c().dirichlet(d) ? 0.0 : coin(rng);
        const Vector v = P * c;
        worst_b = std::max(worst_b, std::abs(v.dot(B * mu)));
    }
    return {report.eq1 <= 1e-9 && worst_b <= 1e-11,
            fmt("eq1 residual %.2e x scale, max |b_h(mu, v)| %.2e over 50 pairs", report.eq1, worst_b)};
}

Outcome exactness()
{
    const DiffusionData K(1, 100);
    Case s(8, linear_interface_problem(0.3, K));
    const auto u = solve_primal(*s.disc, s.problem);
    const auto& dofs = s.disc->dofs_c();
    double dof_error = 0.0;
    for (Index d = 0; d < dofs.size(); ++d)
    {
        const double exact = (s.mesh.vertex(dofs.vertex(d)).x() - 0.3) / K.k(dofs.region(d));
        dof_error = std::max(dof_error, std::abs(u.coefficients()[d] - exact));
    }
    const auto theta = compute_multipliers_local(u, s.problem);
    const auto est = compute_estimators(u, recover_flux(u, theta), s.problem);
    const double th = theta.values.cwiseAbs().maxCoeff();
    const bool ok = dof_error <= 1e-10 && est.eta <= 1e-10 && est.eta_gamma <= 1e-10 && th <= 1e-10;
    return {ok, fmt("dof error %.2e, eta %.2e, eta_gamma %.2e, max |theta| %.2e", dof_error, est.eta, est.eta_gamma,
                    th)};
}

Outcome transmission()
{
    double worst = 0.0;
    for (int order : {0, 1})
    {
        SolverConfig cfg;
        cfg.rt_order = order;
        Case s(16, petal_problem(), cfg);
        const auto u = solve_primal(*s.disc, s.problem);
        const auto sigma = recover_flux(u, compute_multipliers_local(u, s.problem));
        worst = std::max(worst, transmission_jump(sigma, s.cut));
    }
    return {worst <= 1e-12, fmt("max one-sided mismatch of sigma.n_Gamma %.2e", worst)};
}

Outcome infsup()
{
    double lo = 1e300, hi = 0.0;
    for (Index n : {4, 8})
        for (double contrast : {1.0, 100.0, 1e4})
        {
            Case s(n, petal_problem(1.0, contrast));
            const double beta = compute_infsup_constant(*s.disc).beta;
            lo = std::min(lo, beta);
            hi = std::max(hi, beta);
        }
    return {lo > 0.01 && hi / lo <= 3.0, fmt("beta in [%.3f, %.3f], ratio %.2f", lo, hi, hi / lo)};
}

struct PetalRun
{
    AdaptiveTrace trace;
    double seconds = 0.0;
};

const PetalRun& petal_run()
{
    static const PetalRun run = [] {
        const auto start = std::chrono::steady_clock::now();
        BenchmarkConfig cfg;
        cfg.theta = 0.2;
        cfg.max_dofs = 20000;
        PetalRun r;
        r.trace = adaptive_loop(cfg);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return r;
    }();
    return run;
}

Outcome interpolation_bound()
{
    const auto& records = petal_run().trace.records;
    if (records.size() < 8)
        return {false, "run too short"};
    std::vector<double> ratio;
    bool finite = true;
    for (const auto& r : records)
    {
        ratio.push_back(r.gap / r.eta_gamma);
        finite = finite && std::isfinite(ratio.back());
    }
    const double worst = *std::max_element(ratio.begin(), ratio.end());
    const double first4 = *std::max_element(ratio.begin(), ratio.begin() + 4);
    const double last4 = *std::max_element(ratio.end() - 4, ratio.end());
    return {finite && worst <= 10.0 && last4 <= 1.5 * first4,
            fmt("max |I_h u_h - u_h| / eta_Gamma %.3f, first-4 max %.3f, last-4 max %.3f", worst, first4, last4)};
}

Outcome rates()
{
    const auto& run = petal_run();
    const auto& trace = run.trace;
    if (trace.records.size() < 8)
        return {false, "fewer than 8 iterations"};
    const double se = fit_convergence_rate(trace, TraceQuantity::error, 8);
    const double sn = fit_convergence_rate(trace, TraceQuantity::eta, 8);
    const bool in_band = se >= -0.65 && se <= -0.35 && sn >= -0.65 && sn <= -0.35;
    const bool ok = in_band && trace.stop_reason == "dof cap" && run.seconds <= 600.0;
    std::ostringstream os;
    os << fmt("slopes error %.3f, eta %.3f; ", se, sn) << trace.records.size() << " iterations to N = "
       << trace.records.back().dofs << " (" << trace.stop_reason << ")" << fmt(", %.1f s", run.seconds);
    return {ok, os.str()};
}

Outcome reliability()
{
    const auto& records = petal_run().trace.records;
    std::vector<double> c;
    for (const auto& r : records)
        c.push_back(std::max(0.0, r.error - r.eta) / (r.eta_gamma + r.eps));
    const double C = *std::max_element(c.begin(), c.end());
    bool bound = std::isfinite(C);
    for (const auto& r : records)
        bound = bound && r.error <= r.eta + C * (r.eta_gamma + r.eps) * (1 + 1e-12) + 1e-300;
    bool settling = true;
    for (std::size_t i = c.size() - 4; i < c.size(); ++i)
        settling = settling && c[i] <= 1.2 * c[i - 1];
    double worst_ratio = 0.0;
    for (const auto& r : records)
        worst_ratio = std::max(worst_ratio, r.error / r.eta);
    return {bound && settling,
            fmt("C = %.3f (max error / eta = %.3f), last-5 ratios nonincreasing within 20%%", C, worst_ratio)};
}

Outcome dorfler()
{
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> size(1, 15);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    std::uniform_real_distribution<double> fraction(0.01, 1.0);
    int agree = 0;
    for (int instance = 0; instance < 100; ++instance)
    {
        std::vector<double> v(size(rng));
        for (auto& x : v)
            x = instance % 4 == 0 ? std::round(3 * value(rng)) : value(rng);
        const double theta = fraction(rng);
        double total = 0.0;
        for (double x : v)
            total += x * x;
        std::size_t best = total == 0.0 ? 0 : v.size() + 1;
        if (total > 0.0)
            for (unsigned mask = 1; mask < (1u << v.size()); ++mask)
            {
                double s = 0.0;
                for (std::size_t i = 0; i < v.size(); ++i)
                    if (mask & (1u << i))
                        s += v[i] * v[i];
                if (s >= theta * total)
                    best = std::min<std::size_t>(best, static_cast<std::size_t>(__builtin_popcount(mask)));
            }
        const auto marked = dorfler_mark(v, theta);
        double s = 0.0;
        for (Index t : marked)
            s += v[t] * v[t];
        agree += marked.size() == best && s >= theta * total;
    }
    return {agree == 100, std::to_string(agree) + "/100 instances agree with exhaustive search"};
}

} // namespace

int main()
{
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"1 local conservation", conservation},
        {"2 mixed equivalence and kernel", mixed_equivalence},
        {"3 exactness for a linear interface solution", exactness},
        {"4 transmission condition", transmission},
        {"5 inf-sup robustness", infsup},
        {"6 interpolation bound", interpolation_bound},
        {"7 convergence rates", rates},
        {"8 reliability monitoring", reliability},
        {"9 Dorfler minimality", dorfler},
    };
    bool all = true;
    for (const auto& [name, check] : criteria)
    {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = check();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail
                  << fmt("  [%.1f s]", s) << std::endl;
        all = all && o.passed;
    }
    return all ? 0 : 1;
}
