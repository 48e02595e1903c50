#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <numeric>
#include <span>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cutflux/estimators.hpp"

namespace cutflux {

/// Smallest prefix of the elements sorted by decreasing estimate (ties to the
/// lower id) whose squared sum reaches theta times the total. Returned sorted
/// by id.
inline std::vector<Index> dorfler_mark(std::span<const double> estimates, double theta)
{
    if (!(theta > 0.0) || theta > 1.0)
        throw invalid_argument("dorfler_mark: theta must lie in (0, 1]");
    for (double x : estimates)
        if (!(x >= 0.0) || !std::isfinite(x))
            throw invalid_argument("dorfler_mark: estimates must be finite and non-negative");
    std::vector<Index> order(estimates.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return estimates[a] > estimates[b]; });
    double total = 0.0;
    for (Index t : order)
        total += estimates[t] * estimates[t];
    std::vector<Index> marked;
    if (total == 0.0)
        return marked;
    const double target = theta * total;
    double sum = 0.0;
    for (Index t : order)
    {
        if (sum >= target)
            break;
        sum += estimates[t] * estimates[t];
        marked.push_back(t);
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

/// Dorfler marking on eta_T, plus (optionally) the cut elements whose eta~_T
/// exceeds the median eta_T of the marked set.
inline std::vector<Index> mark_elements(const EstimatorReport& r, const CutTopology& cut, double theta,
                                        bool with_interface)
{
    auto marked = dorfler_mark(r.eta_T, theta);
    if (!with_interface || marked.empty())
        return marked;
    std::vector<double> values;
    for (Index t : marked)
        values.push_back(r.eta_T[t]);
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double median = *mid;
    for (const auto& cell : cut.cut_cells())
        if (r.eta_tilde_T[cell.element] > median && !std::binary_search(marked.begin(), marked.end(), cell.element))
            marked.push_back(cell.element);
    std::sort(marked.begin(), marked.end());
    return marked;
}

/// Bisects every marked element `levels` times: each later pass marks the
/// descendants of the originally marked elements. The parent map of the
/// result points into `mesh`.
inline TriangleMesh refine_levels(const TriangleMesh& mesh, std::span<const Index> marked, int levels)
{
    if (levels < 1)
        throw invalid_argument("refine_levels: need at least one level");
    TriangleMesh current = refine(mesh, marked);
    if (levels == 1)
        return current;
    std::vector<char> chosen(mesh.num_triangles(), 0);
    for (Index t : marked)
        chosen[t] = 1;
    std::vector<Index> root = current.parents();
    for (int level = 1; level < levels; ++level)
    {
        std::vector<Index> again;
        for (Index t = 0; t < current.num_triangles(); ++t)
            if (chosen[root[t]])
                again.push_back(t);
        TriangleMesh refined = refine(current, again);
        std::vector<Index> next(refined.num_triangles());
        for (Index t = 0; t < refined.num_triangles(); ++t)
            next[t] = root[refined.parent(t)];
        root = std::move(next);
        current = std::move(refined);
    }
    return TriangleMesh(current.vertices(), current.triangles(), std::move(root));
}

struct BenchmarkConfig
{
    std::string level_set = "petal";
    double k_minus = 1.0;
    double k_plus = 100.0;
    double gamma = 10.0;
    double gamma_g = 0.1;
    int rt_order = 1;
    double theta = 0.2;
    Index max_dofs = 20000;
    Index mesh_n0 = 16;
    int max_iterations = 30;
    int bisections = 2; // per marked element and iteration
    int stiffness_degree = 2;
    int source_degree = 7;
    int error_degree = 7;
    bool mark_with_interface = true;
    bool write_vtk = true;
    std::string out_dir;

    SolverConfig solver() const
    {
        SolverConfig cfg;
        cfg.gamma = gamma;
        cfg.gamma_g = gamma_g;
        cfg.rt_order = rt_order;
        cfg.stiffness_degree = stiffness_degree;
        cfg.source_degree = source_degree;
        cfg.error_degree = error_degree;
        return cfg;
    }

    void validate() const
    {
        if (!(theta > 0.0) || theta > 1.0)
            throw invalid_argument("config: theta must lie in (0, 1]");
        if (!(k_minus > 0.0) || !(k_plus > 0.0))
            throw invalid_argument("config: coefficients must be positive");
        if (mesh_n0 < 1)
            throw invalid_argument("config: mesh_n0 must be positive");
        if (max_iterations < 1)
            throw invalid_argument("config: max_iterations must be positive");
        if (bisections < 1)
            throw invalid_argument("config: bisections must be positive");
        if (max_dofs < 1)
            throw invalid_argument("config: max_dofs must be positive");
        solver().validate();
        level_set_by_name(level_set);
    }
};

/// Problem named by the level set: u^i = phi / k_i with k_minus inside.
inline InterfaceProblem make_problem(const BenchmarkConfig& cfg)
{
    if (cfg.level_set == "petal")
        return petal_problem(cfg.k_minus, cfg.k_plus / cfg.k_minus);
    return level_set_problem(level_set_by_name(cfg.level_set), DiffusionData(cfg.k_minus, cfg.k_plus));
}

namespace detail {

inline std::string trim(const std::string& s)
{
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos)
        return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline bool parse_switch(const std::string& key, const std::string& v)
{
    if (v == "on" || v == "true" || v == "1")
        return true;
    if (v == "off" || v == "false" || v == "0")
        return false;
    throw invalid_argument("config: " + key + " expects on/off, got '" + v + "'");
}

} // namespace detail

/// Sets one key of the flat config format; unknown keys are an error.
inline void set_config_value(BenchmarkConfig& cfg, const std::string& key, const std::string& value)
{
    auto number = [&]() {
        std::size_t used = 0;
        double x = 0.0;
        try
        {
            x = std::stod(value, &used);
        }
        catch (const std::exception&)
        {
            throw invalid_argument("config: " + key + " expects a number, got '" + value + "'");
        }
        if (used != value.size())
            throw invalid_argument("config: " + key + " expects a number, got '" + value + "'");
        return x;
    };
    auto integer = [&]() {
        const double x = number();
        if (x != std::floor(x))
            throw invalid_argument("config: " + key + " expects an integer, got '" + value + "'");
        return static_cast<Index>(x);
    };
    if (key == "level_set")
        cfg.level_set = value;
    else if (key == "k_minus")
        cfg.k_minus = number();
    else if (key == "k_plus")
        cfg.k_plus = number();
    else if (key == "gamma")
        cfg.gamma = number();
    else if (key == "gamma_g")
        cfg.gamma_g = number();
    else if (key == "rt_order")
        cfg.rt_order = static_cast<int>(integer());
    else if (key == "theta")
        cfg.theta = number();
    else if (key == "max_dofs")
        cfg.max_dofs = integer();
    else if (key == "mesh_n0")
        cfg.mesh_n0 = integer();
    else if (key == "max_iterations")
        cfg.max_iterations = static_cast<int>(integer());
    else if (key == "bisections")
        cfg.bisections = static_cast<int>(integer());
    else if (key == "stiffness_degree")
        cfg.stiffness_degree = static_cast<int>(integer());
    else if (key == "source_degree")
        cfg.source_degree = static_cast<int>(integer());
    else if (key == "error_degree")
        cfg.error_degree = static_cast<int>(integer());
    else if (key == "mark_with_interface")
        cfg.mark_with_interface = detail::parse_switch(key, value);
    else if (key == "write_vtk")
        cfg.write_vtk = detail::parse_switch(key, value);
    else if (key == "out_dir")
        cfg.out_dir = value;
    else
        throw invalid_argument("config: unknown key '" + key + "'");
}

/// `key = value` per line; blank lines and `#` comments are skipped.
inline BenchmarkConfig parse_config(std::istream& is)
{
    BenchmarkConfig cfg;
    std::string line;
    int number = 0;
    while (std::getline(is, line))
    {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw invalid_argument("config line " + std::to_string(number) + ": expected key = value");
        set_config_value(cfg, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return cfg;
}

inline BenchmarkConfig load_config(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is)
        throw invalid_argument("cannot open config file " + path.string());
    return parse_config(is);
}

inline void write_config(std::ostream& os, const BenchmarkConfig& cfg)
{
    os.precision(17);
    os << "level_set = " << cfg.level_set << '\n'
       << "k_minus = " << cfg.k_minus << '\n'
       << "k_plus = " << cfg.k_plus << '\n'
       << "gamma = " << cfg.gamma << '\n'
       << "gamma_g = " << cfg.gamma_g << '\n'
       << "rt_order = " << cfg.rt_order << '\n'
       << "theta = " << cfg.theta << '\n'
       << "max_dofs = " << cfg.max_dofs << '\n'
       << "mesh_n0 = " << cfg.mesh_n0 << '\n'
       << "max_iterations = " << cfg.max_iterations << '\n'
       << "bisections = " << cfg.bisections << '\n'
       << "stiffness_degree = " << cfg.stiffness_degree << '\n'
       << "source_degree = " << cfg.source_degree << '\n'
       << "error_degree = " << cfg.error_degree << '\n'
       << "mark_with_interface = " << (cfg.mark_with_interface ? "on" : "off") << '\n'
       << "write_vtk = " << (cfg.write_vtk ? "on" : "off") << '\n';
    if (!cfg.out_dir.empty())
        os << "out_dir = " << cfg.out_dir << '\n';
}

/// One solve-estimate cycle. The check fields are the per-iteration
/// invariants of the lower modules.
struct IterationRecord
{
    int iter = 0;
    Index dofs = 0;
    double eta = 0.0;
    double eta_gamma = 0.0;
    double eps = 0.0;
    double error = 0.0;
    double effectivity = 0.0;
    Index elements = 0;
    Index cut_elements = 0;
    double seconds = 0.0;

    double gap = 0.0;
    double conservation = 0.0; // worst ||div sigma + pi f||_T / (1 + ||f||_T)
    double mixed_eq1 = 0.0;
    double transmission = 0.0;
    Index marked = 0;
};

struct AdaptiveTrace
{
    std::vector<IterationRecord> records;
    std::string stop_reason;
};

enum class TraceQuantity
{
    error,
    eta
};

/// Least-squares slope of log(quantity) against log(N) over the last
/// `window` records.
inline double fit_convergence_rate(const AdaptiveTrace& trace, TraceQuantity quantity, std::size_t window)
{
    if (window < 3 || trace.records.size() < window)
        throw invalid_argument("fit_convergence_rate: need at least 3 points in the window");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(window);
    for (std::size_t i = trace.records.size() - window; i < trace.records.size(); ++i)
    {
        const auto& r = trace.records[i];
        const double q = quantity == TraceQuantity::error ? r.error : r.eta;
        if (!(q > 0.0) || r.dofs <= 0)
            throw invalid_argument("fit_convergence_rate: quantities must be positive");
        const double x = std::log(static_cast<double>(r.dofs));
        const double y = std::log(q);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (!(denom > 0.0))
        throw invalid_argument("fit_convergence_rate: N does not vary over the window");
    return (n * sxy - sx * sy) / denom;
}

inline void write_trace_csv(std::ostream& os, const AdaptiveTrace& trace, bool with_seconds = true)
{
    os << "iter,N,eta,eta_gamma,eps,error,effectivity,elements,cut_elements,seconds\n";
    os.precision(17);
    for (const auto& r : trace.records)
        os << r.iter << ',' << r.dofs << ',' << r.eta << ',' << r.eta_gamma << ',' << r.eps << ',' << r.error << ','
           << r.effectivity << ',' << r.elements << ',' << r.cut_elements << ',' << (with_seconds ? r.seconds : 0.0)
           << '\n';
}

/// Called after every iteration with the live objects, e.g. for VTK output.
struct IterationView
{
    const IterationRecord& record;
    const PrimalSolution& u;
    const FluxField& sigma;
    const EstimatorReport& estimators;
    const DivergenceReport& divergence;
};

using IterationCallback = std::function<void(const IterationView&)>;

/// Solve, estimate, mark, refine until the next mesh would exceed
/// cfg.max_dofs, nothing is marked, or cfg.max_iterations is reached.
inline AdaptiveTrace adaptive_loop(const BenchmarkConfig& cfg, const IterationCallback& callback = {})
{
    cfg.validate();
    const auto problem = make_problem(cfg);
    const auto solver = cfg.solver();

    auto mesh = std::make_unique<TriangleMesh>(build_structured_mesh(cfg.mesh_n0, cfg.mesh_n0, {-1, -1, 1, 1}));
    auto cut = std::make_unique<CutTopology>(classify_cells(*mesh, problem.level_set));
    auto disc = std::make_unique<Discretization>(*cut, problem.diffusion, solver);
    if (disc->dofs_c().size() > cfg.max_dofs)
        throw invalid_argument("config: initial mesh already exceeds max_dofs");

    AdaptiveTrace trace;
    for (int iter = 0;; ++iter)
    {
        const auto start = std::chrono::steady_clock::now();
        IterationRecord rec;
        try
        {
            const auto u = solve_primal(*disc, problem);
            const auto theta = compute_multipliers_local(u, problem);
            const auto sigma = recover_flux(u, theta);
            const auto est = compute_estimators(u, sigma, problem);
            const auto div = divergence_residual(sigma, *disc, problem);

            rec.iter = iter;
            rec.dofs = disc->dofs_c().size();
            rec.eta = est.eta;
            rec.eta_gamma = est.eta_gamma;
            rec.eps = est.eps;
            rec.error = problem.has_exact() ? est.error : 0.0;
            rec.effectivity = rec.error > 0.0 ? est.effectivity() : 0.0;
            rec.elements = mesh->num_triangles();
            rec.cut_elements = cut->num_cut_cells();
            rec.gap = est.gap;
            rec.conservation = div.worst_relative;
            rec.mixed_eq1 = verify_mixed_equivalence(u, theta, problem).eq1;
            rec.transmission = transmission_jump(sigma, *cut);

            const bool vanished =
                est.eta + est.eta_gamma <= 1e-10 * (1.0 + energy_seminorm(*disc, u.broken()));
            const auto marked = iter + 1 < cfg.max_iterations && !vanished
                                    ? mark_elements(est, *cut, cfg.theta, cfg.mark_with_interface)
                                    : std::vector<Index>{};
            rec.marked = static_cast<Index>(marked.size());
            rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            trace.records.push_back(rec);
            if (callback)
                callback({trace.records.back(), u, sigma, est, div});

            if (iter + 1 >= cfg.max_iterations)
            {
                trace.stop_reason = "iteration cap";
                break;
            }
            if (vanished || marked.empty())
            {
                trace.stop_reason = vanished ? "estimator vanished" : "nothing marked";
                break;
            }
            auto next_mesh = std::make_unique<TriangleMesh>(refine_levels(*mesh, marked, cfg.bisections));
            auto next_cut = std::make_unique<CutTopology>(classify_cells(*next_mesh, problem.level_set));
            auto next_disc = std::make_unique<Discretization>(*next_cut, problem.diffusion, solver);
            if (next_disc->dofs_c().size() > cfg.max_dofs)
            {
                trace.stop_reason = "dof cap";
                break;
            }
            disc = std::move(next_disc);
            cut = std::move(next_cut);
            mesh = std::move(next_mesh);
        }
        catch (const std::exception& e)
        {
            throw std::runtime_error("adaptive iteration " + std::to_string(iter) + ": " + e.what());
        }
    }
    return trace;
}

} // namespace cutflux
