#pragma once

#include <functional>
#include <optional>
#include <string>

#include "cutflux/common.hpp"
#include "cutflux/cut_topology.hpp"
#include "cutflux/level_set.hpp"

namespace cutflux {

/// Piecewise constant diffusion k_1 on region 1, k_2 on region 2.
struct DiffusionData
{
    double k1 = 1.0;
    double k2 = 1.0;

    DiffusionData() = default;
    DiffusionData(double k_one, double k_two) : k1(k_one), k2(k_two)
    {
        if (!(k1 > 0.0) || !(k2 > 0.0))
            throw invalid_argument("DiffusionData: coefficients must be positive");
    }

    double k(int region) const { return region == 1 ? k1 : k2; }
    double omega1() const { return k2 / (k1 + k2); }
    double omega2() const { return k1 / (k1 + k2); }
    double omega(int region) const { return region == 1 ? omega1() : omega2(); }
    /// harmonic mean
    double k_gamma() const { return k1 * k2 / (k1 + k2); }

    /// k_i off the interface, k_Gamma on cut elements.
    double delta(const CutTopology& cut, Index t) const
    {
        switch (cut.cell_class(t))
        {
        case CellClass::in1: return k1;
        case CellClass::in2: return k2;
        case CellClass::cut: return k_gamma();
        }
        return k_gamma();
    }
};

/// Function given per region, evaluated at physical points.
using RegionFunction = std::function<double(const Point&, int region)>;
using RegionGradient = std::function<Point(const Point&, int region)>;

/// Interface problem data: geometry, coefficients, source and (optionally)
/// the exact solution with its gradient, each extended smoothly per region.
struct InterfaceProblem
{
    std::string name;
    LevelSet level_set;
    DiffusionData diffusion;
    RegionFunction source;
    RegionFunction exact;
    RegionGradient exact_gradient;
    bool polynomial_source = false;

    bool has_exact() const { return static_cast<bool>(exact) && static_cast<bool>(exact_gradient); }
};

/// u^i = phi / k_i, so that [u] = 0 and [K grad u . n] = 0 on {phi = 0} and
/// f = -div(k_i grad u^i) = -laplacian(phi) in both regions.
inline InterfaceProblem level_set_problem(const LevelSet& ls, const DiffusionData& K)
{
    if (!ls.gradient || !ls.laplacian)
        throw invalid_argument("level_set_problem: level set needs gradient and laplacian");
    InterfaceProblem p;
    p.name = ls.name;
    p.level_set = ls;
    p.diffusion = K;
    p.exact = [ls, K](const Point& x, int region) { return ls(x) / K.k(region); };
    p.exact_gradient = [ls, K](const Point& x, int region) { return Point(ls.gradient(x) / K.k(region)); };
    p.source = [ls](const Point& x, int) { return -ls.laplacian(x); };
    p.polynomial_source = ls.name.rfind("vertical_line", 0) == 0 || ls.name.rfind("constant", 0) == 0;
    return p;
}

/// Flower-shaped interface with k- = 1 inside and k+ = contrast * k- outside.
inline InterfaceProblem petal_problem(double k_minus = 1.0, double contrast = 100.0)
{
    auto p = level_set_problem(petal_level_set(), DiffusionData(k_minus, contrast * k_minus));
    p.name = "petal";
    return p;
}

/// u = (x - c) / k_i across the straight interface x = c, f = 0.
inline InterfaceProblem linear_interface_problem(double c, const DiffusionData& K)
{
    auto p = level_set_problem(vertical_line_level_set(c), K);
    p.name = "linear_interface";
    p.source = [](const Point&, int) { return 0.0; };
    p.polynomial_source = true;
    return p;
}

} // namespace cutflux
