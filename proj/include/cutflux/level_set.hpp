#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "cutflux/common.hpp"

namespace cutflux {

/// Signed distance-like function; phi < 0 is region 1, phi >= 0 region 2.
struct LevelSet
{
    std::string name;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;   // optional
    std::function<double(const Point&)> laplacian; // optional

    double operator()(const Point& p) const { return value(p); }
    bool has_gradient() const { return static_cast<bool>(gradient); }
};

inline LevelSet constant_level_set(double c)
{
    return {"constant:" + std::to_string(c), [c](const Point&) { return c; },
            [](const Point&) { return Point(0.0, 0.0); }, [](const Point&) { return 0.0; }};
}

inline LevelSet vertical_line_level_set(double c)
{
    return {"vertical_line:" + std::to_string(c), [c](const Point& p) { return p.x() - c; },
            [](const Point&) { return Point(1.0, 0.0); }, [](const Point&) { return 0.0; }};
}

inline LevelSet circle_level_set(double radius)
{
    return {"circle:" + std::to_string(radius), [radius](const Point& p) { return p.norm() - radius; },
            [](const Point& p) { return Point(p / p.norm()); }, [](const Point& p) { return 1.0 / p.norm(); }};
}

/// (x^2 + y^2)^2 (1 + 0.5 sin(12 atan(y/x))) - 0.3, a twelve-lobed flower.
/// sin(12 t) has period pi/6, so atan2 and atan(y/x) agree.
inline LevelSet petal_level_set()
{
    LevelSet ls;
    ls.name = "petal";
    ls.value = [](const Point& p) {
        const double r2 = p.squaredNorm();
        const double angle = std::atan2(p.y(), p.x());
        return r2 * r2 * (1.0 + 0.5 * std::sin(12.0 * angle)) - 0.3;
    };
    ls.gradient = [](const Point& p) {
        const double r2 = p.squaredNorm();
        const double angle = std::atan2(p.y(), p.x());
        const double g = 1.0 + 0.5 * std::sin(12.0 * angle);
        const double dg = 6.0 * std::cos(12.0 * angle);
        return Point(4.0 * r2 * g * p + r2 * dg * Point(-p.y(), p.x()));
    };
    ls.laplacian = [](const Point& p) {
        const double r2 = p.squaredNorm();
        const double angle = std::atan2(p.y(), p.x());
        return r2 * (16.0 - 64.0 * std::sin(12.0 * angle));
    };
    return ls;
}

/// "petal", "vertical_line:<c>", "circle:<r>" or "constant:<c>".
inline LevelSet level_set_by_name(const std::string& spec)
{
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    auto argument = [&]() {
        if (colon == std::string::npos)
            throw invalid_argument("level set '" + spec + "' needs a parameter");
        try
        {
            return std::stod(spec.substr(colon + 1));
        }
        catch (const std::exception&)
        {
            throw invalid_argument("level set '" + spec + "': bad parameter");
        }
    };
    if (kind == "petal")
        return petal_level_set();
    if (kind == "vertical_line")
        return vertical_line_level_set(argument());
    if (kind == "circle")
    {
        const double r = argument();
        if (!(r > 0.0))
            throw invalid_argument("circle radius must be positive");
        return circle_level_set(r);
    }
    if (kind == "constant")
        return constant_level_set(argument());
    throw invalid_argument("unknown level set '" + spec + "'");
}

/// Largest relative mismatch between the analytic gradient and central
/// differences with step h over the given points.
template <typename Points>
double gradient_fd_mismatch(const LevelSet& ls, const Points& points, double h = 1e-6)
{
    double worst = 0.0;
    for (const Point& p : points)
    {
        const Point g = ls.gradient(p);
        const Point fd((ls(p + Point(h, 0)) - ls(p - Point(h, 0))) / (2 * h),
                       (ls(p + Point(0, h)) - ls(p - Point(0, h))) / (2 * h));
        worst = std::max(worst, (g - fd).norm() / std::max(g.norm(), 1e-12));
    }
    return worst;
}

} // namespace cutflux
