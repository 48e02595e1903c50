#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "cutflux/common.hpp"

namespace cutflux {

inline constexpr int max_quadrature_degree = 12;

/// Points in physical coordinates with area (or length) weights.
struct QuadratureRule
{
    std::vector<Point> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return points.size(); }

    double weight_sum() const
    {
        double s = 0.0;
        for (double w : weights)
            s += w;
        return s;
    }

    void append(const QuadratureRule& other)
    {
        points.insert(points.end(), other.points.begin(), other.points.end());
        weights.insert(weights.end(), other.weights.begin(), other.weights.end());
    }

    template <typename F>
    auto integrate(F&& f) const
    {
        using R = decltype(f(points.front()));
        R sum = R();
        bool first = true;
        for (std::size_t q = 0; q < points.size(); ++q)
        {
            if (first)
            {
                sum = weights[q] * f(points[q]);
                first = false;
            }
            else
                sum += weights[q] * f(points[q]);
        }
        return sum;
    }
};

/// Gauss-Legendre nodes and weights on [0, 1].
struct GaussLegendre
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const GaussLegendre& gauss_legendre(int n)
{
    static const auto table = [] {
        std::array<GaussLegendre, 16> t;
        for (int m = 1; m < 16; ++m)
        {
            auto& g = t[m];
            g.nodes.resize(m);
            g.weights.resize(m);
            for (int i = 0; i < m; ++i)
            {
                // Newton on P_m, derivative from the three-term recurrence
                double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
                double dp = 1.0;
                for (int it = 0; it < 100; ++it)
                {
                    double p_prev = 1.0, p = x;
                    for (int k = 2; k <= m; ++k)
                    {
                        const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
                        p_prev = p;
                        p = p_next;
                    }
                    dp = m * (x * p - p_prev) / (x * x - 1.0);
                    const double dx = p / dp;
                    x -= dx;
                    if (std::abs(dx) < 1e-16)
                        break;
                }
                g.nodes[i] = 0.5 * (1.0 - x);
                g.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
            }
        }
        return t;
    }();
    if (n < 1 || n >= 16)
        throw invalid_argument("gauss_legendre: unsupported point count");
    return table[n];
}

/// Rule on the segment [a, b], exact for polynomials of the given degree.
inline QuadratureRule segment_rule(const Point& a, const Point& b, int degree)
{
    if (degree < 0 || degree > 2 * max_quadrature_degree)
        throw invalid_argument("segment_rule: unsupported degree");
    const auto& g = gauss_legendre(degree / 2 + 1);
    const double length = (b - a).norm();
    QuadratureRule rule;
    rule.degree = degree;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
    {
        rule.points.push_back(a + g.nodes[i] * (b - a));
        rule.weights.push_back(g.weights[i] * length);
    }
    return rule;
}

/// Rule on the triangle (a, b, c) of either orientation.
/// Degree 1 is the centroid rule, degree 2 the symmetric 3-point rule, higher
/// degrees a collapsed Gauss product rule.
inline QuadratureRule triangle_rule(const Point& a, const Point& b, const Point& c, int degree)
{
    if (degree < 0 || degree > max_quadrature_degree)
        throw invalid_argument("triangle_rule: unsupported degree " + std::to_string(degree));
    const double area = 0.5 * std::abs(cross(b - a, c - a));
    QuadratureRule rule;
    rule.degree = degree;
    if (degree <= 1)
    {
        rule.points.push_back((a + b + c) / 3.0);
        rule.weights.push_back(area);
        return rule;
    }
    if (degree == 2)
    {
        const std::array<Point, 3> v{a, b, c};
        for (int j = 0; j < 3; ++j)
        {
            rule.points.push_back((2.0 / 3.0) * v[j] + (1.0 / 6.0) * (v[(j + 1) % 3] + v[(j + 2) % 3]));
            rule.weights.push_back(area / 3.0);
        }
        return rule;
    }
    const auto& g = gauss_legendre((degree + 2 + 1) / 2);
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
    {
        const double u = g.nodes[i];
        for (std::size_t j = 0; j < g.nodes.size(); ++j)
        {
            const double v = g.nodes[j];
            const double s = u;
            const double t = (1.0 - u) * v;
            rule.points.push_back(a + s * (b - a) + t * (c - a));
            rule.weights.push_back(2.0 * area * g.weights[i] * g.weights[j] * (1.0 - u));
        }
    }
    return rule;
}

/// Checks exactness of every triangle rule on monomials of its degree over the
/// reference triangle; returns the worst absolute error.
inline double triangle_rule_self_check()
{
    auto exact = [](int p, int q) {
        // int_{ref} x^p y^q = p! q! / (p + q + 2)!
        double num = std::tgamma(p + 1.0) * std::tgamma(q + 1.0);
        return num / std::tgamma(p + q + 3.0);
    };
    double worst = 0.0;
    for (int d = 0; d <= max_quadrature_degree; ++d)
    {
        const auto rule = triangle_rule(Point(0, 0), Point(1, 0), Point(0, 1), d);
        for (int p = 0; p <= d; ++p)
            for (int q = 0; p + q <= d; ++q)
            {
                const double approx =
                    rule.integrate([&](const Point& x) { return std::pow(x.x(), p) * std::pow(x.y(), q); });
                worst = std::max(worst, std::abs(approx - exact(p, q)));
            }
    }
    return worst;
}

} // namespace cutflux
