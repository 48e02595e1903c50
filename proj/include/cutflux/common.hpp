#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cutflux {

using Index = std::int64_t;
using Point = Eigen::Vector2d;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr Index no_index = -1;

/// Raised for contract violations on user-supplied arguments.
class invalid_argument : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// A cut cell whose three vertex values all vanish up to the snap tolerance.
class degenerate_interface_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// The Nitsche matrix failed to factor as positive definite.
class penalty_too_small_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class singular_system_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A local multiplier system was not consistent; this points at an assembly bug.
class patch_inconsistency_error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

inline double cross(const Point& a, const Point& b)
{
    return a.x() * b.y() - a.y() * b.x();
}

/// 90 degree clockwise rotation.
inline Point rotate_cw(const Point& t)
{
    return Point(t.y(), -t.x());
}

} // namespace cutflux
