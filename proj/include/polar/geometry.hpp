#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "polar/common.hpp"

namespace polar {

using Vec = Eigen::VectorXd;

constexpr double kMembershipTol = 1e-12;
constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

// Point of S^m embedded in R^{m+1}. Coordinates are kept unit-norm; inputs
// drifting by more than 1e-12 are renormalized on construction.
struct SpherePoint {
    Vec x;

    // Ambient dim 1 or 2 only occurs for restrictions to P when m = 2.
    explicit SpherePoint(Vec coords) : x(std::move(coords)) {
        if (x.size() < 1) throw Error(errc::bad_argument, "empty sphere point");
        double n = x.norm();
        if (!(n > 1e-8) || !std::isfinite(n))
            throw Error(errc::evaluation_failure, "sphere point far from unit sphere");
        if (std::abs(n - 1.0) > kMembershipTol) x /= n;
    }

    int dim() const { return static_cast<int>(x.size()) - 1; }

    // Distance to the polar sphere {x0=x1=0} measured in the (x0,x1)-plane.
    double polar_radius() const {
        if (x.size() < 3) throw Error(errc::bad_argument, "no polar sphere in ambient dim < 3");
        return std::hypot(x[0], x[1]);
    }
    bool on_polar() const { return polar_radius() <= kMembershipTol; }

    Vec tail() const { return x.tail(x.size() - 2); }
};

inline double sphere_distance(const SpherePoint& a, const SpherePoint& b) {
    double chord = (a.x - b.x).norm();
    return 2.0 * std::asin(std::min(1.0, chord / 2.0));
}

// Tubular chart around the polar sphere: x = (z, sqrt(1-|z|^2) p), |z| < 1,
// p a unit vector of R^{m-1}. z = 0 exactly on P.
struct ChartPoint {
    Eigen::Vector2d z;
    Vec p;
};

// S - P as S^1 x D^{m-1}: angle = (x0,x1)/|(x0,x1)|, u = (x2,...,xm).
// |u|^2 + |(x0,x1)|^2 = 1, so |u| < 1 off P and |u| -> 1 approaching P.
struct AnnularPoint {
    Eigen::Vector2d angle;
    Vec u;
};

// Point of the cyclic cover R x D^{m-1}; t counts turns around P.
struct LiftPoint {
    double t;
    Vec u;
};

inline SpherePoint chart_to_sphere(const ChartPoint& c) {
    double r2 = c.z.squaredNorm();
    if (r2 >= 1.0) throw Error(errc::chart_domain, "|z| >= 1");
    if (std::abs(c.p.norm() - 1.0) > 1e-9) throw Error(errc::chart_domain, "p not unit");
    Vec x(c.p.size() + 2);
    x[0] = c.z[0];
    x[1] = c.z[1];
    x.tail(c.p.size()) = std::sqrt(1.0 - r2) * c.p;
    return SpherePoint(std::move(x));
}

inline ChartPoint sphere_to_chart(const SpherePoint& s) {
    Vec tail = s.tail();
    double tn = tail.norm();
    if (tn <= kMembershipTol)
        throw Error(errc::on_prime_sphere, "point lies on the (x0,x1) circle");
    return ChartPoint{Eigen::Vector2d(s.x[0], s.x[1]), tail / tn};
}

inline AnnularPoint sphere_to_annular(const SpherePoint& s) {
    double r = s.polar_radius();
    if (r <= kMembershipTol) throw Error(errc::on_polar_sphere, "point lies on P");
    return AnnularPoint{Eigen::Vector2d(s.x[0] / r, s.x[1] / r), s.tail()};
}

inline SpherePoint annular_to_sphere(const AnnularPoint& a) {
    if (std::abs(a.angle.norm() - 1.0) > 1e-9) throw Error(errc::chart_domain, "angle not unit");
    double u2 = a.u.squaredNorm();
    if (u2 >= 1.0) throw Error(errc::chart_domain, "|u| >= 1");
    double r = std::sqrt(1.0 - u2);
    Vec x(a.u.size() + 2);
    x[0] = r * a.angle[0];
    x[1] = r * a.angle[1];
    x.tail(a.u.size()) = a.u;
    return SpherePoint(std::move(x));
}

// Deck transformation of the cover: one full turn, u untouched.
inline LiftPoint deck(const LiftPoint& q, long long k = 1) {
    return LiftPoint{q.t + static_cast<double>(k), q.u};
}

inline AnnularPoint project(const LiftPoint& q) {
    double a = kTwoPi * q.t;
    return AnnularPoint{Eigen::Vector2d(std::cos(a), std::sin(a)), q.u};
}

// Angle of an annular point in turns, in (-1/2, 1/2].
inline double angle_turns(const AnnularPoint& a) {
    return std::atan2(a.angle[1], a.angle[0]) / kTwoPi;
}

}  // namespace polar
