#pragma once

// Test-side oracles, independent of the library's numerical pipeline.
// Counts come from enumerating roots of unity / radius equations directly;
// degree oracles integrate densely instead of adaptively.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "polar/geometry.hpp"

namespace oracle {

inline long long ipow_ll(long long b, int n) {
    long long r = 1;
    for (int i = 0; i < n; ++i) r *= b;
    return r;
}

// Fixed points of the degree-d power map on S^2, counted by hand:
// the circle roots solve z^{d^n - 1} = 1 on the equator copy of S^1, and the
// pole pair is fixed exactly when d^n > 0.
inline long long fix_count_power(long long d, int n) {
    long long dn = ipow_ll(d, n);
    return std::llabs(dn - 1) + (dn > 0 ? 2 : 0);
}

// The equatorial fixed points themselves (sigma = 0 circle).
inline std::vector<polar::SpherePoint> equator_fixed_points_power(long long d, int n) {
    long long dn = ipow_ll(d, n);
    long long k = std::llabs(dn - 1);
    std::vector<polar::SpherePoint> out;
    for (long long j = 0; j < k; ++j) {
        double th = polar::kTwoPi * double(j) / double(k);
        polar::Vec x(3);
        x << std::cos(th), std::sin(th), 0.0;
        out.emplace_back(std::move(x));
    }
    return out;
}

// join_power fixed-point census: interior torus lattice at the unique radius
// solving rho^{|a^n|-1} = omega^{|b^n|-1}, plus the two extreme circles.
inline long long fix_count_join(long long a, long long b, int n) {
    long long an = ipow_ll(a, n), bn = ipow_ll(b, n);
    long long A = std::llabs(an - 1), B = std::llabs(bn - 1);
    return A * B + A + B;
}

// Interior fixed points of join_power(a,b)^n, constructed explicitly.
inline std::vector<polar::SpherePoint> interior_fixed_points_join(long long a, long long b,
                                                                  int n) {
    long long an = ipow_ll(a, n), bn = ipow_ll(b, n);
    long long A = std::llabs(an - 1), B = std::llabs(bn - 1);
    // The radial map is monotone increasing with one interior fixed radius,
    // so every iterate fixes that same radius; only the angle lattice grows.
    double al = double(std::llabs(a)), be = double(std::llabs(b));
    // solve rho^(al-1) = (1-rho^2)^((be-1)/2) by bisection
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double lhs = std::pow(mid, al - 1.0);
        double rhs = std::pow(1.0 - mid * mid, (be - 1.0) / 2.0);
        (lhs < rhs ? lo : hi) = mid;
    }
    double rho = 0.5 * (lo + hi), omega = std::sqrt(1.0 - rho * rho);
    std::vector<polar::SpherePoint> out;
    for (long long i = 0; i < A; ++i) {
        for (long long j = 0; j < B; ++j) {
            double th = polar::kTwoPi * double(i) / double(A);
            double ph = polar::kTwoPi * double(j) / double(B);
            polar::Vec x(4);
            x << rho * std::cos(th), rho * std::sin(th), omega * std::cos(ph),
                omega * std::sin(ph);
            out.emplace_back(std::move(x));
        }
    }
    return out;
}

// Winding number of a closed plane curve around the origin, integrated over
// a dense uniform polyline. Caller guarantees the curve misses the origin.
inline long long winding_number_dense(const std::function<Eigen::Vector2d(double)>& curve,
                                      int samples = 200000) {
    double total = 0.0;
    Eigen::Vector2d prev = curve(0.0);
    for (int i = 1; i <= samples; ++i) {
        Eigen::Vector2d cur = curve(double(i) / samples);
        double cross = prev[0] * cur[1] - prev[1] * cur[0];
        double dot = prev.dot(cur);
        total += std::atan2(cross, dot);
        prev = cur;
    }
    return std::llround(total / polar::kTwoPi);
}

// Brouwer degree of a vector field on the boundary of a planar box: dense
// polyline winding of v along the counterclockwise boundary circuit.
inline long long plane_box_field_degree(const std::function<Eigen::Vector2d(Eigen::Vector2d)>& v,
                                        Eigen::Vector2d lo, Eigen::Vector2d hi,
                                        int per_edge = 100000) {
    auto curve = [&](double s) {
        double t = s * 4.0;
        Eigen::Vector2d p;
        if (t < 1.0)
            p = {lo[0] + t * (hi[0] - lo[0]), lo[1]};
        else if (t < 2.0)
            p = {hi[0], lo[1] + (t - 1.0) * (hi[1] - lo[1])};
        else if (t < 3.0)
            p = {hi[0] - (t - 2.0) * (hi[0] - lo[0]), hi[1]};
        else
            p = {lo[0], hi[1] - (t - 3.0) * (hi[1] - lo[1])};
        return v(p);
    };
    return winding_number_dense(curve, 4 * per_edge);
}

// Degree of a field on a 3-box boundary: total signed solid angle of the
// direction map over a dense triangulation of the six faces
// (van Oosterom-Strackee formula per triangle).
inline long long space_box_field_degree(
    const std::function<Eigen::Vector3d(const Eigen::Vector3d&)>& v, Eigen::Vector3d lo,
    Eigen::Vector3d hi, int grid = 120) {
    auto solid = [](Eigen::Vector3d g1, Eigen::Vector3d g2, Eigen::Vector3d g3) {
        g1.normalize();
        g2.normalize();
        g3.normalize();
        double num = g1.dot(g2.cross(g3));
        double den = 1.0 + g1.dot(g2) + g2.dot(g3) + g3.dot(g1);
        return 2.0 * std::atan2(num, den);
    };
    double total = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        for (int side = 0; side < 2; ++side) {
            int u = (axis + 1) % 3, w = (axis + 2) % 3;
            double fixed = side ? hi[axis] : lo[axis];
            // outward orientation: (u,w) order for hi faces, swapped for lo
            for (int i = 0; i < grid; ++i) {
                for (int j = 0; j < grid; ++j) {
                    auto corner = [&](int di, int dj) {
                        Eigen::Vector3d p;
                        p[axis] = fixed;
                        p[u] = lo[u] + (hi[u] - lo[u]) * double(i + di) / grid;
                        p[w] = lo[w] + (hi[w] - lo[w]) * double(j + dj) / grid;
                        return v(p);
                    };
                    Eigen::Vector3d g00 = corner(0, 0), g10 = corner(1, 0), g01 = corner(0, 1),
                                    g11 = corner(1, 1);
                    double s = solid(g00, g10, g11) + solid(g00, g11, g01);
                    total += side ? s : -s;
                }
            }
        }
    }
    return std::llround(total / (4.0 * polar::kPi));
}

}  // namespace oracle
