#pragma once

#include <array>
#include <map>
#include <optional>

#include "polar/maps.hpp"

namespace polar {

// Low-discrepancy grids used as Newton seed banks. Uniformity only affects
// basin coverage, not correctness; every accepted root is re-verified.
// Indexed access keeps parallel scans deterministic.
inline SpherePoint grid_point(int dim, std::size_t n, std::size_t i, double phase) {
    constexpr double kGolden = 0.6180339887498948482;   // 1/phi
    constexpr double kPlastic = 0.7548776662466927600;  // 1/rho
    auto frac = [](double v) { return v - std::floor(v); };
    if (dim == 1) {
        double th = kTwoPi * frac((double(i) + 0.5) / double(n) + phase);
        Vec x(2);
        x << std::cos(th), std::sin(th);
        return SpherePoint(std::move(x));
    }
    if (dim == 2) {
        double z = 1.0 - 2.0 * (double(i) + 0.5) / double(n);
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double th = kTwoPi * frac(double(i) * kGolden + phase);
        Vec x(3);
        x << r * std::cos(th), r * std::sin(th), z;
        return SpherePoint(std::move(x));
    }
    if (dim == 3) {
        // Hopf-coordinate lattice: eta has the area-correct arccos marginal,
        // the two circle angles advance by golden/plastic rotations.
        double u = (double(i) + 0.5) / double(n);
        double eta = std::acos(1.0 - 2.0 * u);
        double c = std::cos(eta / 2.0), s = std::sin(eta / 2.0);
        double x1 = kTwoPi * frac(double(i) * kGolden + phase);
        double x2 = kTwoPi * frac(double(i) * kPlastic + 0.5 * phase);
        Vec x(4);
        x << c * std::cos(x1), c * std::sin(x1), s * std::cos(x2), s * std::sin(x2);
        return SpherePoint(std::move(x));
    }
    throw Error(errc::bad_argument, "grid_point supports dim 1..3");
}

template <class F>
void sphere_grid(int dim, std::size_t n, double phase, F&& emit) {
    for (std::size_t i = 0; i < n; ++i) emit(grid_point(dim, n, i, phase));
}

struct NewtonOpts {
    double tol = 1e-12;     // accept when the ambient defect drops below this
    int max_iter = 60;
    double fd_step = 1e-7;
    double max_step = 0.5;  // trust-region clamp in chart coordinates
};

struct SphereRoot {
    SpherePoint x;
    double residual;
    double det_j;  // determinant of the reduced defect Jacobian at the root
    int iters;
};

namespace detail {

// One frame-consistent Newton pass for G(v) = R^T (raw(normalize(x + B v)))
// where R is the measurement frame, B the step frame, both fixed per
// iteration. raw() returns the ambient defect; it vanishes at a solution.
template <class Raw>
std::optional<SphereRoot> newton_chart(const Raw& raw,
                                       const std::function<Eigen::MatrixXd(const SpherePoint&)>&
                                           measure_frame,
                                       SpherePoint x, const NewtonOpts& opts) {
    int k = 0;
    Eigen::MatrixXd J;
    for (int it = 0; it < opts.max_iter; ++it) {
        Eigen::MatrixXd B, R;
        Eigen::VectorXd raw0;
        try {
            B = tangent_basis(x);
            R = measure_frame(x);
            raw0 = raw(x);
        } catch (const Error&) {
            return std::nullopt;
        }
        k = static_cast<int>(B.cols());
        Eigen::VectorXd r = R.transpose() * raw0;
        J.resize(k, k);
        bool have_j = true;
        try {
            for (int j = 0; j < k; ++j) {
                SpherePoint xp(x.x + opts.fd_step * B.col(j));
                SpherePoint xm(x.x - opts.fd_step * B.col(j));
                J.col(j) = R.transpose() * (raw(xp) - raw(xm)) / (2.0 * opts.fd_step);
            }
        } catch (const Error&) {
            have_j = false;
        }
        if (raw0.norm() < opts.tol) {
            if (!have_j) return std::nullopt;
            return SphereRoot{x, raw0.norm(), J.determinant(), it};
        }
        if (!have_j) return std::nullopt;
        Eigen::VectorXd s = J.fullPivLu().solve(-r);
        if (!s.allFinite()) return std::nullopt;
        double sn = s.norm();
        if (sn > opts.max_step) s *= opts.max_step / sn;
        x = SpherePoint(x.x + B * s);
    }
    return std::nullopt;
}

}  // namespace detail

// Roots of f(x) = x. Measured in the moving tangent frame; det_j approximates
// det(Df - I) in chart coordinates at the root.
inline std::optional<SphereRoot> newton_fixed_point(
    const std::function<SpherePoint(const SpherePoint&)>& f, const SpherePoint& seed,
    const NewtonOpts& opts = {}) {
    auto raw = [&f](const SpherePoint& x) -> Eigen::VectorXd { return f(x).x - x.x; };
    auto frame = [](const SpherePoint& x) { return tangent_basis(x); };
    return detail::newton_chart(raw, frame, seed, opts);
}

// Roots of f(x) = y for fixed y, measured in the frame at y: at a regular
// root, sign(det_j) is the orientation sign of f there (both frames are
// positively oriented).
inline std::optional<SphereRoot> newton_preimage(
    const std::function<SpherePoint(const SpherePoint&)>& f, const SpherePoint& y,
    const SpherePoint& seed, const NewtonOpts& opts = {}) {
    Eigen::MatrixXd By = tangent_basis(y);
    auto raw = [&f, &y](const SpherePoint& x) -> Eigen::VectorXd { return f(x).x - y.x; };
    auto frame = [&By](const SpherePoint&) { return By; };
    return detail::newton_chart(raw, frame, seed, opts);
}

// Order-independent dedup: candidates are sorted canonically, then greedily
// accepted unless an accepted representative sits within `radius`; a cell
// hash keeps it near-linear. `cluster[i]` marks representatives that absorbed
// a strictly distinct candidate, where "distinct" scales with the radius so
// solver convergence noise well inside it never reads as multiplicity.
struct DedupResult {
    std::vector<std::size_t> kept;  // indices into the input vector
    std::vector<bool> cluster;      // parallel to kept
};

inline DedupResult dedup_points(const std::vector<Vec>& pts, const std::vector<double>& quality,
                                double radius) {
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (quality[a] != quality[b]) return quality[a] < quality[b];
        for (int j = 0; j < pts[a].size(); ++j)
            if (pts[a][j] != pts[b][j]) return pts[a][j] < pts[b][j];
        return a < b;
    });
    double cell = std::max(radius, 1e-300);
    using Key = std::array<long long, 4>;
    std::map<Key, std::vector<std::size_t>> grid;  // positions in out.kept
    auto key_of = [&](const Vec& v) {
        Key k{0, 0, 0, 0};
        for (int j = 0; j < v.size() && j < 4; ++j) k[j] = (long long)std::floor(v[j] / cell);
        return k;
    };
    DedupResult out;
    for (std::size_t oi : order) {
        const Vec& v = pts[oi];
        bool merged = false;
        int dims = std::min<int>(4, (int)v.size());
        Key base = key_of(v);
        int combos = 1;
        for (int j = 0; j < dims; ++j) combos *= 3;
        for (int c = 0; c < combos && !merged; ++c) {
            Key k = base;
            int cc = c;
            for (int j = 0; j < dims; ++j) {
                k[j] += (cc % 3) - 1;
                cc /= 3;
            }
            auto it = grid.find(k);
            if (it == grid.end()) continue;
            for (std::size_t kept_pos : it->second) {
                double dist = (pts[out.kept[kept_pos]] - v).norm();
                if (dist < radius) {
                    if (dist > std::max(1e-12, 0.01 * radius)) out.cluster[kept_pos] = true;
                    merged = true;
                    break;
                }
            }
        }
        if (!merged) {
            out.kept.push_back(oi);
            out.cluster.push_back(false);
            grid[base].push_back(out.kept.size() - 1);
        }
    }
    return out;
}

}  // namespace polar
