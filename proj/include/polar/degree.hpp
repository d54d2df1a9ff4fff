#pragma once

#include <limits>

#include "polar/newton.hpp"

namespace polar {

struct DegreeOpts {
    std::uint64_t seed = 2718;
    int jobs = 1;
    int target_retries = 10;
    int max_rounds = 3;          // grid refinement doublings per target
    double regularity = 1e-6;    // |det| threshold for "y is regular"
    double dedup_radius = 1e-7;
    std::size_t grid_n = 0;      // 0 = per-dimension default
    std::size_t keep = 4096;     // seeds polished per round
};

inline std::size_t default_grid_n(int dim) {
    switch (dim) {
        case 1: return 2500;           // 50^2
        case 2: return 125000;         // 50^3
        default: return 640000;        // dense enough for S^3 basins
    }
}

struct PreimageDegree {
    long long degree = 0;
    SpherePoint regular_value;
    int confidence = 0;  // count of independently agreeing targets
    std::vector<SpherePoint> preimages;
};

namespace detail {

struct TargetOutcome {
    bool regular = true;
    bool stabilized = false;
    long long degree = 0;
    std::vector<SpherePoint> roots;
};

inline TargetOutcome preimage_count_one_target(const SphereMap& f, const SpherePoint& y,
                                               const DegreeOpts& opts, double phase) {
    TargetOutcome out;
    int dim = f.m;
    std::size_t base_n = opts.grid_n ? opts.grid_n : default_grid_n(dim);
    NewtonOpts nopts;
    std::vector<Vec> prev_roots;
    for (int round = 0; round < opts.max_rounds; ++round) {
        std::size_t n = base_n << round;
        std::vector<double> dist(n);
        parallel_for(opts.jobs, n, [&](std::size_t i) {
            SpherePoint x = grid_point(dim, n, i, phase);
            try {
                dist[i] = (f(x).x - y.x).norm();
            } catch (const Error&) {
                dist[i] = std::numeric_limits<double>::infinity();
            }
        });
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        std::size_t keep = std::min(opts.keep, n);
        std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              return dist[a] != dist[b] ? dist[a] < dist[b] : a < b;
                          });
        std::vector<std::optional<SphereRoot>> roots(keep);
        parallel_for(opts.jobs, keep, [&](std::size_t i) {
            roots[i] = newton_preimage(f.eval_fn, y, grid_point(dim, n, idx[i], phase), nopts);
        });
        std::vector<Vec> pts;
        std::vector<double> quality;
        std::vector<double> dets;
        for (std::size_t i = 0; i < keep; ++i) {
            if (!roots[i]) continue;
            pts.push_back(roots[i]->x.x);
            quality.push_back(roots[i]->residual);
            dets.push_back(roots[i]->det_j);
        }
        DedupResult dd = dedup_points(pts, quality, opts.dedup_radius);
        std::vector<Vec> cur;
        std::vector<double> cur_dets;
        for (std::size_t k : dd.kept) {
            cur.push_back(pts[k]);
            cur_dets.push_back(dets[k]);
        }
        for (double dj : cur_dets) {
            if (std::abs(dj) <= opts.regularity) {
                out.regular = false;
                return out;
            }
        }
        bool same = round > 0 && cur.size() == prev_roots.size();
        if (same) {
            for (const Vec& v : cur) {
                double best = std::numeric_limits<double>::infinity();
                for (const Vec& w : prev_roots) best = std::min(best, (v - w).norm());
                if (best > 1e-6) {
                    same = false;
                    break;
                }
            }
        }
        if (same) {
            out.stabilized = true;
            out.degree = 0;
            for (double dj : cur_dets) out.degree += (dj > 0 ? 1 : -1);
            for (const Vec& v : cur) out.roots.emplace_back(v);
            return out;
        }
        prev_roots = std::move(cur);
    }
    return out;  // not stabilized
}

}  // namespace detail

// Signed preimage count over random regular targets; three independent
// targets must agree.
inline PreimageDegree degree_by_preimage_detailed(const SphereMap& f,
                                                  const DegreeOpts& opts = {}) {
    if (!f.c1) throw Error(errc::not_c1, "degree needs a C1 map");
    if (f.m < 1) throw Error(errc::bad_argument, "degree_by_preimage needs m >= 1");
    Rng rng(opts.seed, "degree-targets:" + f.spec);
    std::vector<long long> agreed;
    std::optional<PreimageDegree> result;
    int attempts = 0;
    while ((int)agreed.size() < 3) {
        if (attempts++ >= opts.target_retries)
            throw Error(errc::regular_value_not_found,
                        "no stable regular target after " + std::to_string(opts.target_retries) +
                            " tries");
        Vec y(f.m + 1);
        for (int i = 0; i <= f.m; ++i) y[i] = rng.normal();
        if (y.norm() < 1e-3) continue;
        SpherePoint target(y);
        double phase = rng.uniform();
        detail::TargetOutcome oc = detail::preimage_count_one_target(f, target, opts, phase);
        if (!oc.regular) continue;  // y likely critical: new target
        if (!oc.stabilized)
            throw Error(errc::preimage_search_incomplete,
                        "preimage set failed to stabilize under grid refinement");
        if (!agreed.empty() && oc.degree != agreed.back())
            throw Error(errc::preimage_search_incomplete,
                        "independent targets disagree on the degree");
        agreed.push_back(oc.degree);
        if (!result) {
            result = PreimageDegree{oc.degree, target, 0, oc.roots};
        }
    }
    result->confidence = (int)agreed.size();
    return *result;
}

inline long long degree_by_preimage(const SphereMap& f, const DegreeOpts& opts = {}) {
    return degree_by_preimage_detailed(f, opts).degree;
}

// Degree of f|P. For m = 2 the 0-sphere convention [P] = [north] - [south]
// gives identity -> 1, swap -> -1, non-bijective -> 0.
inline long long degree_restriction(const SphereMap& f, const DegreeOpts& opts = {}) {
    SphereMap r = restrict_to_polar(f);
    if (f.m == 2) {
        Vec plus(1), minus(1);
        plus << 1.0;
        minus << -1.0;
        double ip = r(SpherePoint(plus)).x[0];
        double im = r(SpherePoint(minus)).x[0];
        bool plus_fixed = ip > 0, minus_fixed = im < 0;
        if (plus_fixed && minus_fixed) return 1;
        if (!plus_fixed && !minus_fixed) return -1;
        return 0;
    }
    return degree_by_preimage(r, opts);
}

// One loop probe for the transversal degree.
struct WindingSample {
    double radius;
    Vec p0_dir;
    std::vector<double> params;            // theta values, sorted
    std::vector<Eigen::Vector2d> images;   // S^1-valued images of the loop
    std::vector<double> unwrapped;         // continuous angle along the loop
    long long turns;
};

struct TransversalResult {
    long long d;
    std::vector<WindingSample> samples;
};

namespace detail {

inline double wrap_pi(double a) {
    while (a > kPi) a -= kTwoPi;
    while (a <= -kPi) a += kTwoPi;
    return a;
}

// Adaptive unwrap of theta -> angle(f(gamma(theta))) over [0, 2pi]; gaps are
// bisected until below pi/2. The eval budget is the spec'd 2^20 cap.
inline WindingSample wind_loop(const SphereMap& f, const Vec& p0_dir, double radius) {
    WindingSample ws;
    ws.radius = radius;
    ws.p0_dir = p0_dir;
    auto raw_angle = [&](double th) -> std::pair<double, Eigen::Vector2d> {
        ChartPoint c{Eigen::Vector2d(radius * std::cos(th), radius * std::sin(th)), p0_dir};
        SpherePoint img = f(chart_to_sphere(c));
        // Iterates contract toward P like r^{d^n}, far below the chart's
        // membership tolerance, but the direction stays exact to the ulp;
        // read it from raw coordinates and only reject a literal zero.
        double r = img.polar_radius();
        if (!(r > 0.0))
            throw Error(errc::sampling_cap_exceeded, "loop image touches P numerically");
        Eigen::Vector2d dir(img.x[0] / r, img.x[1] / r);
        return {std::atan2(img.x[1], img.x[0]), dir};
    };
    std::size_t evals = 0;
    const std::size_t cap = std::size_t(1) << 20;
    auto guarded = [&](double th) {
        if (++evals > cap)
            throw Error(errc::sampling_cap_exceeded, "winding refinement exceeded 2^20 samples");
        return raw_angle(th);
    };

    struct Node {
        double th;
        double raw;
        Eigen::Vector2d img;
    };
    std::vector<Node> nodes;
    const int n0 = 64;
    for (int i = 0; i <= n0; ++i) {
        double th = kTwoPi * double(i) / n0;
        auto [ang, img] = guarded(th);
        nodes.push_back({th, ang, img});
    }
    // refine gaps >= pi/2 by repeated midpoint insertion
    bool changed = true;
    while (changed) {
        changed = false;
        std::vector<Node> next;
        next.reserve(nodes.size() * 2);
        for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
            next.push_back(nodes[i]);
            double gap = std::abs(wrap_pi(nodes[i + 1].raw - nodes[i].raw));
            if (gap >= kPi / 2.0) {
                double mid = 0.5 * (nodes[i].th + nodes[i + 1].th);
                auto [ang, img] = guarded(mid);
                next.push_back({mid, ang, img});
                changed = true;
            }
        }
        next.push_back(nodes.back());
        nodes = std::move(next);
    }
    double acc = nodes.front().raw;
    ws.params.push_back(nodes.front().th);
    ws.images.push_back(nodes.front().img);
    ws.unwrapped.push_back(acc);
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        acc += wrap_pi(nodes[i].raw - nodes[i - 1].raw);
        ws.params.push_back(nodes[i].th);
        ws.images.push_back(nodes[i].img);
        ws.unwrapped.push_back(acc);
    }
    double total = (ws.unwrapped.back() - ws.unwrapped.front()) / kTwoPi;
    ws.turns = std::llround(total);
    if (std::abs(total - double(ws.turns)) > 0.01)
        throw Error(errc::sampling_cap_exceeded, "winding total is not an integer");
    return ws;
}

}  // namespace detail

// Turns of f along a small loop around P, probed with three independent
// (base point, radius) pairs that must agree. Any radius < 1 carries the same
// generator of the annulus, so when a deep iterate contracts the probe loop
// below floating-point resolution of "off P" the radius escalates instead of
// failing.
inline TransversalResult transversal_degree_detailed(const SphereMap& f,
                                                     const DegreeOpts& opts = {}) {
    Rng rng(opts.seed, "transversal:" + f.spec);
    const double radii[3] = {0.05, 0.03, 0.08};
    TransversalResult out{0, {}};
    for (int probe = 0; probe < 3; ++probe) {
        Vec p0 = random_polar_tail(rng, f.m);
        double r = radii[probe];
        std::optional<WindingSample> ws;
        while (true) {
            try {
                ws = detail::wind_loop(f, p0, r);
                break;
            } catch (const Error& e) {
                if (e.code() != errc::sampling_cap_exceeded || r > 0.9) throw;
                r = std::min(0.98, r * 2.5);
            }
        }
        out.samples.push_back(std::move(*ws));
        if (probe > 0 && out.samples[probe].turns != out.samples[0].turns)
            throw Error(errc::sampling_cap_exceeded, "winding disagrees across loop probes");
    }
    out.d = out.samples[0].turns;
    return out;
}

inline long long transversal_degree(const SphereMap& f, const DegreeOpts& opts = {}) {
    return transversal_degree_detailed(f, opts).d;
}

// The paper's degree decomposition deg f = d * deg(f|P), assembled from the
// three independent computations.
struct DegreeReport {
    long long deg_f = 0;
    long long deg_restriction = 0;
    long long transversal_d = 0;
    bool decomposition_ok = false;
    SpherePoint regular_value_used;
    int confidence = 0;
};

inline DegreeReport check_decomposition(const SphereMap& f, const DegreeOpts& opts = {}) {
    PreimageDegree pd = degree_by_preimage_detailed(f, opts);
    long long dr = degree_restriction(f, opts);
    long long td = transversal_degree(f, opts);
    DegreeReport rep{pd.degree, dr, td, pd.degree == td * dr, pd.regular_value, pd.confidence};
    return rep;
}

}  // namespace polar
