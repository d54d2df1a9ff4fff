#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "polar/degree.hpp"
#include "polar/lifts.hpp"
#include "polar/newton.hpp"

namespace polar {

// |d^n - 1| held exactly: the decimal text is always valid, the 64-bit value
// only when fits64. n stays small but d is an arbitrary long long.
struct ExactBound {
    bool fits64 = true;
    long long value = 0;
    std::string text = "0";
};

inline ExactBound power_bound(long long d, int n) {
    if (n < 1) throw Error(errc::bad_argument, "power_bound needs n >= 1");
    unsigned long long ad =
        d < 0 ? (unsigned long long)(-(d + 1)) + 1ull : (unsigned long long)d;
    std::vector<std::uint32_t> big{1};  // base 1e9, little endian
    const std::uint32_t kBase = 1000000000u;
    for (int i = 0; i < n; ++i) {
        unsigned __int128 carry = 0;
        for (auto& g : big) {
            unsigned __int128 v = (unsigned __int128)g * ad + carry;
            g = (std::uint32_t)(v % kBase);
            carry = v / kBase;
        }
        while (carry) {
            big.push_back((std::uint32_t)(carry % kBase));
            carry /= kBase;
        }
    }
    bool zero = true;
    for (auto g : big) zero = zero && g == 0;
    if (d < 0 && n % 2 == 1) {  // d^n < 0, so |d^n - 1| = |d|^n + 1
        unsigned __int128 carry = 1;
        for (auto& g : big) {
            unsigned __int128 v = (unsigned __int128)g + carry;
            g = (std::uint32_t)(v % kBase);
            carry = v / kBase;
            if (!carry) break;
        }
        if (carry) big.push_back((std::uint32_t)carry);
    } else if (zero) {
        big = {1};  // d = 0: |0 - 1|
    } else {
        for (auto& g : big) {  // |d|^n >= 1 here, borrow terminates
            if (g > 0) {
                g -= 1;
                break;
            }
            g = kBase - 1;
        }
    }
    while (big.size() > 1 && big.back() == 0) big.pop_back();
    ExactBound out;
    std::string t = std::to_string(big.back());
    for (int i = (int)big.size() - 2; i >= 0; --i) {
        std::string part = std::to_string(big[i]);
        t += std::string(9 - part.size(), '0') + part;
    }
    out.text = t;
    if (big.size() <= 3) {
        unsigned __int128 v = 0;
        for (int i = (int)big.size() - 1; i >= 0; --i) v = v * kBase + big[i];
        out.fits64 = v <= (unsigned __int128)0x7fffffffffffffffll;
        if (out.fits64) out.value = (long long)v;
    } else {
        out.fits64 = false;
    }
    return out;
}

struct CensusOpts {
    int jobs = 1;
    std::size_t seeds_per_unit = 20000;  // scaled by min(n, 4)
    double dedup_radius = 1e-7;
    std::uint64_t seed = 42;
    double delta = 0.2;                    // lift search box inset
    bool lift_crosscheck = true;           // gate below
    long long crosscheck_max_classes = 8;  // deck classes get expensive fast
};

struct CensusPoint {
    SpherePoint x;  // always in the ambient coordinates of S^m, even for P
    double residual = 0.0;
    bool cluster = false;
    double det_j = 0.0;  // det(Df^n - I) in chart coordinates
};

namespace census_detail {

inline std::vector<CensusPoint> newton_census(const SphereMap& g, int grid_dim,
                                              std::size_t n_seeds, const CensusOpts& opts,
                                              const std::string& stream) {
    Rng rng(opts.seed, stream);
    double phase = rng.uniform();
    NewtonOpts nopts;
    nopts.tol = 1e-12;
    const std::size_t chunk = 2048;
    std::size_t n_chunks = (n_seeds + chunk - 1) / chunk;
    std::vector<std::vector<SphereRoot>> found(n_chunks);
    auto eval = g.eval_fn;
    parallel_for(opts.jobs, n_chunks, [&](std::size_t ci) {
        std::size_t end = std::min(n_seeds, (ci + 1) * chunk);
        for (std::size_t i = ci * chunk; i < end; ++i) {
            auto r = newton_fixed_point(eval, grid_point(grid_dim, n_seeds, i, phase), nopts);
            if (r) found[ci].push_back(*r);
        }
    });
    std::vector<Vec> pts;
    std::vector<double> quality;
    std::vector<double> dets;
    for (const auto& batch : found)
        for (const auto& r : batch) {
            pts.push_back(r.x.x);
            quality.push_back(r.residual);
            dets.push_back(r.det_j);
        }
    DedupResult dd = dedup_points(pts, quality, opts.dedup_radius);
    std::vector<CensusPoint> out;
    for (std::size_t i = 0; i < dd.kept.size(); ++i) {
        std::size_t src = dd.kept[i];
        out.push_back({SpherePoint(pts[src]), quality[src], dd.cluster[i], dets[src]});
    }
    std::sort(out.begin(), out.end(), [](const CensusPoint& a, const CensusPoint& b) {
        for (int j = 0; j < a.x.x.size(); ++j)
            if (a.x.x[j] != b.x.x[j]) return a.x.x[j] < b.x.x[j];
        return false;
    });
    if (out.size() > 1000) {
        std::size_t degenerate = 0;
        for (const auto& p : out)
            if (std::abs(p.det_j) < 1e-8) ++degenerate;
        if (2 * degenerate > out.size())
            throw Error(errc::continuum_suspected,
                        std::to_string(out.size()) +
                            " Newton limits with singular displacement Jacobians");
    }
    return out;
}

}  // namespace census_detail

// Isolated fixed points of f^n, multi-start Newton over a low-discrepancy
// grid. Positions are exact to the Newton tolerance; completeness rests on
// seed density, which the growth report cross-checks against oracles and
// per-lift certificates where available.
inline std::vector<CensusPoint> fixed_points_on_sphere(const SphereMap& f, int n,
                                                       const CensusOpts& opts = {}) {
    if (n < 1) throw Error(errc::bad_argument, "census iterate must be >= 1");
    return census_detail::newton_census(iterate(f, n), f.m,
                                        opts.seeds_per_unit * std::min(n, 4), opts,
                                        "census-sphere-" + std::to_string(n));
}

// Fixed points of f^n restricted to P, embedded back into S^m coordinates.
// For m = 2 the restriction acts on two points and is checked directly.
inline std::vector<CensusPoint> fixed_points_on_polar(const SphereMap& f, int n,
                                                      const CensusOpts& opts = {}) {
    if (n < 1) throw Error(errc::bad_argument, "census iterate must be >= 1");
    if (f.m == 2) {
        std::vector<CensusPoint> out;
        for (double h : {1.0, -1.0}) {
            SpherePoint p = polar_point((Vec(1) << h).finished());
            SpherePoint y = p;
            for (int i = 0; i < n; ++i) y = f(y);
            double res = (y.x - p.x).norm();
            if (res < 1e-9) out.push_back({p, res, false, 1.0});
        }
        return out;
    }
    SphereMap r = iterate(restrict_to_polar(f), n);
    auto roots = census_detail::newton_census(r, r.m, opts.seeds_per_unit * std::min(n, 4),
                                              opts, "census-polar-" + std::to_string(n));
    for (auto& cp : roots) cp.x = polar_point(cp.x.x);
    return roots;
}

struct CensusRow {
    int n = 0;
    long long fix_count = -1;
    long long fix_polar_count = -1;
    ExactBound bound;
    bool continuum_flag = false;
    std::string flag_reason;  // nonempty marks a row with no claimed counts
    std::optional<double> growth;
    std::optional<long long> lift_certified;  // cross-check, when run
    bool crosscheck_ok = true;
    std::string crosscheck_note;  // why a gated cross-check failed or aborted

    bool flagged() const { return !flag_reason.empty(); }
    // never cached: recomputed from the stored integers on every call
    bool verdict() const {
        if (flagged() || fix_count < 0 || fix_polar_count < 0) return false;
        if (!bound.fits64) return false;
        return fix_count + fix_polar_count >= bound.value;
    }
};

struct GrowthReport {
    std::vector<CensusRow> rows;
    long long d = 0;
    long long deg_f = 0;
    long long deg_restriction = 0;
    // growth of the deepest clean row: a finite-n stand-in for the liminf
    std::optional<double> liminf_estimate;
};

inline GrowthReport growth_report(const SphereMap& f, int n_max, const CensusOpts& opts = {}) {
    if (n_max < 1 || n_max > 12)
        throw Error(errc::bad_argument, "growth report is desk scale: n_max in 1..12");
    if (!f.c1) throw Error(errc::not_c1, "census pipeline requires a C1 map");
    GrowthReport rep;
    rep.d = f.hooks.transversal ? *f.hooks.transversal : transversal_degree(f);
    rep.deg_f = f.hooks.degree ? *f.hooks.degree : degree_by_preimage(f);
    rep.deg_restriction =
        f.hooks.degree_polar ? *f.hooks.degree_polar : degree_restriction(f);
    rep.rows.resize(n_max);
    long long d = rep.d;
    parallel_for(opts.jobs, n_max, [&](std::size_t idx) {
        int n = (int)idx + 1;
        CensusOpts inner = opts;
        inner.jobs = 1;  // rows are the unit of parallel work
        CensusRow row;
        row.n = n;
        row.bound = power_bound(d, n);
        try {
            auto pts = fixed_points_on_sphere(f, n, inner);
            auto pol = fixed_points_on_polar(f, n, inner);
            row.fix_count = (long long)pts.size();
            row.fix_polar_count = (long long)pol.size();
            if (!pts.empty()) row.growth = std::log((double)pts.size()) / n;
            bool gate = inner.lift_crosscheck && std::llabs(d) >= 2 && row.bound.fits64 &&
                        row.bound.value <= inner.crosscheck_max_classes;
            // A failed auxiliary check must not unflag-proof the row: the
            // counts above stand on their own, so the catch here records the
            // problem without discarding them.
            if (gate) try {
                    LiftSearchOpts lopts;
                    lopts.jobs = 1;
                    FamilyReport fam = search_family(iterate(f, n), inner.delta, lopts);
                    long long certified = 0;
                    bool inject = true;
                    for (const auto& lift : fam.lifts)
                        for (const auto& rec : lift.records) {
                            ++certified;
                            double best = 2.0;
                            for (const auto& cp : pts)
                                best = std::min(best, (cp.x.x - rec.downstairs.x).norm());
                            if (best >= 1e-7) inject = false;
                        }
                    long long off_polar = 0;
                    for (const auto& cp : pts)
                        if (cp.x.polar_radius() > 1e-6) ++off_polar;
                    row.lift_certified = certified;
                    row.crosscheck_ok = inject && off_polar >= certified;
                    if (!row.crosscheck_ok)
                        row.crosscheck_note = inject ? "fewer off-polar census points than certified lift points"
                                                     : "certified lift point missing from census";
                } catch (const Error& e) {
                    row.crosscheck_ok = false;
                    row.crosscheck_note = e.what();
                }
        } catch (const Error& e) {
            row.continuum_flag = e.code() == errc::continuum_suspected;
            row.flag_reason = e.what();
        }
        rep.rows[idx] = row;
    });
    for (const auto& row : rep.rows)
        if (!row.flagged() && row.growth) rep.liminf_estimate = row.growth;
    return rep;
}

struct TheoremSummary {
    std::vector<int> failing_rows;  // n values violating the count inequality
    int rows_checked = 0;
    int rows_flagged = 0;
    std::optional<double> liminf_estimate;
    double liminf_target = 0.0;  // log|d| - 0.05, the finite-n proxy margin
    bool liminf_ok = false;
    bool crosschecks_ok = true;
    bool corollary_applicable = false;  // deg f = d * deg f|P observed
    bool corollary_integer_ok = true;   // max(|d|, |deg f|P|)^2 >= |deg f|
    bool corollary_growth_ok = true;    // estimate >= (1/2) log|deg f| - 0.05

    bool pass() const {
        return failing_rows.empty() && rows_checked > 0 && liminf_ok && crosschecks_ok &&
               (!corollary_applicable || (corollary_integer_ok && corollary_growth_ok));
    }
};

// Count inequality per row, growth-rate proxy against log|d|, and the
// square-root consequence for the degree triple. Flagged rows are excluded:
// a continuum satisfies the count bound vacuously but cannot be counted.
inline TheoremSummary verify_theorem1(const GrowthReport& rep) {
    TheoremSummary s;
    for (const auto& row : rep.rows) {
        if (row.flagged()) {
            ++s.rows_flagged;
            continue;
        }
        ++s.rows_checked;
        if (!row.verdict()) s.failing_rows.push_back(row.n);
        if (!row.crosscheck_ok) s.crosschecks_ok = false;
    }
    s.liminf_estimate = rep.liminf_estimate;
    long long ad = std::llabs(rep.d);
    s.liminf_target = ad >= 1 ? std::log((double)ad) - 0.05
                              : -std::numeric_limits<double>::infinity();
    s.liminf_ok = s.liminf_estimate && *s.liminf_estimate >= s.liminf_target;
    s.corollary_applicable = rep.deg_f == rep.d * rep.deg_restriction;
    if (s.corollary_applicable) {
        long long mx = std::max(ad, std::llabs(rep.deg_restriction));
        s.corollary_integer_ok = mx * mx >= std::llabs(rep.deg_f);
        if (ad >= std::llabs(rep.deg_restriction))
            s.corollary_growth_ok =
                s.liminf_estimate &&
                *s.liminf_estimate >= 0.5 * std::log((double)std::llabs(rep.deg_f)) - 0.05;
    }
    return s;
}

}  // namespace polar
