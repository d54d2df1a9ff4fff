#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "polar/boxdegree.hpp"
#include "polar/degree.hpp"
#include "polar/maps.hpp"
#include "polar/newton.hpp"

namespace polar {

inline double pr(const LiftPoint& q) { return q.t; }

namespace lift_detail {

// x - round(x): representative of x mod 1 in [-1/2, 1/2)
inline double wrap_half(double x) { return x - std::round(x); }

struct AnnularImage {
    double turns;  // principal angle of the image, in turns
    Vec u;
};

inline AnnularImage image_at(const SphereMap& f, double t, const Vec& u) {
    double a = kTwoPi * t;
    AnnularPoint q{Eigen::Vector2d(std::cos(a), std::sin(a)), u};
    SpherePoint y = f(annular_to_sphere(q));
    AnnularPoint b = sphere_to_annular(y);
    return AnnularImage{angle_turns(b), b.u};
}

// Continuous unwrap of the image angle along the segment from (t0,u0) to
// (t1,u1); turns0 is the unwrapped value at the start. Adaptive step halving
// keeps each observed angle gap below a quarter turn.
inline double unwrap_leg(const SphereMap& f, double t0, const Vec& u0, double t1, const Vec& u1,
                         double turns0, int initial_segments) {
    double s = 0.0;
    double step = 1.0 / std::max(1, initial_segments);
    const double base_step = step;
    double w = turns0;
    std::size_t evals = 0;
    while (s < 1.0) {
        double s1 = std::min(1.0, s + step);
        AnnularImage img = image_at(f, t0 + s1 * (t1 - t0), u0 + s1 * (u1 - u0));
        double delta = wrap_half(img.turns - w);
        if (std::abs(delta) >= 0.2) {
            step *= 0.5;
            if (step < 1e-13)
                throw Error(errc::tracking_loss, "image angle jumps across an unresolvable gap");
            continue;
        }
        w += delta;
        s = s1;
        step = std::min(base_step, step * 1.5);
        if (++evals > (1u << 20))
            throw Error(errc::tracking_loss, "angle unwrapping exceeded the evaluation cap");
    }
    return w;
}

}  // namespace lift_detail

// A lift of f to the cyclic cover R x D^{m-1} of S - P. Evaluation unwraps
// the image angle along the canonical two-leg path base -> (0,u) -> (t,u);
// the cover is simply connected, so the value is path independent and the
// evaluator stays pure (deterministic under any evaluation order).
struct Lift {
    SphereMap f;
    long long d = 0;  // transversal degree
    long long k = 0;  // deck offset
    double base_turns = 0.0;  // unwrapped image angle at (t=0, u=0)

    LiftPoint operator()(const LiftPoint& q) const {
        Vec u0 = Vec::Zero(q.u.size());
        double w = base_turns;
        if (q.u.norm() > 0.0)
            w = lift_detail::unwrap_leg(f, 0.0, u0, 0.0, q.u, w, 32);
        if (q.t != 0.0) {
            int segs = static_cast<int>(8 + 8 * std::ceil(std::abs(double(d) * q.t)));
            w = lift_detail::unwrap_leg(f, 0.0, q.u, q.t, q.u, w, segs);
        }
        lift_detail::AnnularImage img = lift_detail::image_at(f, q.t, q.u);
        // w already matches img.turns mod 1; reuse its integer part
        return LiftPoint{w + lift_detail::wrap_half(img.turns - w) + static_cast<double>(k),
                         img.u};
    }
};

inline Lift make_lift(const SphereMap& f, long long k, const DegreeOpts& opts = {}) {
    InvarianceReport inv = validate_invariance(f, 200);
    if (!inv.pass())
        throw Error(errc::invariance_violated,
                    "polar sphere not completely invariant: " + inv.violations.front().kind);
    Lift g;
    g.f = f;
    g.d = f.hooks.transversal ? *f.hooks.transversal : transversal_degree(f, opts);
    g.k = k;
    g.base_turns = lift_detail::image_at(f, 0.0, Vec::Zero(f.m - 1)).turns;
    return g;
}

// The deck-index family {F, tau F, ..., tau^{|d-1|-1} F}.
inline std::vector<Lift> lift_family(const SphereMap& f, const DegreeOpts& opts = {}) {
    Lift base = make_lift(f, 0, opts);
    if (base.d == 0 || base.d == 1)
        throw Error(errc::degenerate_transversal_degree,
                    "deck family needs transversal degree outside {0, 1}");
    long long size = std::llabs(base.d - 1);
    std::vector<Lift> out;
    out.reserve(size);
    for (long long k = 0; k < size; ++k) {
        Lift g = base;
        g.k = k;
        out.push_back(std::move(g));
    }
    return out;
}

struct SearchBox {
    double M = 0.0;    // half-length in t
    double delta = 0.1;  // lateral clearance: u ranges over D^{m-1}(1-delta)
};

namespace lift_detail {

// end-face sample points: deterministic low-discrepancy set in D^{m-1}(1-delta)
inline std::vector<Vec> end_face_samples(int udim, double radius, int count) {
    std::vector<Vec> out;
    out.reserve(count);
    for (int j = 1; j <= count; ++j) {
        Vec u(udim);
        if (udim == 1) {
            double s = j * 0.6180339887498949;
            u[0] = radius * (2.0 * (s - std::floor(s)) - 1.0);
        } else {
            double s1 = j * 0.7548776662466927, s2 = j * 0.5698402909980532;
            double r = radius * std::sqrt(s1 - std::floor(s1));
            double a = kTwoPi * (s2 - std::floor(s2));
            u[0] = r * std::cos(a);
            u[1] = r * std::sin(a);
            for (int i = 2; i < udim; ++i) u[i] = 0.0;
        }
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace lift_detail

// Smallest M in {2,4,...,1024} whose end faces satisfy the displacement
// inequalities for the sign of d, with slack 0.5 beyond the unit threshold,
// at 10^3 sampled points.
inline SearchBox choose_search_box(const Lift& G, double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw Error(errc::bad_argument, "delta outside (0, 0.5)");
    if (G.d == 0 || G.d == 1)
        throw Error(errc::degenerate_transversal_degree, "no search box for d in {0, 1}");
    auto samples = lift_detail::end_face_samples(G.f.m - 1, 1.0 - delta, 500);
    for (double M = 2.0; M <= 1024.0; M *= 2.0) {
        bool ok = true;
        for (const Vec& u : samples) {
            double left = pr(G(LiftPoint{-M, u}));
            double right = pr(G(LiftPoint{M, u}));
            if (G.d > 1)
                ok = left <= -M - 1.5 && right >= M + 1.5;
            else
                ok = left >= -M + 1.5 && right <= M - 1.5;
            if (!ok) break;
        }
        if (ok) return SearchBox{M, delta};
    }
    throw Error(errc::box_cap_exceeded, "end-face inequalities still fail at M = 1024");
}

struct FixedPointRecord {
    LiftPoint location;
    long long k = 0;
    double residual = 0.0;
    bool cluster = false;
    SpherePoint downstairs;
};

struct LiftSearchReport {
    long long k = 0;
    SearchBox box;
    BoxDegreeCertificate certificate;
    std::vector<FixedPointRecord> records;
    // nonzero boundary degree with an empty root list: either a Newton basin
    // miss or a near-degenerate cluster; reported, never silently dropped
    bool certificate_consistent = true;
    OpposingReport opposing;  // displacement field vs the sign-matched reference field
    bool free_in_box() const { return certificate.degree == 0 && records.empty(); }
};

struct LiftSearchOpts {
    int jobs = 1;
    int newton_keep = 64;
    double margin = 1e-4;
    double dedup_radius = 1e-7;
    double residual_tol = 1e-10;
    int probe_per_face = 150;
};

namespace lift_detail {

// Coordinate box used for the degree certificate. For m = 3 the cylinder
// cross-section D^2(1-delta) is replaced by its inscribed square, so the
// certificate covers a subset of B_M; roots outside it are still reported.
inline Box coordinate_box(const SearchBox& sb, int udim) {
    double L = (udim == 1) ? (1.0 - sb.delta) : (1.0 - sb.delta) / std::sqrt(2.0);
    Box b;
    b.lo = Vec::Constant(udim + 1, -L);
    b.hi = Vec::Constant(udim + 1, L);
    b.lo[0] = -sb.M;
    b.hi[0] = sb.M;
    return b;
}

inline VectorField displacement_field(const Lift& G) {
    return [&G](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        LiftPoint q{x[0], x.tail(x.size() - 1)};
        LiftPoint y = G(q);
        Eigen::VectorXd v(x.size());
        v[0] = y.t - q.t;
        v.tail(x.size() - 1) = y.u - q.u;
        return v;
    };
}

// Reference boundary field of the fixed-point argument: inward normal for
// d > 1; for d <= -1 inward on lateral faces, outward on end faces, with a
// blend band of width 0.05*M on the lateral faces that never acquires a
// positive t-component near the left face nor a negative one near the right.
inline VectorField reference_field(const Box& box, long long d) {
    double M = box.hi[0];
    double band = 0.05 * M;
    return [box, d, M, band](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        int k = static_cast<int>(x.size());
        int axis = -1, side = 0;
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < k; ++a) {
            if (std::abs(x[a] - box.lo[a]) < best) {
                best = std::abs(x[a] - box.lo[a]);
                axis = a;
                side = 0;
            }
            if (std::abs(x[a] - box.hi[a]) < best) {
                best = std::abs(x[a] - box.hi[a]);
                axis = a;
                side = 1;
            }
        }
        Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
        if (d > 1) {
            w[axis] = side ? -1.0 : 1.0;  // inward normal
            return w;
        }
        if (axis == 0) {
            w[0] = side ? 1.0 : -1.0;  // outward on end faces
            return w;
        }
        w[axis] = side ? -1.0 : 1.0;  // inward on lateral faces
        double to_left = x[0] + M, to_right = M - x[0];
        if (to_left < band) {
            double lam = to_left / band;
            w = lam * w;
            w[0] += -(1.0 - lam);
        } else if (to_right < band) {
            double lam = to_right / band;
            w = lam * w;
            w[0] += (1.0 - lam);
        }
        w.normalize();
        return w;
    };
}

}  // namespace lift_detail

// Degree certificate over the search box plus an independent Newton
// multi-start; a nonzero certificate demands a nonempty root list.
inline LiftSearchReport find_fixed_points(const Lift& G, const SearchBox& box_in,
                                          const LiftSearchOpts& opts = {}) {
    const int udim = G.f.m - 1;
    const int kdim = udim + 1;
    SearchBox sb = box_in;
    VectorField v = lift_detail::displacement_field(G);

    Box box = lift_detail::coordinate_box(sb, udim);
    // boundary pre-check; one box adjustment if a probe sits on a zero
    for (int attempt = 0;; ++attempt) {
        double worst = std::numeric_limits<double>::infinity();
        for (const auto& x : boundary_probes(box, 100)) worst = std::min(worst, v(x).norm());
        if (worst >= opts.margin) break;
        if (attempt >= 1)
            throw Error(errc::boundary_zero_suspected,
                        "displacement field vanishes on the search boundary");
        sb.M += 1.0;
        sb.delta = std::min(0.45, sb.delta * 1.5);
        box = lift_detail::coordinate_box(sb, udim);
    }

    LiftSearchReport rep;
    rep.k = G.k;
    rep.box = sb;
    rep.certificate = brouwer_degree_box(v, box, opts.margin);
    rep.opposing = opposing_fields_check(v, lift_detail::reference_field(box, G.d),
                                         boundary_probes(box, opts.probe_per_face));

    // multi-start Newton: scan a lattice over the box, keep the most
    // displaced-least candidates, polish, then dedup
    int per_axis = (kdim == 2) ? 64 : 16;
    long long total = 1;
    for (int a = 0; a < kdim; ++a) total *= per_axis;
    std::vector<double> score(total);
    parallel_for(opts.jobs, static_cast<std::size_t>(total), [&](std::size_t idx) {
        Eigen::VectorXd x(kdim);
        long long rem = static_cast<long long>(idx);
        for (int a = 0; a < kdim; ++a) {
            int cell = rem % per_axis;
            rem /= per_axis;
            x[a] = box.lo[a] + (cell + 0.5) / per_axis * (box.hi[a] - box.lo[a]);
        }
        score[idx] = v(x).norm();
    });
    std::vector<long long> order(total);
    for (long long i = 0; i < total; ++i) order[i] = i;
    std::partial_sort(order.begin(), order.begin() + std::min<long long>(opts.newton_keep, total),
                      order.end(), [&](long long a, long long b) {
                          return score[a] < score[b] || (score[a] == score[b] && a < b);
                      });
    order.resize(std::min<long long>(opts.newton_keep, total));

    const double ulimit = 1.0 - sb.delta + 1e-9;
    std::vector<std::optional<std::pair<Eigen::VectorXd, double>>> roots(order.size());
    parallel_for(opts.jobs, order.size(), [&](std::size_t i) {
        Eigen::VectorXd x(kdim);
        long long rem = order[i];
        for (int a = 0; a < kdim; ++a) {
            int cell = rem % per_axis;
            rem /= per_axis;
            x[a] = box.lo[a] + (cell + 0.5) / per_axis * (box.hi[a] - box.lo[a]);
        }
        try {
            for (int iter = 0; iter < 60; ++iter) {
                Eigen::VectorXd r = v(x);
                if (r.norm() < 1e-13) break;
                Eigen::MatrixXd J(kdim, kdim);
                double h = 1e-7;
                for (int c = 0; c < kdim; ++c) {
                    Eigen::VectorXd xp = x;
                    xp[c] += h;
                    if (xp.tail(udim).norm() >= 1.0) return;
                    J.col(c) = (v(xp) - r) / h;
                }
                Eigen::VectorXd step = J.partialPivLu().solve(-r);
                double cap = 0.5;
                if (step.norm() > cap) step *= cap / step.norm();
                x += step;
                if (x.tail(udim).norm() >= 0.999 || std::abs(x[0]) > sb.M + 2.0) return;
            }
            double res = v(x).norm();
            if (res < opts.residual_tol && std::abs(x[0]) <= sb.M + 1e-9 &&
                x.tail(udim).norm() <= ulimit)
                roots[i] = std::make_pair(x, res);
        } catch (const Error&) {
            // starts that wander off the chart are abandoned
        }
    });

    std::vector<Vec> pts;
    std::vector<double> quality;
    for (const auto& r : roots)
        if (r) {
            pts.push_back(r->first);
            quality.push_back(r->second);
        }
    DedupResult dd = dedup_points(pts, quality, opts.dedup_radius);
    for (std::size_t i = 0; i < dd.kept.size(); ++i) {
        const Vec& x = pts[dd.kept[i]];
        LiftPoint loc{x[0], x.tail(udim)};
        rep.records.push_back(FixedPointRecord{loc, G.k, v(x).norm(), dd.cluster[i],
                                               annular_to_sphere(project(loc))});
    }
    std::sort(rep.records.begin(), rep.records.end(),
              [](const FixedPointRecord& a, const FixedPointRecord& b) {
                  if (a.location.t != b.location.t) return a.location.t < b.location.t;
                  return std::lexicographical_compare(
                      a.location.u.data(), a.location.u.data() + a.location.u.size(),
                      b.location.u.data(), b.location.u.data() + b.location.u.size());
              });
    rep.certificate_consistent = !(rep.certificate.degree != 0 && rep.records.empty());
    return rep;
}

struct NielsenBreach {
    long long k1 = 0, k2 = 0;
    double distance = 0.0;
    Vec at;
};

struct NielsenReport {
    bool ok = true;
    double min_separation = std::numeric_limits<double>::infinity();
    std::vector<NielsenBreach> breaches;
};

// Projected fixed-point sets of distinct deck classes must be disjoint
// downstairs; any pair closer than 1e-6 is a breach of the class separation.
inline NielsenReport nielsen_check(const std::vector<FixedPointRecord>& records, long long d) {
    if (d == 1) throw Error(errc::bad_argument, "no deck classes for d = 1");
    long long classes = std::llabs(d - 1);
    NielsenReport rep;
    for (std::size_t i = 0; i < records.size(); ++i)
        for (std::size_t j = i + 1; j < records.size(); ++j) {
            long long ki = ((records[i].k % classes) + classes) % classes;
            long long kj = ((records[j].k % classes) + classes) % classes;
            if (ki == kj) continue;
            double dist = sphere_distance(records[i].downstairs, records[j].downstairs);
            rep.min_separation = std::min(rep.min_separation, dist);
            if (!(dist > 1e-6)) {
                rep.ok = false;
                rep.breaches.push_back({records[i].k, records[j].k, dist, records[i].downstairs.x});
            }
        }
    return rep;
}

struct FamilyReport {
    long long d = 0;
    std::vector<LiftSearchReport> lifts;
    int free_in_box = 0;       // zero certificate and empty root list
    int certified_nonfree = 0;  // nonzero certificate or a verified root
    NielsenReport nielsen;
};

// Searches every deck class; per-lift searches are independent and the box
// choice is per lift, so the loop parallelizes over classes untouched.
inline FamilyReport search_family(const SphereMap& f, double delta,
                                  const LiftSearchOpts& opts = {}) {
    std::vector<Lift> fam = lift_family(f);
    FamilyReport out;
    out.d = fam.front().d;
    out.lifts.resize(fam.size());
    parallel_for(opts.jobs, fam.size(), [&](std::size_t i) {
        LiftSearchOpts inner = opts;
        inner.jobs = 1;  // nested parallelism stays off; classes are the unit of work
        out.lifts[i] = find_fixed_points(fam[i], choose_search_box(fam[i], delta), inner);
    });
    std::vector<FixedPointRecord> all;
    for (const auto& rep : out.lifts) {
        if (rep.free_in_box())
            ++out.free_in_box;
        else if (rep.certificate.degree != 0 || !rep.records.empty())
            ++out.certified_nonfree;
        for (const auto& r : rep.records) all.push_back(r);
    }
    out.nielsen = nielsen_check(all, out.d);
    return out;
}

// Lifts with a zero boundary certificate and no root found in B_M. The bound
// of the fixed-point-free-lift theorem says this is at most 2 #Fix(f|P);
// absence outside B_M is not certified, so "free" here always means
// "no fixed point found in B_M".
inline int count_fixed_point_free_lifts(const SphereMap& f, double delta,
                                        const LiftSearchOpts& opts = {}) {
    return search_family(f, delta, opts).free_in_box;
}

}  // namespace polar
