#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "polar/common.hpp"
#include "polar/geometry.hpp"
#include <Eigen/Dense>

namespace polar {

struct Box {
    Eigen::VectorXd lo, hi;
    int k() const { return static_cast<int>(lo.size()); }
};

using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct BoxDegreeOpts {
    double margin = 1e-4;        // reject boundaries carrying smaller field norms
    int depth_cap = 24;
    double max_spread = kPi / 3; // per-simplex direction variation bound
    std::uint64_t seed = 99;     // generic covering direction + retries
    int w_retries = 20;
};

struct BoxDegreeCertificate {
    Box box;
    long long degree = 0;
    int max_depth = 0;
    std::size_t simplices_accepted = 0;
    std::size_t field_evaluations = 0;
    double min_boundary_norm = 0.0;
    double margin = 0.0;
};

namespace boxdeg_detail {

struct Simplex {
    std::vector<Eigen::VectorXd> v;    // k vertices spanning a (k-1)-cell
    std::vector<Eigen::VectorXd> dir;  // cached unit field directions
    int depth = 0;
};

struct FaceAccum {
    long long contribution = 0;
    std::size_t accepted = 0;
    std::size_t evals = 0;
    int max_depth = 0;
    double min_norm = std::numeric_limits<double>::infinity();
    bool borderline = false;  // w landed too close to a simplex boundary
};

inline Eigen::VectorXd unit_or_throw(const VectorField& field, const Eigen::VectorXd& x,
                                     double margin, FaceAccum& acc) {
    Eigen::VectorXd g = field(x);
    ++acc.evals;
    double n = g.norm();
    acc.min_norm = std::min(acc.min_norm, n);
    if (!(n >= margin))
        throw Error(errc::boundary_zero_suspected,
                    "field norm " + std::to_string(n) + " below margin on the boundary");
    return g / n;
}

// Walks one root simplex; eps is the fixed orientation weight of the root
// (face orientation times permutation parity; edge bisection preserves it).
inline void process_root(const VectorField& field, Simplex root, long long eps,
                         const Eigen::VectorXd& w, const BoxDegreeOpts& opts, FaceAccum& acc) {
    const int k = static_cast<int>(root.v.size());
    const double cos_spread = std::cos(opts.max_spread);
    std::vector<Simplex> stack;
    stack.push_back(std::move(root));
    while (!stack.empty()) {
        Simplex s = std::move(stack.back());
        stack.pop_back();
        acc.max_depth = std::max(acc.max_depth, s.depth);
        // spread check over vertex directions plus the centroid direction
        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(k);
        for (const auto& v : s.v) centroid += v;
        centroid /= double(k);
        Eigen::VectorXd gc = unit_or_throw(field, centroid, opts.margin, acc);
        bool tight = true;
        for (int i = 0; i < k && tight; ++i) {
            if (s.dir[i].dot(gc) < cos_spread) tight = false;
            for (int j = i + 1; j < k && tight; ++j)
                if (s.dir[i].dot(s.dir[j]) < cos_spread) tight = false;
        }
        if (!tight) {
            if (s.depth >= opts.depth_cap)
                throw Error(errc::depth_cap_exceeded,
                            "direction variation persists at subdivision depth cap");
            int bi = 0, bj = 1;
            double best = -1.0;
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j) {
                    double len = (s.v[i] - s.v[j]).norm();
                    if (len > best + 1e-15) {
                        best = len;
                        bi = i;
                        bj = j;
                    }
                }
            Eigen::VectorXd mid = 0.5 * (s.v[bi] + s.v[bj]);
            Eigen::VectorXd gm = unit_or_throw(field, mid, opts.margin, acc);
            Simplex a = s, b = std::move(s);
            a.v[bj] = mid;
            a.dir[bj] = gm;
            a.depth++;
            b.v[bi] = mid;
            b.dir[bi] = gm;
            b.depth++;
            stack.push_back(std::move(a));
            stack.push_back(std::move(b));
            continue;
        }
        // covering test: is w inside cone(dir_0..dir_{k-1})?
        Eigen::MatrixXd G(k, k);
        for (int i = 0; i < k; ++i) G.col(i) = s.dir[i];
        double det = G.determinant();
        if (std::abs(det) < 1e-9) {
            // flat spherical simplex: generic w misses it unless w is nearly
            // inside its span
            Eigen::VectorXd res = w - G * (G.colPivHouseholderQr().solve(w));
            if (res.norm() < 1e-3) acc.borderline = true;
            continue;
        }
        Eigen::VectorXd lambda = G.partialPivLu().solve(w);
        double lmin = lambda.minCoeff();
        if (std::abs(lmin) < 1e-9) {
            acc.borderline = true;
            continue;
        }
        if (lmin > 0.0) {
            acc.contribution += eps * (det > 0 ? 1 : -1);
            ++acc.accepted;
        }
    }
}

inline void kuhn_roots(const Box& box, const VectorField& field, const BoxDegreeOpts& opts,
                       int axis, int side, FaceAccum& acc, const Eigen::VectorXd& w) {
    const int k = box.k();
    std::vector<int> free_axes;
    for (int a = 0; a < k; ++a)
        if (a != axis) free_axes.push_back(a);
    const int fd = k - 1;  // face dimension
    std::vector<int> perm(fd);
    for (int i = 0; i < fd; ++i) perm[i] = i;
    // (side==hi ? +1 : -1) * (-1)^axis orients the face outward
    long long face_eps = ((side == 1) ? 1 : -1) * ((axis % 2 == 0) ? 1 : -1);
    do {
        // permutation parity
        long long parity = 1;
        for (int i = 0; i < fd; ++i)
            for (int j = i + 1; j < fd; ++j)
                if (perm[i] > perm[j]) parity = -parity;
        Simplex s;
        Eigen::VectorXd v = box.lo;
        v[axis] = side ? box.hi[axis] : box.lo[axis];
        s.v.push_back(v);
        for (int i = 0; i < fd; ++i) {
            int a = free_axes[perm[i]];
            v[a] = box.hi[a];
            s.v.push_back(v);
        }
        s.dir.reserve(k);
        for (const auto& vert : s.v) s.dir.push_back(unit_or_throw(field, vert, opts.margin, acc));
        process_root(field, std::move(s), face_eps * parity, w, opts, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace boxdeg_detail

// Brouwer degree of the direction map of `field` over the boundary of `box`:
// Kuhn-triangulated faces, longest-edge bisection until each simplex's
// directions vary by < max_spread, then signed count of the simplices whose
// direction cone covers a generic unit vector w.
inline BoxDegreeCertificate brouwer_degree_box(const VectorField& field, const Box& box,
                                               double margin = 1e-4,
                                               const BoxDegreeOpts& opts_in = {}) {
    BoxDegreeOpts opts = opts_in;
    opts.margin = margin;
    const int k = box.k();
    if (k < 2 || k > 4) throw Error(errc::bad_argument, "box degree supports k = 2..4");
    for (int a = 0; a < k; ++a)
        if (!(box.lo[a] < box.hi[a])) throw Error(errc::bad_argument, "empty box");

    Rng rng(opts.seed, "box-degree-w");
    for (int attempt = 0; attempt < opts.w_retries; ++attempt) {
        Eigen::VectorXd w(k);
        double n = 0;
        do {
            for (int i = 0; i < k; ++i) w[i] = rng.normal();
            n = w.norm();
        } while (n < 1e-6);
        w /= n;
        boxdeg_detail::FaceAccum acc;
        for (int axis = 0; axis < k; ++axis)
            for (int side = 0; side < 2; ++side)
                boxdeg_detail::kuhn_roots(box, field, opts, axis, side, acc, w);
        if (acc.borderline) continue;  // w grazed a simplex boundary: redraw
        BoxDegreeCertificate cert;
        cert.box = box;
        cert.degree = acc.contribution;
        cert.max_depth = acc.max_depth;
        cert.simplices_accepted = acc.accepted;
        cert.field_evaluations = acc.evals;
        cert.min_boundary_norm = acc.min_norm;
        cert.margin = margin;
        return cert;
    }
    throw Error(errc::sampling_cap_exceeded,
                "no generic covering direction found (degenerate direction map?)");
}

// Deterministic probe lattice on the box boundary: an R2-style rotation
// sequence per face, identical across runs and job counts.
inline std::vector<Eigen::VectorXd> boundary_probes(const Box& box, int per_face) {
    static const double alphas[3][3] = {{0.6180339887498949, 0, 0},
                                        {0.7548776662466927, 0.5698402909980532, 0},
                                        {0.8191725133961645, 0.6710436067037893, 0.5497004779019703}};
    const int k = box.k();
    std::vector<Eigen::VectorXd> out;
    auto frac = [](double v) { return v - std::floor(v); };
    for (int axis = 0; axis < k; ++axis) {
        for (int side = 0; side < 2; ++side) {
            std::vector<int> free_axes;
            for (int a = 0; a < k; ++a)
                if (a != axis) free_axes.push_back(a);
            int fd = k - 1;
            for (int j = 0; j < per_face; ++j) {
                Eigen::VectorXd x(k);
                x[axis] = side ? box.hi[axis] : box.lo[axis];
                for (int i = 0; i < fd; ++i) {
                    double t = frac(0.5 + (j + 1) * alphas[fd - 1][i]);
                    int a = free_axes[i];
                    x[a] = box.lo[a] + t * (box.hi[a] - box.lo[a]);
                }
                out.push_back(std::move(x));
            }
        }
    }
    return out;
}

struct OpposingReport {
    bool ok = true;
    double min_separation = std::numeric_limits<double>::infinity();  // radians
    std::vector<Eigen::VectorXd> witnesses;  // probes where directions agree
};

// True iff the two fields never point in the same direction at the probes
// (angular separation > 1e-6 everywhere). Used to transfer nonvanishing
// degree from a reference field to the displacement field.
inline OpposingReport opposing_fields_check(const VectorField& v, const VectorField& w,
                                            const std::vector<Eigen::VectorXd>& probes) {
    OpposingReport rep;
    for (const auto& x : probes) {
        Eigen::VectorXd a = v(x), b = w(x);
        double na = a.norm(), nb = b.norm();
        if (!(na > 0.0) || !(nb > 0.0)) {
            rep.ok = false;
            rep.witnesses.push_back(x);
            continue;
        }
        double chord = (a / na - b / nb).norm();
        double angle = 2.0 * std::asin(std::min(1.0, chord / 2.0));
        rep.min_separation = std::min(rep.min_separation, angle);
        if (!(angle > 1e-6)) {
            rep.ok = false;
            rep.witnesses.push_back(x);
        }
    }
    return rep;
}

}  // namespace polar
