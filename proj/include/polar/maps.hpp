#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>

#include "polar/geometry.hpp"

namespace polar {

// d^n with overflow detection; hooks degrade to "no oracle" instead of wrapping.
inline std::optional<long long> checked_pow(long long base, int n) {
    __int128 acc = 1;
    for (int i = 0; i < n; ++i) {
        acc *= base;
        if (acc > (__int128)4e18 || acc < -(__int128)4e18) return std::nullopt;
    }
    return (long long)acc;
}

inline std::optional<long long> checked_abs_minus_one(std::optional<long long> v) {
    if (!v) return std::nullopt;
    return std::llabs(*v - 1);
}

// Closed-form answers a family can vouch for. Acceptance tests compare the
// numerical pipeline against these; absent hooks mean "no exact form known".
struct ExactHooks {
    std::optional<long long> degree;
    std::optional<long long> degree_polar;
    std::optional<long long> transversal;
    std::function<std::optional<long long>(int)> fix_count;        // #Fix(f^n)
    std::function<std::optional<long long>(int)> fix_polar_count;  // #Fix(f^n|P)
};

// Self-map of S^m carrying f(P) subset P and f(S-P) subset S-P.
// Immutable after construction; evaluation is pure and reentrant.
struct SphereMap {
    int m = 2;
    bool c1 = true;
    std::string spec;
    std::function<SpherePoint(const SpherePoint&)> eval_fn;
    ExactHooks hooks;

    SpherePoint operator()(const SpherePoint& x) const {
        if (x.dim() != m) throw Error(errc::bad_argument, "point dimension != map dimension");
        return eval_fn(x);
    }
};

inline SpherePoint eval(const SphereMap& f, const SpherePoint& x) { return f(x); }

// --- model families -------------------------------------------------------

// Conjugate of z -> z^d on S^2, P = the two poles. Stereographic coordinates
// satisfy |zeta| = e^sigma with h = tanh(sigma), so the map is exactly
// sigma -> d*sigma, phi -> d*phi; evaluated this way it never overflows.
inline SphereMap power_s2(long long d) {
    if (d == 0) throw Error(errc::bad_argument, "power_s2 requires d != 0");
    SphereMap f;
    f.m = 2;
    f.spec = "family=power_s2 d=" + std::to_string(d);
    f.eval_fn = [d](const SpherePoint& x) {
        double h = x.x[2];
        double rho = std::hypot(x.x[0], x.x[1]);
        Vec out(3);
        if (rho == 0.0) {
            double hs = (h >= 0 ? 1.0 : -1.0) * (d > 0 ? 1.0 : -1.0);
            out << 0.0, 0.0, hs;
            return SpherePoint(std::move(out));
        }
        // atanh(h) via exp(sigma) = (1+h)/rho. Unlike atanh this stays exact
        // when h has rounded to +-1.0 but rho is still a meaningful tail
        // coordinate, so near-polar orbits of iterates never collapse onto P.
        double sigma = (h >= 0.0) ? std::log((1.0 + h) / rho)
                                  : -std::log((1.0 - h) / rho);
        double ds = double(d) * sigma;
        if (std::abs(ds) > 300.0) {  // cosh would overflow; limit is the pole
            out << 0.0, 0.0, (ds > 0 ? 1.0 : -1.0);
            return SpherePoint(std::move(out));
        }
        double phi = std::atan2(x.x[1], x.x[0]);
        double rho2 = 1.0 / std::cosh(ds);
        out << rho2 * std::cos(double(d) * phi), rho2 * std::sin(double(d) * phi), std::tanh(ds);
        return SpherePoint(std::move(out));
    };
    long long s = d > 0 ? 1 : -1;
    f.hooks.transversal = d;
    f.hooks.degree_polar = s;
    f.hooks.degree = d * s;  // = |d|
    if (std::llabs(d) >= 2) {
        f.hooks.fix_count = [d](int n) -> std::optional<long long> {
            // |d|^n + 1: the roots of unity downstairs plus the pole pair,
            // which is fixed for d > 0 and contributes a 2-cycle (n even) or
            // extra circle roots (n odd) for d < 0; the totals coincide.
            auto p = checked_pow(std::llabs(d), n);
            if (!p) return std::nullopt;
            return *p + 1;
        };
        f.hooks.fix_polar_count = [d](int n) -> std::optional<long long> {
            if (d > 0) return 2;
            return (n % 2 == 0) ? 2 : 0;
        };
    } else if (d == -1) {
        f.hooks.fix_count = [](int n) -> std::optional<long long> {
            return (n % 2) ? std::optional<long long>(2) : std::nullopt;
        };
        f.hooks.fix_polar_count = [](int n) -> std::optional<long long> {
            return (n % 2) ? 0 : 2;
        };
    } else {  // d == 1, the identity: fixed sets are continua
        f.hooks.fix_polar_count = [](int) -> std::optional<long long> { return 2; };
    }
    return f;
}

// Integer complex power with the conjugate convention for negative exponents:
// z^k means conj(z)^{|k|} when k < 0. This keeps the map polynomial (hence
// defined across z = 0) while the angle still multiplies by the signed k.
inline std::complex<double> ipow(std::complex<double> z, long long k) {
    if (k < 0) {
        z = std::conj(z);
        k = -k;
    }
    std::complex<double> acc(1.0, 0.0);
    while (k > 0) {
        if (k & 1) acc *= z;
        z *= z;
        k >>= 1;
    }
    return acc;
}

// (z,w) -> (z^a, w^b)/norm on S^3 in C^2, P = {z=0}.
inline SphereMap join_power(long long a, long long b) {
    if (a == 0 || b == 0) throw Error(errc::bad_argument, "join_power requires a,b != 0");
    if (std::llabs(a) > 64 || std::llabs(b) > 64)
        throw Error(errc::bad_argument, "join_power exponents limited to |.| <= 64");
    SphereMap f;
    f.m = 3;
    f.spec = "family=join_power a=" + std::to_string(a) + " b=" + std::to_string(b);
    f.eval_fn = [a, b](const SpherePoint& x) {
        std::complex<double> z(x.x[0], x.x[1]), w(x.x[2], x.x[3]);
        std::complex<double> za = ipow(z, a), wb = ipow(w, b);
        Vec out(4);
        out << za.real(), za.imag(), wb.real(), wb.imag();
        double n = out.norm();
        if (!(n > 1e-200)) throw Error(errc::evaluation_failure, "join_power image collapsed");
        return SpherePoint(out / n);
    };
    f.hooks.transversal = a;
    f.hooks.degree_polar = b;
    f.hooks.degree = a * b;
    if (std::llabs(b) >= 2) {
        f.hooks.fix_polar_count = [b](int n) { return checked_abs_minus_one(checked_pow(b, n)); };
    } else if (b == -1) {
        f.hooks.fix_polar_count = [](int n) -> std::optional<long long> {
            return (n % 2) ? std::optional<long long>(2) : std::nullopt;
        };
    }
    if (std::llabs(a) >= 2 && std::llabs(b) >= 2) {
        // Unique interior fixed radius (rho^{|a|-1} = omega^{|b|-1} has one
        // root), an |a^n-1| x |b^n-1| angle lattice there, plus the circles
        // {w=0} and {z=0}.
        f.hooks.fix_count = [a, b](int n) -> std::optional<long long> {
            auto an = checked_abs_minus_one(checked_pow(a, n));
            auto bn = checked_abs_minus_one(checked_pow(b, n));
            if (!an || !bn) return std::nullopt;
            __int128 total = (__int128)*an * *bn + *an + *bn;
            if (total > (__int128)4e18) return std::nullopt;
            return (long long)total;
        };
    }
    return f;
}

inline SphereMap identity_map(int m) {
    if (m < 2) throw Error(errc::bad_argument, "identity requires m >= 2");
    SphereMap f;
    f.m = m;
    f.spec = "family=identity m=" + std::to_string(m);
    f.eval_fn = [](const SpherePoint& x) { return x; };
    f.hooks.degree = 1;
    f.hooks.degree_polar = 1;
    f.hooks.transversal = 1;
    if (m == 2) f.hooks.fix_polar_count = [](int) -> std::optional<long long> { return 2; };
    return f;
}

inline SphereMap antipodal_map(int m) {
    if (m < 2) throw Error(errc::bad_argument, "antipodal requires m >= 2");
    SphereMap f;
    f.m = m;
    f.spec = "family=antipodal m=" + std::to_string(m);
    f.eval_fn = [](const SpherePoint& x) { return SpherePoint(-x.x); };
    f.hooks.degree = (m % 2 == 0) ? -1 : 1;
    f.hooks.degree_polar = (m % 2 == 0) ? -1 : 1;  // antipode of S^{m-2}
    f.hooks.transversal = 1;
    f.hooks.fix_count = [](int n) -> std::optional<long long> {
        return (n % 2) ? std::optional<long long>(0) : std::nullopt;
    };
    if (m == 2) {
        f.hooks.fix_polar_count = [](int n) -> std::optional<long long> { return (n % 2) ? 0 : 2; };
    } else {
        f.hooks.fix_polar_count = [](int n) -> std::optional<long long> {
            return (n % 2) ? std::optional<long long>(0) : std::nullopt;
        };
    }
    return f;
}

// Local bench for the fixed-point classifier: around each pole of S^2 the
// normal return map is g(z) = (Re z^2, lambda*Im z + Im z^2), whose Jacobian
// at 0 is diag(0, lambda). Defined only on a polar cap; evaluating outside
// raises EvaluationFailure. The transversal hook documents the global class
// (|d| > 1) this local model stands in for.
inline SphereMap normal_model(double lambda) {
    if (!(lambda >= 1.0)) throw Error(errc::bad_argument, "normal_model requires lambda >= 1");
    double radius = std::min(0.45, 0.7 / lambda);
    SphereMap f;
    f.m = 2;
    {
        std::ostringstream os;
        os << "family=normal_model lambda=" << lambda;
        f.spec = os.str();
    }
    f.eval_fn = [lambda, radius](const SpherePoint& x) {
        Eigen::Vector2d z(x.x[0], x.x[1]);
        if (z.norm() > radius)
            throw Error(errc::evaluation_failure, "normal_model: outside modeled cap");
        Eigen::Vector2d g(z[0] * z[0] - z[1] * z[1], lambda * z[1] + 2.0 * z[0] * z[1]);
        Vec p(1);
        p << (x.x[2] >= 0 ? 1.0 : -1.0);
        return chart_to_sphere(ChartPoint{g, p});
    };
    f.hooks.transversal = 2;
    f.hooks.fix_polar_count = [](int) -> std::optional<long long> { return 2; };
    return f;
}

// Post-composition with a bump supported in the annulus 0.1 < |z| < 0.9, so
// the perturbed map coincides with f near P and P' and f^{-1}(P) = P stays
// exact. Homotopic to f through such maps: the degree triple is unchanged.
inline SphereMap perturb(const SphereMap& base, double amplitude, std::uint64_t seed) {
    if (!(amplitude >= 0.0 && amplitude < 0.1))
        throw Error(errc::bad_argument, "perturb requires 0 <= amplitude < 0.1");
    Rng rng(seed, "perturb");
    double th_a = rng.uniform(0.0, kTwoPi);
    double th_b = rng.uniform(0.0, kTwoPi);
    double th_c = rng.uniform(0.0, kTwoPi);
    double c_rot = rng.uniform(-1.0, 1.0);
    double c_rad = rng.uniform(-1.0, 1.0);

    SphereMap f;
    f.m = base.m;
    f.c1 = base.c1;
    {
        std::ostringstream os;
        os << "family=perturbed base={" << base.spec << "} amplitude=" << amplitude
           << " seed=" << seed;
        f.spec = os.str();
    }
    auto base_eval = base.eval_fn;
    int m = base.m;
    f.eval_fn = [=](const SpherePoint& x) {
        SpherePoint y = base_eval(x);
        if (amplitude == 0.0) return y;
        double r = y.polar_radius();
        if (r <= 0.1 || r >= 0.9) return y;
        ChartPoint c = sphere_to_chart(y);
        double beta = std::sin(kPi * (r - 0.1) / 0.8);
        beta *= beta;
        double phi = std::atan2(c.z[1], c.z[0]);
        double rot = amplitude * beta * (0.6 * c_rot + 0.4 * std::sin(phi + th_a));
        double scale = 1.0 + amplitude * beta * 0.3 * c_rad * std::cos(phi + th_b);
        Eigen::Rotation2D<double> R(rot);
        ChartPoint out{scale * (R * c.z), c.p};
        if (m >= 3) {
            double psi = amplitude * beta * 0.3 * std::sin(phi + th_c);
            if (m == 3) {
                Eigen::Rotation2D<double> Rp(psi);
                out.p = Rp * Eigen::Vector2d(c.p[0], c.p[1]);
            }
            // m > 3 would need a tangent frame on S^{m-2}; only the z-part
            // is perturbed there.
        }
        return chart_to_sphere(out);
    };
    f.hooks.degree = base.hooks.degree;
    f.hooks.degree_polar = base.hooks.degree_polar;
    f.hooks.transversal = base.hooks.transversal;
    f.hooks.fix_polar_count = base.hooks.fix_polar_count;  // f|P untouched
    return f;
}

inline SphereMap iterate(const SphereMap& f, int n) {
    if (n < 1) throw Error(errc::bad_argument, "iterate requires n >= 1");
    if (n == 1) return f;
    SphereMap g;
    g.m = f.m;
    g.c1 = f.c1;
    g.spec = "iterate(" + f.spec + ", n=" + std::to_string(n) + ")";
    auto base_eval = f.eval_fn;
    g.eval_fn = [base_eval, n](const SpherePoint& x) {
        SpherePoint y = x;
        for (int i = 0; i < n; ++i) y = base_eval(y);
        return y;
    };
    if (f.hooks.degree) g.hooks.degree = checked_pow(*f.hooks.degree, n);
    if (f.hooks.degree_polar) g.hooks.degree_polar = checked_pow(*f.hooks.degree_polar, n);
    if (f.hooks.transversal) g.hooks.transversal = checked_pow(*f.hooks.transversal, n);
    if (f.hooks.fix_count) {
        auto h = f.hooks.fix_count;
        g.hooks.fix_count = [h, n](int k) { return h(n * k); };
    }
    if (f.hooks.fix_polar_count) {
        auto h = f.hooks.fix_polar_count;
        g.hooks.fix_polar_count = [h, n](int k) { return h(n * k); };
    }
    return g;
}

// --- invariance and restriction --------------------------------------------

struct InvarianceViolation {
    Vec point;
    double polar_distance;
    std::string kind;  // "escapes_polar" | "collapses_to_polar" | "evaluation"
};

struct InvarianceReport {
    int samples_on_polar = 0;
    int samples_near_polar = 0;
    std::vector<InvarianceViolation> violations;
    bool pass() const { return violations.empty(); }
};

inline Vec random_polar_tail(Rng& rng, int m) {
    Vec q(m - 1);
    if (m == 2) {
        q[0] = rng.uniform() < 0.5 ? 1.0 : -1.0;
        return q;
    }
    double n = 0;
    do {
        for (int i = 0; i < q.size(); ++i) q[i] = rng.normal();
        n = q.norm();
    } while (n < 1e-6);
    return q / n;
}

inline SpherePoint polar_point(const Vec& tail_dir) {
    Vec x(tail_dir.size() + 2);
    x[0] = 0.0;
    x[1] = 0.0;
    x.tail(tail_dir.size()) = tail_dir;
    return SpherePoint(std::move(x));
}

inline InvarianceReport validate_invariance(const SphereMap& f, int n_samples,
                                            std::uint64_t seed = 12345) {
    InvarianceReport rep;
    Rng rng(seed, "validate_invariance");
    for (int i = 0; i < n_samples; ++i) {
        SpherePoint p = polar_point(random_polar_tail(rng, f.m));
        ++rep.samples_on_polar;
        try {
            SpherePoint y = f(p);
            if (y.polar_radius() >= 1e-9)
                rep.violations.push_back({p.x, y.polar_radius(), "escapes_polar"});
        } catch (const Error& e) {
            rep.violations.push_back({p.x, 0.0, std::string("evaluation: ") + e.what()});
        }
    }
    for (int i = 0; i < n_samples; ++i) {
        double rho = std::pow(10.0, rng.uniform(-6.0, -2.0));
        double th = rng.uniform(0.0, kTwoPi);
        Vec q = random_polar_tail(rng, f.m);
        ChartPoint c{Eigen::Vector2d(rho * std::cos(th), rho * std::sin(th)), q};
        SpherePoint x = chart_to_sphere(c);
        ++rep.samples_near_polar;
        try {
            SpherePoint y = f(x);
            // strict positivity: legitimate maps contract toward P as fast as
            // dist^d, which lands far below any fixed tolerance
            if (!(y.polar_radius() > 0.0))
                rep.violations.push_back({x.x, y.polar_radius(), "collapses_to_polar"});
        } catch (const Error& e) {
            rep.violations.push_back({x.x, 0.0, std::string("evaluation: ") + e.what()});
        }
    }
    return rep;
}

// f|P as a self-map of S^{m-2} (ambient R^{m-1}). For m = 2 the result acts
// on the 0-sphere {-1,+1} embedded as 1-vectors.
inline SphereMap restrict_to_polar(const SphereMap& f, bool check = true) {
    if (check) {
        InvarianceReport rep = validate_invariance(f, 50);
        if (!rep.pass())
            throw Error(errc::invariance_violated,
                        "restriction undefined: " + rep.violations.front().kind);
    }
    SphereMap g;
    g.m = f.m - 2;
    g.c1 = f.c1;
    g.spec = "restrict(" + f.spec + ")";
    auto base_eval = f.eval_fn;
    int m = f.m;
    g.eval_fn = [base_eval, m](const SpherePoint& q) {
        Vec x(m + 1);
        x[0] = 0.0;
        x[1] = 0.0;
        x.tail(m - 1) = q.x;
        SpherePoint y = base_eval(SpherePoint(std::move(x)));
        if (y.polar_radius() >= 1e-9)
            throw Error(errc::invariance_violated, "image left the polar sphere");
        return SpherePoint(y.tail());
    };
    g.hooks.degree = f.hooks.degree_polar;
    g.hooks.fix_count = f.hooks.fix_polar_count;
    return g;
}

// --- normal component and Jacobians ----------------------------------------

// The return map D^2(s) -> D^2 over a base point of P: u |-> z-part of the
// image of the chart point (u, p).
struct NormalComponentMap {
    SpherePoint p;
    Vec p_dir;  // unit tail of p
    double s;
    bool c1;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&)> g;

    Eigen::Vector2d operator()(const Eigen::Vector2d& u) const {
        if (u.norm() >= s) throw Error(errc::chart_domain, "|u| >= s");
        return g(u);
    }
};

inline NormalComponentMap normal_component(const SphereMap& f, const SpherePoint& p,
                                           double s = 0.2) {
    if (!p.on_polar()) throw Error(errc::bad_argument, "base point must lie on P");
    if (!(s > 0.0 && s < 1.0)) throw Error(errc::chart_domain, "radius s must be in (0,1)");
    Vec p_dir = p.tail();
    p_dir.normalize();
    auto base_eval = f.eval_fn;
    NormalComponentMap nc{p, p_dir, s, f.c1, {}};
    nc.g = [base_eval, p_dir](const Eigen::Vector2d& u) {
        SpherePoint y = base_eval(chart_to_sphere(ChartPoint{u, p_dir}));
        return Eigen::Vector2d(y.x[0], y.x[1]);
    };
    return nc;
}

struct JacobianMatrix {
    Eigen::MatrixXd a;
    double step;
    double richardson_residual;    // max entry gap between step h and h/2
    double triangularity_residual; // norm of the upper-right block, if applicable
};

// Central differences at steps h and h/2; keeps the finer estimate.
template <class F>
JacobianMatrix fd_jacobian(F&& fn, const Eigen::VectorXd& at, double h) {
    auto diff = [&](double step) {
        Eigen::VectorXd f0 = fn(at);
        Eigen::MatrixXd J(f0.size(), at.size());
        for (int j = 0; j < at.size(); ++j) {
            Eigen::VectorXd xp = at, xm = at;
            xp[j] += step;
            xm[j] -= step;
            J.col(j) = (fn(xp) - fn(xm)) / (2.0 * step);
        }
        return J;
    };
    Eigen::MatrixXd Jh = diff(h), Jh2 = diff(h / 2.0);
    JacobianMatrix out;
    out.a = Jh2;
    out.step = h;
    out.richardson_residual = (Jh - Jh2).cwiseAbs().maxCoeff();
    out.triangularity_residual = 0.0;
    return out;
}

inline JacobianMatrix jacobian(const NormalComponentMap& g, const Eigen::Vector2d& at,
                               double h = 1e-5) {
    if (!g.c1) throw Error(errc::not_c1, "map is C0 only");
    auto fn = [&g](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return g.g(Eigen::Vector2d(v[0], v[1]));
    };
    return fd_jacobian(fn, at, h);
}

// Orthonormal basis of the tangent space at x, orientation fixed so that
// det[x b_1 ... b_m] > 0. Continuity in x is not promised (nor needed).
inline Eigen::MatrixXd tangent_basis(const SpherePoint& x) {
    int n = static_cast<int>(x.x.size());
    Eigen::MatrixXd M(n, n);
    M.col(0) = x.x;
    // complete with the most transverse coordinate axes, then Gram-Schmidt
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return std::abs(x.x[i]) < std::abs(x.x[j]); });
    int col = 1;
    for (int idx : order) {
        if (col >= n) break;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
        v[idx] = 1.0;
        for (int j = 0; j < col; ++j) v -= M.col(j).dot(v) * M.col(j);
        double nv = v.norm();
        if (nv < 1e-8) continue;
        M.col(col++) = v / nv;
    }
    if (col != n) throw Error(errc::evaluation_failure, "tangent basis construction failed");
    if (M.determinant() < 0) M.col(n - 1) *= -1.0;
    return M.rightCols(n - 1);
}

// Jacobian of f in gnomonic tangent charts at x and f(x): the chart at base
// b with frame B sends v to normalize(b + B v), and its inverse reads off
// B^T y / (b . y).
inline JacobianMatrix jacobian(const SphereMap& f, const SpherePoint& x, double h = 1e-5) {
    if (!f.c1) throw Error(errc::not_c1, "map is C0 only");
    Eigen::MatrixXd Bx = tangent_basis(x);
    SpherePoint fx = f(x);
    Eigen::MatrixXd By = tangent_basis(fx);
    auto fn = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Vec p = x.x + Bx * v;
        SpherePoint y = f(SpherePoint(p));
        double denom = fx.x.dot(y.x);
        if (std::abs(denom) < 1e-6)
            throw Error(errc::evaluation_failure, "image left the tangent chart");
        return (By.transpose() * y.x) / denom;
    };
    return fd_jacobian(fn, Eigen::VectorXd::Zero(f.m), h);
}

// Full Jacobian at a fixed point p of f|P in product coordinates (z, P-chart).
// Rows/columns are ordered (z0, z1, tangent of P), so the invariance of P
// forces the upper-right 2 x (m-2) block to vanish; its norm is reported.
inline JacobianMatrix polar_product_jacobian(const SphereMap& f, const SpherePoint& p,
                                             double h = 1e-5) {
    if (!f.c1) throw Error(errc::not_c1, "map is C0 only");
    if (!p.on_polar()) throw Error(errc::bad_argument, "base point must lie on P");
    int m = f.m;
    Vec p_dir = p.tail();
    p_dir.normalize();
    Eigen::MatrixXd Bp;  // tangent frame of S^{m-2} at p_dir, (m-1) x (m-2)
    if (m > 2) {
        SpherePoint pd(p_dir);
        Bp = tangent_basis(pd);
    }
    auto fn = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        Eigen::Vector2d z(v[0], v[1]);
        Vec dir = p_dir;
        if (m > 2) {
            Vec w = v.tail(m - 2);
            dir = p_dir + Bp * w;
            dir.normalize();
        }
        SpherePoint y = f.eval_fn(chart_to_sphere(ChartPoint{z, dir}));
        Eigen::VectorXd out(m);
        out[0] = y.x[0];
        out[1] = y.x[1];
        if (m > 2) {
            Vec t = y.tail();
            t.normalize();
            double denom = t.dot(p_dir);
            if (std::abs(denom) < 1e-6)
                throw Error(errc::evaluation_failure, "image left the polar chart");
            out.tail(m - 2) = (Bp.transpose() * t) / denom;
        }
        return out;
    };
    JacobianMatrix J = fd_jacobian(fn, Eigen::VectorXd::Zero(m), h);
    if (m > 2) J.triangularity_residual = J.a.topRightCorner(2, m - 2).norm();
    return J;
}

}  // namespace polar
