#pragma once

#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "polar/degree.hpp"
#include "polar/maps.hpp"

namespace polar {

// Norm adapted to a 2x2 matrix: coefficients taken in a basis matched to the
// eigenstructure, so that the matrix contracts by any factor above its
// spectral radius.
struct AdaptedNorm {
    enum class Kind { l1_in_basis, l2_in_basis };
    Eigen::Matrix2d basis;      // columns
    Eigen::Matrix2d to_coords;  // basis^{-1}, precomputed
    Kind kind = Kind::l1_in_basis;
    double K = 1.0;  // Jordan rescale already folded into basis.col(0)
    double c = 0.0;  // certified bound: |Au| < c |u| for u != 0

    double operator()(const Eigen::Vector2d& u) const {
        Eigen::Vector2d w = to_coords * u;
        return kind == Kind::l1_in_basis ? std::abs(w[0]) + std::abs(w[1]) : w.norm();
    }
};

inline double spectral_radius(const Eigen::Matrix2d& a) {
    return a.eigenvalues().cwiseAbs().maxCoeff();
}

// Construction cases: real-diagonalizable uses the l1 norm in an eigenbasis,
// a complex pair uses the l2 norm in the conformal basis, a Jordan block
// uses the l1 norm in {K e0, e1} with K = 2/(c - |lambda|).
inline AdaptedNorm adapted_norm(const Eigen::Matrix2d& a, double c) {
    double rho = spectral_radius(a);
    if (!(c > rho + 1e-9))
        throw Error(errc::spectral_gap_too_small,
                    "need c > spectral radius, got c - rho = " + std::to_string(c - rho));
    AdaptedNorm out;
    out.c = c;
    double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    Eigen::EigenSolver<Eigen::Matrix2d> es(a);
    Eigen::Vector2cd ev = es.eigenvalues();
    if (std::abs(ev[0].imag()) > 1e-10 * scale) {
        // lambda = p + iq with eigenvector v: in the basis {Re v, Im v} the
        // matrix acts conformally, so the l2 coefficient norm scales by rho.
        // Only a common rescaling of the two columns keeps that shape.
        Eigen::Vector2cd v = es.eigenvectors().col(0);
        out.basis.col(0) = v.real();
        out.basis.col(1) = v.imag();
        out.kind = AdaptedNorm::Kind::l2_in_basis;
    } else {
        double l0 = ev[0].real(), l1 = ev[1].real();
        if (std::abs(l0 - l1) > 1e-7 * scale) {
            out.basis.col(0) = es.eigenvectors().col(0).real().normalized();
            out.basis.col(1) = es.eigenvectors().col(1).real().normalized();
            out.kind = AdaptedNorm::Kind::l1_in_basis;
        } else {
            double lambda = 0.5 * (l0 + l1);
            Eigen::Matrix2d n = a - lambda * Eigen::Matrix2d::Identity();
            if (n.cwiseAbs().maxCoeff() <= 1e-10 * scale) {
                out.basis.setIdentity();  // scalar matrix: any basis works
                out.kind = AdaptedNorm::Kind::l1_in_basis;
            } else {
                // Jordan block: n e1 = e0, n e0 = 0
                Eigen::JacobiSVD<Eigen::Matrix2d> svd(
                    n, Eigen::ComputeFullU | Eigen::ComputeFullV);
                Eigen::Vector2d e0 = svd.matrixV().col(1);  // kernel direction
                Eigen::Vector2d e1 =
                    svd.solve(e0);  // least-squares preimage; exact for a true block
                out.K = 2.0 / (c - std::abs(lambda));
                out.basis.col(0) = out.K * e0;
                out.basis.col(1) = e1;
                out.kind = AdaptedNorm::Kind::l1_in_basis;
            }
        }
    }
    out.to_coords = out.basis.inverse();
    return out;
}

// Cone around the expanding eigendirection of a singular normal Jacobian:
// C(alpha) = {u : |u_0| < alpha |u_lambda|} in the {e0, e_lambda} basis.
struct ConeData {
    Eigen::Vector2d e0, elambda;
    double lambda = 0.0;
    double eps = 0.0;
    double alpha = 0.0;
    double delta = 0.1;

    Eigen::Vector2d coords(const Eigen::Vector2d& u) const {
        Eigen::Matrix2d b;
        b.col(0) = e0;
        b.col(1) = elambda;
        return b.inverse() * u;
    }
    bool inside(const Eigen::Vector2d& u) const {
        Eigen::Vector2d w = coords(u);
        return std::abs(w[0]) < alpha * std::abs(w[1]);
    }
};

enum class NormalVerdict { attracting_normal, cone_case };

inline const char* verdict_name(NormalVerdict v) {
    return v == NormalVerdict::attracting_normal ? "AttractingNormal" : "ConeCase";
}

struct FixedPointClass {
    SpherePoint p;
    JacobianMatrix a_p;
    double rho = 0.0;
    NormalVerdict verdict = NormalVerdict::attracting_normal;
    AdaptedNorm norm;
    std::optional<ConeData> cone;
    double rank1_error = 0.0;  // removed singular value of A_p
};

namespace local_detail {

inline const double kEpsLadder[4] = {0.3, 0.1, 0.03, 0.01};

// deterministic sign: first nonzero-ish component positive
inline Eigen::Vector2d canonical_sign(Eigen::Vector2d v) {
    double lead = std::abs(v[0]) >= std::abs(v[1]) ? v[0] : v[1];
    return lead < 0 ? Eigen::Vector2d(-v) : v;
}

}  // namespace local_detail

// Spectral classification of a fixed point of f|P by its normal Jacobian.
// The attracting branch needs rho strictly below 1; the boundary band falls
// into the cone branch, the safe side for the fixed point count.
inline FixedPointClass classify_fixed_point(const SphereMap& f, const SpherePoint& p,
                                            const DegreeOpts& opts = {}) {
    if (!p.on_polar()) throw Error(errc::bad_argument, "classification point must lie on P");
    SpherePoint y = f(p);
    if ((y.x - p.x).norm() >= 1e-9)
        throw Error(errc::not_a_fixed_point,
                    "normal classification is only defined at fixed points of f|P");
    long long d = f.hooks.transversal ? *f.hooks.transversal : transversal_degree(f, opts);
    if (std::llabs(d) <= 1)
        throw Error(errc::bad_argument, "normal classification needs |d| > 1");

    FixedPointClass out{p, jacobian(normal_component(f, p, 0.45), Eigen::Vector2d::Zero()),
                        0.0,  NormalVerdict::attracting_normal,
                        {},   std::nullopt,
                        0.0};
    Eigen::Matrix2d a = out.a_p.a;
    out.rho = spectral_radius(a);
    if (std::abs(a.determinant()) > 1e-4)
        throw Error(errc::nonsingular_jacobian,
                    "normal Jacobian is invertible; contradicts the singularity of A_p for |d| > 1");

    // project to the nearest rank-1 matrix; the discarded singular value is
    // the recorded numerical defect
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    out.rank1_error = svd.singularValues()[1];
    Eigen::Matrix2d a1 = svd.singularValues()[0] * svd.matrixU().col(0) *
                         svd.matrixV().col(0).transpose();

    if (out.rho < 1.0 - 1e-9) {
        out.verdict = NormalVerdict::attracting_normal;
        out.norm = adapted_norm(a1, 0.5 * (1.0 + out.rho));
        return out;
    }
    out.verdict = NormalVerdict::cone_case;
    ConeData cone;
    cone.lambda = a1.trace();  // rank-1: the nonzero eigenvalue
    cone.elambda = local_detail::canonical_sign(svd.matrixU().col(0));
    Eigen::Vector2d v0 = svd.matrixV().col(0);
    cone.e0 = local_detail::canonical_sign(Eigen::Vector2d(-v0[1], v0[0]));  // kernel of a1
    double al = std::abs(cone.lambda);
    for (double eps : local_detail::kEpsLadder) {
        double alpha = (al + 2.0 * eps - 1.0) / (1.0 - 2.0 * eps);
        if (alpha > 0.0 && alpha < (al - 3.0 * eps) / (3.0 * eps)) {
            cone.eps = eps;
            cone.alpha = alpha;
            break;
        }
    }
    if (cone.eps == 0.0)
        throw Error(errc::bad_argument, "no compatible cone aperture on the ladder");
    out.norm = adapted_norm(a1, al + cone.eps);
    out.cone = cone;
    return out;
}

struct SectorViolation {
    Vec q;  // base point on P
    Eigen::Vector2d u;
    std::string kind;
    double lhs = 0.0, rhs = 0.0;
};

struct SectorReport {
    NormalVerdict verdict = NormalVerdict::attracting_normal;
    double delta = 0.0;
    int halvings = 0;
    long long samples_checked = 0;
    std::vector<SectorViolation> violations;
    bool pass() const { return violations.empty(); }
};

namespace local_detail {

// base points of P near p: geodesic offsets along P in its own sphere
inline std::vector<SpherePoint> polar_mesh(const SpherePoint& p, double radius) {
    std::vector<SpherePoint> out;
    out.push_back(p);
    Vec dir = p.tail();
    dir.normalize();
    if (dir.size() < 2) return out;  // P is a point pair: no neighbors
    Eigen::MatrixXd tb = tangent_basis(SpherePoint(dir));
    for (int j = 0; j < tb.cols(); ++j)
        for (double r : {radius, -radius, radius / 2.0, -radius / 2.0}) {
            Vec q = std::cos(r) * dir + std::sin(r) * tb.col(j);
            out.push_back(polar_point(q));
        }
    return out;
}

}  // namespace local_detail

// Sampled check of the contraction/expansion dichotomy near a classified
// fixed point: contraction outside the cone (or everywhere, in the
// attracting case), expanding lambda-component and angular clearance from
// <e0> inside it. Halves delta until the sample set is violation free.
inline SectorReport verify_sector_lemma(const SphereMap& f, const SpherePoint& p,
                                        const FixedPointClass& cls, int n_samples = 600,
                                        double mesh_radius = 0.02, std::uint64_t seed = 31) {
    SectorReport rep;
    rep.verdict = cls.verdict;
    double delta = cls.cone ? cls.cone->delta : 0.1;
    auto mesh = local_detail::polar_mesh(p, mesh_radius);
    std::vector<NormalComponentMap> maps;
    for (const auto& q : mesh) maps.push_back(normal_component(f, q, 0.45));
    const double eps =
        cls.cone ? cls.cone->eps : 0.5 * (1.0 - cls.norm.c);  // attracting: c < 1
    for (int h = 0; h <= 10; ++h) {
        rep.violations.clear();
        rep.delta = delta;
        rep.halvings = h;
        rep.samples_checked = 0;
        Rng rng(seed, "sector-" + std::to_string(h));
        for (int i = 0; i < n_samples; ++i) {
            Eigen::Vector2d u;
            if (!cls.cone) {
                double th = rng.uniform(0.0, kTwoPi);
                double r = delta * (0.05 + 0.95 * rng.uniform());
                u = r * Eigen::Vector2d(std::cos(th), std::sin(th));
            } else {
                // stratified in cone coordinates with |c_lambda| = 1: even
                // samples inside C(alpha), odd outside. Rescaling to the
                // target length cannot cross the cone boundary.
                const ConeData& cn = *cls.cone;
                double sl = rng.uniform() < 0.5 ? 1.0 : -1.0;
                double s0 = rng.uniform() < 0.5 ? 1.0 : -1.0;
                double c0 = i % 2 == 0 ? s0 * 0.95 * cn.alpha * rng.uniform()
                                       : s0 * cn.alpha * (1.05 + 2.0 * rng.uniform());
                u = c0 * cn.e0 + sl * cn.elambda;
                u *= delta * (0.05 + 0.95 * rng.uniform()) / u.norm();
            }
            for (std::size_t qi = 0; qi < maps.size(); ++qi) {
                ++rep.samples_checked;
                Eigen::Vector2d g = maps[qi](u);
                if (!cls.cone) {
                    double lhs = cls.norm(g), rhs = (1.0 - eps) * cls.norm(u);
                    if (!(lhs < rhs))
                        rep.violations.push_back({mesh[qi].x, u, "attracting_contraction",
                                                  lhs, rhs});
                    continue;
                }
                const ConeData& cn = *cls.cone;
                if (!cn.inside(u)) {
                    double lhs = cls.norm(g), rhs = (1.0 - cn.eps) * cls.norm(u);
                    if (!(lhs < rhs))
                        rep.violations.push_back({mesh[qi].x, u, "outside_cone_contraction",
                                                  lhs, rhs});
                } else {
                    Eigen::Vector2d gc = cn.coords(g);
                    double lhs = std::abs(gc[1]), rhs = cn.eps * cls.norm(u);
                    if (!(lhs > rhs))
                        rep.violations.push_back({mesh[qi].x, u, "cone_expansion", lhs, rhs});
                    double clearance = std::atan2(std::abs(gc[1]), std::abs(gc[0]));
                    if (!(clearance > 1e-6))
                        rep.violations.push_back({mesh[qi].x, u, "axis_clearance",
                                                  clearance, 1e-6});
                }
            }
        }
        if (rep.violations.empty()) break;
        delta *= 0.5;
    }
    return rep;
}

struct NeighborhoodEstimate {
    double delta = 0.0;
    double mesh_radius = 0.0;
    double gamma_max = 0.0;
};

// Largest tested (delta, mesh radius) with the base-point Jacobian variation
// below the class epsilon: gamma_q = max over the mesh and over samples tu
// of |Df_q(tu) - Df_p(tu)| in the operator norm.
inline NeighborhoodEstimate neighborhood_radius(const SphereMap& f, const SpherePoint& p,
                                                const FixedPointClass& cls) {
    if (!f.c1) throw Error(errc::not_c1, "radius estimate needs a C1 map");
    const double eps = cls.cone ? cls.cone->eps : 0.5 * (1.0 - cls.norm.c);
    NormalComponentMap gp = normal_component(f, p, 0.45);
    for (double delta = 0.2; delta >= 1e-6; delta *= 0.5) {
        double mesh_radius = delta / 2.0;
        double gamma = 0.0;
        for (const auto& q : local_detail::polar_mesh(p, mesh_radius)) {
            if ((q.x - p.x).norm() < 1e-15) continue;
            NormalComponentMap gq = normal_component(f, q, 0.45);
            for (int dir = 0; dir < 8; ++dir) {
                double th = kTwoPi * dir / 8.0;
                for (double t : {0.25, 0.5, 0.75, 1.0}) {
                    Eigen::Vector2d u =
                        t * delta * Eigen::Vector2d(std::cos(th), std::sin(th));
                    Eigen::Matrix2d diff = jacobian(gq, u).a - jacobian(gp, u).a;
                    gamma = std::max(gamma,
                                     diff.jacobiSvd().singularValues().maxCoeff());
                }
            }
        }
        if (gamma < eps) return NeighborhoodEstimate{delta, mesh_radius, gamma};
    }
    throw Error(errc::radius_collapse, "no neighborhood below 1e-6 tames the Jacobian variation");
}

}  // namespace polar
