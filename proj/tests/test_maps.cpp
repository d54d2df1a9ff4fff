#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "polar/maps.hpp"

using namespace polar;
using Catch::Approx;

namespace {

SpherePoint rand_point(Rng& rng, int ambient) {
    Vec v(ambient);
    double n = 0;
    do {
        for (int i = 0; i < ambient; ++i) v[i] = rng.normal();
        n = v.norm();
    } while (n < 1e-3);
    return SpherePoint(v);
}

Vec vec3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

Vec vec4(double a, double b, double c, double d) {
    Vec v(4);
    v << a, b, c, d;
    return v;
}

}  // namespace

TEST_CASE("power_s2 pinned fixed points and pole dynamics") {
    SphereMap f2 = power_s2(2);
    SpherePoint one(vec3(1, 0, 0));  // stereographic image of z = 1
    REQUIRE(sphere_distance(f2(one), one) < 1e-12);

    SpherePoint north(vec3(0, 0, 1)), south(vec3(0, 0, -1));
    REQUIRE(sphere_distance(f2(north), north) < 1e-15);
    REQUIRE(sphere_distance(f2(south), south) < 1e-15);

    SphereMap fm2 = power_s2(-2);
    REQUIRE(sphere_distance(fm2(north), south) < 1e-15);  // poles form a 2-cycle
    REQUIRE(sphere_distance(fm2(south), north) < 1e-15);
}

TEST_CASE("power_s2 equatorial fixed points match the roots-of-unity oracle") {
    for (long long d : {2LL, 3LL, -2LL, 5LL}) {
        SphereMap f = power_s2(d);
        for (int n = 1; n <= 4; ++n) {
            SphereMap fn = iterate(f, n);
            auto pts = oracle::equator_fixed_points_power(d, n);
            for (const auto& x : pts) REQUIRE(sphere_distance(fn(x), x) < 1e-10);
            REQUIRE(*f.hooks.fix_count(n) == oracle::fix_count_power(d, n));
        }
    }
}

TEST_CASE("power_s2 hook values") {
    SphereMap f = power_s2(2);
    REQUIRE(*f.hooks.degree == 2);
    REQUIRE(*f.hooks.degree_polar == 1);
    REQUIRE(*f.hooks.transversal == 2);
    REQUIRE(*f.hooks.fix_count(1) == 3);
    REQUIRE(*f.hooks.fix_count(3) == 9);

    SphereMap g = power_s2(-2);
    REQUIRE(*g.hooks.degree == 2);  // z -> 1/z^2 is holomorphic of degree 2
    REQUIRE(*g.hooks.degree_polar == -1);
    REQUIRE(*g.hooks.transversal == -2);
    REQUIRE(*g.hooks.fix_count(1) == 3);
    REQUIRE(*g.hooks.fix_polar_count(1) == 0);
    REQUIRE(*g.hooks.fix_polar_count(2) == 2);
}

TEST_CASE("join_power fixed lattice matches the oracle") {
    for (auto [a, b] : {std::pair<long long, long long>{2, 3}, {-2, 3}, {2, -3}, {3, 3}}) {
        SphereMap f = join_power(a, b);
        for (int n = 1; n <= 2; ++n) {
            SphereMap fn = iterate(f, n);
            auto pts = oracle::interior_fixed_points_join(a, b, n);
            REQUIRE((long long)pts.size() ==
                    std::llabs(oracle::ipow_ll(a, n) - 1) * std::llabs(oracle::ipow_ll(b, n) - 1));
            for (const auto& x : pts) REQUIRE(sphere_distance(fn(x), x) < 1e-9);
            REQUIRE(*f.hooks.fix_count(n) == oracle::fix_count_join(a, b, n));
        }
    }
    SphereMap f = join_power(2, 3);
    REQUIRE(*f.hooks.fix_polar_count(1) == 2);
    REQUIRE(*f.hooks.degree == 6);
}

TEST_CASE("restrictions to the polar sphere") {
    SphereMap r2 = restrict_to_polar(power_s2(2));
    Vec plus(1), minus(1);
    plus << 1.0;
    minus << -1.0;
    REQUIRE(r2(SpherePoint(plus)).x[0] == Approx(1.0));
    REQUIRE(r2(SpherePoint(minus)).x[0] == Approx(-1.0));

    SphereMap rm2 = restrict_to_polar(power_s2(-2));
    REQUIRE(rm2(SpherePoint(plus)).x[0] == Approx(-1.0));  // poles swap
    REQUIRE(rm2(SpherePoint(minus)).x[0] == Approx(1.0));

    SphereMap rj = restrict_to_polar(join_power(2, 3));  // w -> w^3 on S^1
    for (double th : {0.3, 1.1, 2.9}) {
        Vec w(2);
        w << std::cos(th), std::sin(th);
        SpherePoint img = rj(SpherePoint(w));
        REQUIRE(img.x[0] == Approx(std::cos(3 * th)).margin(1e-12));
        REQUIRE(img.x[1] == Approx(std::sin(3 * th)).margin(1e-12));
    }
    REQUIRE(*rj.hooks.degree == 3);
    REQUIRE(*rj.hooks.fix_count(1) == 2);
}

TEST_CASE("iterate composes pointwise and multiplies hooks") {
    SphereMap f = power_s2(2);
    SphereMap f2 = iterate(f, 2), f3 = iterate(f, 3);
    Rng rng(7, "iterate-test");
    for (int i = 0; i < 100; ++i) {
        SpherePoint x = rand_point(rng, 3);
        SpherePoint via = f2(f3(x));
        SpherePoint direct = iterate(f, 5)(x);
        REQUIRE(sphere_distance(via, direct) < 1e-9);
    }
    REQUIRE(*f3.hooks.transversal == 8);
    REQUIRE(*f3.hooks.degree == 8);
    REQUIRE(*f3.hooks.fix_count(1) == 9);
    REQUIRE(iterate(f, 1).spec == f.spec);
}

TEST_CASE("all families stay on the unit sphere") {
    Rng rng(11, "unit-norm");
    std::vector<SphereMap> fams;
    fams.push_back(power_s2(3));
    fams.push_back(power_s2(-2));
    fams.push_back(join_power(2, 3));
    fams.push_back(identity_map(2));
    fams.push_back(antipodal_map(3));
    fams.push_back(perturb(power_s2(2), 0.05, 7));
    for (const auto& f : fams) {
        for (int i = 0; i < 1000; ++i) {
            SpherePoint x = rand_point(rng, f.m + 1);
            REQUIRE(std::abs(f(x).x.norm() - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("perturb: support, identity at amplitude zero, invariance") {
    SphereMap base = power_s2(2);
    SphereMap zero = perturb(base, 0.0, 3);
    SphereMap p = perturb(base, 0.05, 3);
    Rng rng(13, "perturb-test");
    for (int i = 0; i < 300; ++i) {
        SpherePoint x = rand_point(rng, 3);
        SpherePoint y0 = base(x), yz = zero(x);
        REQUIRE((y0.x - yz.x).norm() == 0.0);
        double r = base(x).polar_radius();
        if (r <= 0.1 || r >= 0.9) REQUIRE((p(x).x - y0.x).norm() == 0.0);
    }
    REQUIRE(validate_invariance(p, 200).pass());
    REQUIRE_THROWS_AS(perturb(base, 0.2, 1), Error);
}

TEST_CASE("validate_invariance catches a map that moves P") {
    SphereMap bad;
    bad.m = 2;
    bad.spec = "family=broken";
    bad.eval_fn = [](const SpherePoint& x) {
        // rotation in the (x1,x2)-plane moves P off itself
        Vec y(3);
        double c = std::cos(0.5), s = std::sin(0.5);
        y << x.x[0], c * x.x[1] - s * x.x[2], s * x.x[1] + c * x.x[2];
        return SpherePoint(std::move(y));
    };
    InvarianceReport rep = validate_invariance(bad, 100);
    REQUIRE_FALSE(rep.pass());
    REQUIRE(rep.violations.front().kind == "escapes_polar");
    REQUIRE_THROWS_MATCHES(restrict_to_polar(bad), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == errc::invariance_violated;
                           }));

    REQUIRE(validate_invariance(power_s2(5), 200).pass());
    REQUIRE(validate_invariance(join_power(2, 3), 200).pass());
    REQUIRE(validate_invariance(join_power(-2, 3), 200).pass());
}

TEST_CASE("normal_component and its Jacobian") {
    SphereMap f = power_s2(2);
    SpherePoint north(vec3(0, 0, 1));
    NormalComponentMap nc = normal_component(f, north, 0.2);
    REQUIRE(nc(Eigen::Vector2d(0, 0)).norm() < 1e-14);

    JacobianMatrix A = jacobian(nc, Eigen::Vector2d(0, 0));
    REQUIRE(A.a.norm() < 1e-6);  // derivative of z^2 at 0
    REQUIRE(A.richardson_residual < 10.0 * A.step);

    // join_power at a fixed point of w -> w^3 on P
    SphereMap j = join_power(2, 3);
    SpherePoint wfix(vec4(0, 0, 1, 0));
    NormalComponentMap ncj = normal_component(j, wfix, 0.2);
    JacobianMatrix Aj = jacobian(ncj, Eigen::Vector2d(0, 0));
    REQUIRE(std::abs(Aj.a.determinant()) < 1e-6);

    REQUIRE_THROWS_AS(normal_component(f, north, 1.5), Error);
    REQUIRE_THROWS_AS(normal_component(f, SpherePoint(vec3(1, 0, 0)), 0.2), Error);
}

TEST_CASE("sphere jacobian in tangent charts") {
    SphereMap id = identity_map(2);
    Rng rng(17, "jac-test");
    for (int i = 0; i < 20; ++i) {
        SpherePoint x = rand_point(rng, 3);
        JacobianMatrix J = jacobian(id, x);
        REQUIRE((J.a - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-8);
    }

    SphereMap c0 = identity_map(2);
    c0.c1 = false;
    REQUIRE_THROWS_MATCHES(jacobian(c0, rand_point(rng, 3)), Error,
                           Catch::Matchers::Predicate<Error>(
                               [](const Error& e) { return e.code() == errc::not_c1; }));
}

TEST_CASE("product-coordinate Jacobian is block lower triangular on P") {
    SphereMap j = join_power(2, 3);
    for (double th : {0.0, kPi / 2, kPi}) {  // fixed points of w -> w^3 lie at th=0, pi
        Vec x(4);
        x << 0, 0, std::cos(th), std::sin(th);
        SpherePoint p(std::move(x));
        SpherePoint img = j(p);
        if (sphere_distance(img, p) > 1e-9) continue;
        JacobianMatrix J = polar_product_jacobian(j, p);
        REQUIRE(J.triangularity_residual < 1e-6);
        REQUIRE(J.richardson_residual < 10.0 * J.step);
        // lower-right block is the derivative of w -> w^3 on the circle
        REQUIRE(J.a(2, 2) == Approx(3.0).margin(1e-6));
    }
}

TEST_CASE("normal_model local family") {
    SphereMap nm = normal_model(2.0);
    SpherePoint north(vec3(0, 0, 1));
    REQUIRE(sphere_distance(nm(north), north) < 1e-14);
    NormalComponentMap nc = normal_component(nm, north, 0.2);
    JacobianMatrix A = jacobian(nc, Eigen::Vector2d(0, 0));
    REQUIRE(A.a(0, 0) == Approx(0.0).margin(1e-7));
    REQUIRE(A.a(1, 1) == Approx(2.0).margin(1e-7));
    REQUIRE(std::abs(A.a.determinant()) < 1e-6);

    Vec far(3);
    far << 0.9, 0, std::sqrt(1 - 0.81);
    REQUIRE_THROWS_MATCHES(nm(SpherePoint(std::move(far))), Error,
                           Catch::Matchers::Predicate<Error>([](const Error& e) {
                               return e.code() == errc::evaluation_failure;
                           }));
}

TEST_CASE("singular normal derivative for |d| > 1 families") {
    // at every sampled fixed point of f|P with |transversal| > 1 the normal
    // block must be singular
    struct Case {
        SphereMap f;
        SpherePoint p;
    };
    std::vector<Case> cases;
    cases.push_back({power_s2(2), SpherePoint(vec3(0, 0, 1))});
    cases.push_back({power_s2(3), SpherePoint(vec3(0, 0, -1))});
    cases.push_back({join_power(2, 3), SpherePoint(vec4(0, 0, 1, 0))});
    cases.push_back({join_power(3, 2), SpherePoint(vec4(0, 0, 1, 0))});
    for (const auto& c : cases) {
        JacobianMatrix A = jacobian(normal_component(c.f, c.p, 0.2), Eigen::Vector2d(0, 0));
        REQUIRE(std::abs(A.a.determinant()) < 1e-6);
    }
}
