#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"
#include "polar/lifts.hpp"

using namespace polar;

namespace {

LiftPoint random_cover_point(Rng& rng, int udim, double umax) {
    Vec u(udim);
    double n2;
    do {
        for (int i = 0; i < udim; ++i) u[i] = umax * (2.0 * rng.uniform() - 1.0);
        n2 = u.squaredNorm();
    } while (n2 >= umax * umax);
    return LiftPoint{6.0 * rng.uniform() - 3.0, u};
}

double downstairs_gap(const LiftPoint& a, const LiftPoint& b) {
    return sphere_distance(annular_to_sphere(project(a)), annular_to_sphere(project(b)));
}

}  // namespace

TEST_CASE("lift of the squaring map doubles the angle coordinate") {
    Lift F = make_lift(power_s2(2), 0);
    REQUIRE(F.d == 2);
    Vec u0 = Vec::Zero(1);
    for (double t : {0.0, 0.25, -0.4, 1.3, -2.0, 1.9}) {
        LiftPoint y = F(LiftPoint{t, u0});
        REQUIRE(y.t == Catch::Approx(2.0 * t).margin(1e-10));
        REQUIRE(std::abs(y.u[0]) < 1e-12);
    }
}

TEST_CASE("deck commutation holds for every constructed lift") {
    std::vector<SphereMap> cases = {power_s2(3), power_s2(-2),
                                    perturb(power_s2(2), 0.05, 7), join_power(2, 3)};
    for (const SphereMap& f : cases) {
        for (const Lift& F : lift_family(f)) {
            Rng rng(404, "commutation-" + f.spec + std::to_string(F.k));
            int n = f.m == 2 ? 1000 : 200;
            for (int i = 0; i < n; ++i) {
                LiftPoint q = random_cover_point(rng, f.m - 1, 0.9);
                LiftPoint a = F(deck(q, 1));
                LiftPoint b = F(q);
                INFO(f.spec << " k=" << F.k << " t=" << q.t);
                REQUIRE(a.t - b.t == Catch::Approx(double(F.d)).margin(1e-9));
                REQUIRE((a.u - b.u).norm() < 1e-9);
            }
        }
    }
}

TEST_CASE("deck offset composes with the base lift") {
    SphereMap f = power_s2(3);
    Lift F0 = make_lift(f, 0);
    Lift F2 = make_lift(f, 2);
    Rng rng(405, "offset");
    for (int i = 0; i < 50; ++i) {
        LiftPoint q = random_cover_point(rng, 1, 0.9);
        LiftPoint a = F2(q);
        LiftPoint b = deck(F0(q), 2);
        REQUIRE(a.t == Catch::Approx(b.t).margin(1e-12));
        REQUIRE((a.u - b.u).norm() == 0.0);
    }
}

TEST_CASE("projection intertwines the lift with the map downstairs") {
    for (const SphereMap& f : {power_s2(-2), join_power(2, 3)}) {
        Lift F = make_lift(f, 0);
        Rng rng(406, "project-" + f.spec);
        for (int i = 0; i < 100; ++i) {
            LiftPoint q = random_cover_point(rng, f.m - 1, 0.9);
            SpherePoint down = annular_to_sphere(project(q));
            REQUIRE(sphere_distance(annular_to_sphere(project(F(q))), f(down)) < 1e-9);
        }
    }
}

TEST_CASE("family sizes follow the transversal degree") {
    REQUIRE(lift_family(power_s2(2)).size() == 1);
    REQUIRE(lift_family(power_s2(3)).size() == 2);
    REQUIRE(lift_family(power_s2(-2)).size() == 3);
    REQUIRE_THROWS_MATCHES(lift_family(identity_map(2)), Error,
                           Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                               "DegenerateTransversalDegree")));
}

TEST_CASE("search box selection matches the linear model") {
    REQUIRE(choose_search_box(make_lift(power_s2(2), 0), 0.1).M == 2.0);
    REQUIRE(choose_search_box(make_lift(power_s2(-2), 0), 0.1).M == 2.0);
    REQUIRE_THROWS(choose_search_box(make_lift(power_s2(2), 0), 0.6));
    // a huge deck offset pushes the end-face inequality out of reach
    REQUIRE_THROWS_MATCHES(choose_search_box(make_lift(power_s2(2), 1500), 0.1), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("BoxCapExceeded")));
}

TEST_CASE("single lift of the squaring map has exactly one fixed point") {
    Lift F = make_lift(power_s2(2), 0);
    LiftSearchReport rep = find_fixed_points(F, choose_search_box(F, 0.1));
    REQUIRE(rep.records.size() == 1);
    const FixedPointRecord& r = rep.records.front();
    REQUIRE(std::abs(r.location.t) < 1e-9);
    REQUIRE(r.location.u.norm() < 1e-9);
    REQUIRE(r.residual < 1e-10);
    REQUIRE(rep.certificate.degree != 0);
    REQUIRE(rep.certificate_consistent);
    Vec east(3);
    east << 1, 0, 0;
    REQUIRE(sphere_distance(r.downstairs, SpherePoint(east)) < 1e-8);
    // d > 1: the inward normal opposes the displacement field on the boundary
    REQUIRE(rep.opposing.ok);
    REQUIRE(rep.opposing.min_separation > 0.5);
}

TEST_CASE("cubing map lifts separate the two equatorial roots") {
    SphereMap f = power_s2(3);
    FamilyReport fam = search_family(f, 0.1);
    REQUIRE(fam.d == 3);
    REQUIRE(fam.lifts.size() == 2);
    REQUIRE(fam.free_in_box == 0);
    REQUIRE(fam.certified_nonfree == 2);
    REQUIRE(fam.nielsen.ok);
    for (const auto& rep : fam.lifts) {
        REQUIRE(rep.records.size() == 1);
        REQUIRE(rep.certificate.degree != 0);
        double x0 = rep.records.front().downstairs.x[0];
        REQUIRE(std::abs(x0 - (rep.k == 0 ? 1.0 : -1.0)) < 1e-8);
    }
}

TEST_CASE("per-record downstairs residuals stay honest") {
    for (const SphereMap& f : {power_s2(3), power_s2(-2)}) {
        for (const auto& rep : search_family(f, 0.1).lifts)
            for (const auto& r : rep.records) {
                REQUIRE((f(r.downstairs).x - r.downstairs.x).norm() < 1e-8);
                REQUIRE_FALSE(r.cluster);
            }
    }
}

TEST_CASE("negative degree family certifies all three classes") {
    FamilyReport fam = search_family(power_s2(-2), 0.1);
    REQUIRE(fam.lifts.size() == 3);
    REQUIRE(fam.free_in_box == 0);
    REQUIRE(fam.certified_nonfree == 3);
    REQUIRE(fam.nielsen.ok);
    for (const auto& rep : fam.lifts) REQUIRE(rep.records.size() == 1);
}

TEST_CASE("perturbed squaring map keeps a certified fixed point") {
    SphereMap f = perturb(power_s2(2), 0.05, 7);
    FamilyReport fam = search_family(f, 0.1);
    REQUIRE(fam.lifts.size() == 1);
    REQUIRE(fam.lifts[0].records.size() >= 1);
    REQUIRE(fam.lifts[0].certificate_consistent);
    REQUIRE(fam.certified_nonfree == 1);
}

TEST_CASE("join map lift certifies fixed points upstairs and downstairs") {
    SphereMap f = join_power(2, 3);
    FamilyReport fam = search_family(f, 0.1);
    REQUIRE(fam.lifts.size() == 1);
    const LiftSearchReport& rep = fam.lifts[0];
    REQUIRE(rep.certificate.degree != 0);
    REQUIRE(rep.certificate_consistent);
    REQUIRE(rep.records.size() >= 1);
    bool found_axis_point = false;
    for (const auto& r : rep.records) {
        REQUIRE(r.residual < 1e-10);
        REQUIRE((f(r.downstairs).x - r.downstairs.x).norm() < 1e-8);
        if (r.downstairs.x[0] > 0.999) found_axis_point = true;
    }
    REQUIRE(found_axis_point);
}

TEST_CASE("deck classes shifted by the family period project identically") {
    SphereMap f = power_s2(3);
    Lift F0 = make_lift(f, 0);
    Lift F2 = make_lift(f, 2);  // 2 = |d-1|, same class as k=0
    auto r0 = find_fixed_points(F0, choose_search_box(F0, 0.1)).records;
    auto r2 = find_fixed_points(F2, choose_search_box(F2, 0.1)).records;
    REQUIRE(r0.size() == 1);
    REQUIRE(r2.size() == 1);
    REQUIRE(downstairs_gap(r0[0].location, r2[0].location) < 1e-8);
    REQUIRE(r2[0].location.t == Catch::Approx(r0[0].location.t - 1.0).margin(1e-9));
}

TEST_CASE("nielsen check flags artificial class collisions") {
    SphereMap f = power_s2(3);
    FamilyReport fam = search_family(f, 0.1);
    std::vector<FixedPointRecord> all;
    for (const auto& rep : fam.lifts)
        for (const auto& r : rep.records) all.push_back(r);
    REQUIRE(nielsen_check(all, 3).ok);
    // relabel a copy of the k=0 record as class 1: projections now collide
    FixedPointRecord fake = all.front();
    fake.k = (all.front().k + 1) % 2;
    all.push_back(fake);
    NielsenReport bad = nielsen_check(all, 3);
    REQUIRE_FALSE(bad.ok);
    REQUIRE(bad.breaches.size() >= 1);
    REQUIRE(bad.breaches.front().distance < 1e-6);
}

TEST_CASE("free lift counts respect the polar fixed point bound") {
    // two polar fixed points for positive powers, none when the poles swap
    REQUIRE(count_fixed_point_free_lifts(power_s2(2), 0.1) == 0);
    REQUIRE(count_fixed_point_free_lifts(power_s2(3), 0.1) == 0);
    FamilyReport neg = search_family(power_s2(-5), 0.1);
    REQUIRE(neg.lifts.size() == 6);
    REQUIRE(neg.free_in_box == 0);  // bound is 2*0: every class must certify
    REQUIRE(neg.certified_nonfree == 6);
    FamilyReport pos = search_family(power_s2(5), 0.1);
    REQUIRE(pos.free_in_box == 0);
    REQUIRE(pos.certified_nonfree >= 4 - 2 * 2);  // |d-1| - 2 #Fix(f|P)
}

TEST_CASE("discontinuous angle jumps surface as tracking loss") {
    SphereMap f;
    f.m = 2;
    f.c1 = false;
    f.spec = "angle-jump";
    f.hooks.transversal = 1;
    f.eval_fn = [](const SpherePoint& x) {
        if (x.on_polar()) return x;
        AnnularPoint a = sphere_to_annular(x);
        if (a.u[0] >= 0.5) a.angle = -a.angle;
        return annular_to_sphere(a);
    };
    Lift F = make_lift(f, 0);
    REQUIRE_THROWS_MATCHES(F(LiftPoint{0.0, Vec::Constant(1, 0.7)}), Error,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("TrackingLoss")));
}
