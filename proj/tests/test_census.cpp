#include <catch2/catch_amalgamated.hpp>

#include "polar/census.hpp"

using namespace polar;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::MessageMatches;

namespace {

bool contains_point(const std::vector<CensusPoint>& pts, const Vec& x, double tol = 1e-8) {
    for (const auto& p : pts)
        if ((p.x.x - x).norm() < tol) return true;
    return false;
}

}  // namespace

TEST_CASE("exact bound matches closed forms across sign and size") {
    CHECK(power_bound(2, 5).value == 31);
    CHECK(power_bound(2, 5).text == "31");
    CHECK(power_bound(-2, 1).value == 3);
    CHECK(power_bound(-2, 2).value == 3);
    CHECK(power_bound(-2, 3).value == 9);
    CHECK(power_bound(3, 12).value == 531440);
    CHECK(power_bound(1, 7).value == 0);
    CHECK(power_bound(-1, 3).value == 2);
    CHECK(power_bound(-1, 4).value == 0);
    CHECK(power_bound(0, 2).value == 1);
    ExactBound huge = power_bound(1024, 12);  // 2^120 - 1 needs more than 64 bits
    CHECK_FALSE(huge.fits64);
    CHECK(huge.text == "1329227995784915872903807060280344575");
    CHECK(power_bound(10, 12).text == "999999999999");
}

TEST_CASE("squaring map census finds the poles and the equatorial root") {
    auto pts = fixed_points_on_sphere(power_s2(2), 1);
    REQUIRE(pts.size() == 3);
    CHECK(contains_point(pts, (Vec(3) << 0, 0, 1).finished()));
    CHECK(contains_point(pts, (Vec(3) << 0, 0, -1).finished()));
    CHECK(contains_point(pts, (Vec(3) << 1, 0, 0).finished()));
    for (const auto& p : pts) {
        CHECK(p.residual < 1e-10);
        CHECK_FALSE(p.cluster);
        CHECK(std::abs(p.det_j) > 1e-8);
    }
}

TEST_CASE("census agrees exactly with the closed-form counts") {
    struct Probe {
        SphereMap f;
        int n_max;
    };
    Probe probes[] = {{power_s2(2), 5}, {power_s2(3), 3}, {power_s2(-2), 3},
                      {join_power(2, 3), 2}};
    for (const auto& pr : probes) {
        for (int n = 1; n <= pr.n_max; ++n) {
            DYNAMIC_SECTION(pr.f.spec << " n=" << n) {
                auto pts = fixed_points_on_sphere(pr.f, n);
                REQUIRE(pr.f.hooks.fix_count);
                auto expect = pr.f.hooks.fix_count(n);
                REQUIRE(expect.has_value());
                CHECK((long long)pts.size() == *expect);
            }
        }
    }
}

TEST_CASE("power census grows strictly with the iterate") {
    SphereMap f = power_s2(2);
    std::size_t prev = 0;
    for (int n = 1; n <= 5; ++n) {
        auto pts = fixed_points_on_sphere(f, n);
        CHECK(pts.size() > prev);
        prev = pts.size();
    }
}

TEST_CASE("join census locates the interior golden-ratio fixed points") {
    auto pts = fixed_points_on_sphere(join_power(2, 3), 1);
    REQUIRE(pts.size() == 5);
    double rho = (std::sqrt(5.0) - 1.0) / 2.0;  // |z| solving rho^2 + rho = 1
    double w = std::sqrt(rho);
    CHECK(contains_point(pts, (Vec(4) << 0, 0, 1, 0).finished()));
    CHECK(contains_point(pts, (Vec(4) << 0, 0, -1, 0).finished()));
    CHECK(contains_point(pts, (Vec(4) << 1, 0, 0, 0).finished()));
    CHECK(contains_point(pts, (Vec(4) << rho, 0, w, 0).finished()));
    CHECK(contains_point(pts, (Vec(4) << rho, 0, -w, 0).finished()));
}

TEST_CASE("polar census tracks the orbit structure of the poles") {
    CHECK(fixed_points_on_polar(power_s2(2), 1).size() == 2);
    CHECK(fixed_points_on_polar(power_s2(2), 4).size() == 2);
    CHECK(fixed_points_on_polar(power_s2(-2), 1).empty());  // poles swap
    CHECK(fixed_points_on_polar(power_s2(-2), 2).size() == 2);
}

TEST_CASE("polar census counts circle roots for the join family") {
    auto n1 = fixed_points_on_polar(join_power(2, 3), 1);
    CHECK(n1.size() == 2);  // w^2 = 1 on the unit circle
    for (const auto& p : n1) {
        CHECK(p.x.on_polar());
        CHECK(p.x.x.size() == 4);
    }
    CHECK(contains_point(n1, (Vec(4) << 0, 0, 1, 0).finished()));
    CHECK(contains_point(n1, (Vec(4) << 0, 0, -1, 0).finished()));
    auto n2 = fixed_points_on_polar(join_power(2, 3), 2);
    CHECK(n2.size() == 8);  // w^9 = w, so w^8 = 1
}

TEST_CASE("identity join map raises the continuum alarm") {
    REQUIRE_THROWS_MATCHES(fixed_points_on_sphere(join_power(1, 1), 1), Error,
                           MessageMatches(ContainsSubstring("ContinuumSuspected")));
}

TEST_CASE("identity restriction to the polar circle raises the continuum alarm") {
    REQUIRE_THROWS_MATCHES(fixed_points_on_polar(join_power(2, 1), 1), Error,
                           MessageMatches(ContainsSubstring("ContinuumSuspected")));
}

TEST_CASE("census results are byte-stable across worker counts") {
    CensusOpts one;
    CensusOpts four;
    four.jobs = 4;
    auto a = fixed_points_on_sphere(power_s2(2), 2, one);
    auto b = fixed_points_on_sphere(power_s2(2), 2, four);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x.x == b[i].x.x);  // exact double equality, not tolerance
        CHECK(a[i].residual == b[i].residual);
    }
}

TEST_CASE("growth report for the squaring map verifies every row") {
    GrowthReport rep = growth_report(power_s2(2), 6);
    REQUIRE(rep.rows.size() == 6);
    CHECK(rep.d == 2);
    CHECK(rep.deg_f == 2);
    CHECK(rep.deg_restriction == 1);
    long long expected_fix[] = {3, 5, 9, 17, 33, 65};
    long long expected_bound[] = {1, 3, 7, 15, 31, 63};
    for (int i = 0; i < 6; ++i) {
        const CensusRow& row = rep.rows[i];
        CHECK(row.n == i + 1);
        CHECK_FALSE(row.flagged());
        CHECK(row.fix_count == expected_fix[i]);
        CHECK(row.fix_polar_count == 2);
        CHECK(row.bound.value == expected_bound[i]);
        CHECK(row.verdict());
    }
    // lift cross-checks ran while the class count stayed desk sized
    CHECK(rep.rows[0].lift_certified == 1);
    CHECK(rep.rows[1].lift_certified == 3);
    CHECK(rep.rows[2].lift_certified == 7);
    CHECK(rep.rows[0].crosscheck_ok);
    CHECK(rep.rows[2].crosscheck_ok);
    CHECK_FALSE(rep.rows[5].lift_certified.has_value());
    REQUIRE(rep.rows[5].growth.has_value());
    double expected_growth = std::log(2.0) + std::log(65.0 / 64.0) / 6.0;
    CHECK_THAT(*rep.rows[5].growth, Catch::Matchers::WithinAbs(expected_growth, 1e-12));
    REQUIRE(rep.liminf_estimate.has_value());
    CHECK(*rep.liminf_estimate == *rep.rows[5].growth);
}

TEST_CASE("negative power alternation satisfies the bound rows") {
    GrowthReport rep = growth_report(power_s2(-2), 2);
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].fix_count == 3);
    CHECK(rep.rows[0].fix_polar_count == 0);
    CHECK(rep.rows[0].bound.value == 3);
    CHECK(rep.rows[0].verdict());
    CHECK(rep.rows[1].fix_count == 5);
    CHECK(rep.rows[1].fix_polar_count == 2);
    CHECK(rep.rows[1].bound.value == 3);
    CHECK(rep.rows[1].verdict());
    TheoremSummary s = verify_theorem1(rep);
    CHECK(s.pass());
}

TEST_CASE("join growth report keeps the theorem inequality with d=2") {
    CensusOpts opts;
    opts.lift_crosscheck = false;  // covered separately; keeps this row cheap
    GrowthReport rep = growth_report(join_power(2, 3), 2, opts);
    CHECK(rep.d == 2);
    CHECK(rep.deg_f == 6);
    CHECK(rep.deg_restriction == 3);
    CHECK(rep.rows[0].fix_count == 5);
    CHECK(rep.rows[0].fix_polar_count == 2);
    CHECK(rep.rows[1].fix_count == 35);
    CHECK(rep.rows[1].fix_polar_count == 8);
    for (const auto& row : rep.rows) CHECK(row.verdict());
    TheoremSummary s = verify_theorem1(rep);
    CHECK(s.failing_rows.empty());
    CHECK(s.corollary_applicable);
    CHECK(s.corollary_integer_ok);  // max(2,3)^2 = 9 >= 6
    CHECK(s.pass());
}

TEST_CASE("flagged continuum rows are excluded from the verdict") {
    GrowthReport rep = growth_report(power_s2(1), 2);
    REQUIRE(rep.rows.size() == 2);
    for (const auto& row : rep.rows) {
        CHECK(row.flagged());
        CHECK(row.continuum_flag);
        CHECK_FALSE(row.verdict());
    }
    TheoremSummary s = verify_theorem1(rep);
    CHECK(s.rows_flagged == 2);
    CHECK(s.rows_checked == 0);
    CHECK_FALSE(s.pass());  // nothing verified, nothing claimed
}

TEST_CASE("tampered counts fail verification with the row identified") {
    GrowthReport rep = growth_report(power_s2(2), 3);
    TheoremSummary before = verify_theorem1(rep);
    REQUIRE(before.pass());
    rep.rows[2].fix_count = 4;  // below bound 7 together with the two poles
    rep.rows[2].fix_polar_count = 2;
    TheoremSummary after = verify_theorem1(rep);
    CHECK_FALSE(after.pass());
    REQUIRE(after.failing_rows.size() == 1);
    CHECK(after.failing_rows[0] == 3);
}

TEST_CASE("liminf proxy clears the transversal growth target") {
    GrowthReport rep = growth_report(power_s2(2), 6);
    TheoremSummary s = verify_theorem1(rep);
    CHECK(s.liminf_ok);
    CHECK_THAT(s.liminf_target, Catch::Matchers::WithinAbs(std::log(2.0) - 0.05, 1e-12));
    REQUIRE(s.liminf_estimate.has_value());
    CHECK(*s.liminf_estimate >= s.liminf_target);
    CHECK(s.corollary_growth_ok);
}

TEST_CASE("off-polar fixed points fill the transversal shortfall at n=1") {
    // count off P >= |d-1| - 2 * count on P, the section-two tally
    struct Probe {
        SphereMap f;
    };
    for (long long d : {2ll, 3ll, -2ll, -5ll}) {
        DYNAMIC_SECTION("d=" << d) {
            SphereMap f = power_s2(d);
            auto pts = fixed_points_on_sphere(f, 1);
            auto pol = fixed_points_on_polar(f, 1);
            long long off = 0;
            for (const auto& p : pts)
                if (p.x.polar_radius() > 1e-6) ++off;
            CHECK(off >= std::llabs(d - 1) - 2 * (long long)pol.size());
        }
    }
}

TEST_CASE("census input validation rejects silly requests") {
    REQUIRE_THROWS_MATCHES(fixed_points_on_sphere(power_s2(2), 0), Error,
                           MessageMatches(ContainsSubstring("BadArgument")));
    REQUIRE_THROWS_MATCHES(growth_report(power_s2(2), 0), Error,
                           MessageMatches(ContainsSubstring("BadArgument")));
    REQUIRE_THROWS_MATCHES(growth_report(power_s2(2), 13), Error,
                           MessageMatches(ContainsSubstring("BadArgument")));
    SphereMap rough = power_s2(2);
    rough.c1 = false;
    REQUIRE_THROWS_MATCHES(growth_report(rough, 2), Error,
                           MessageMatches(ContainsSubstring("NotC1")));
}
