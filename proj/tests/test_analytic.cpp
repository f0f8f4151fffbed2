#include <cmath>
#include <random>

#include <doctest.h>

#include "heraldsim/analytic.hpp"

using namespace heraldsim;
using doctest::Approx;

namespace {

ExperimentConfig spdc(double n, double eta, double d, double w) {
    ExperimentConfig c;
    c.window = w;
    c.source_kind = SourceKind::Spdc;
    c.pair_rate = n;
    c.herald_stage2 = {eta, d};
    c.g2_a = {eta, d};
    c.g2_b = {eta, d};
    return c;
}

ExperimentConfig cspdc(double n, double eta, double d, double w, double p) {
    ExperimentConfig c = spdc(n, eta, d, w);
    c.source_kind = SourceKind::Cspdc;
    c.cascade_efficiency = p;
    c.herald_stage1 = DetectorSpec{eta, d};
    return c;
}

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

}  // namespace

TEST_SUITE("analytic") {

TEST_CASE("g2_spdc matches the high-precision oracle") {
    const auto r = analytic::g2_spdc(spdc(1e5, 0.7, 20, 5e-9));
    CHECK(close(r.g2, 0.000650757306122449, 1e-12));
    CHECK(r.model == ModelKind::Analytic);
    CHECK(r.rates.at({Role::Herald1}) == Approx(1e5 * 0.7 + 20));
    CHECK(r.rates.at({Role::Herald1, Role::A}) == Approx(1e5 * 0.49 / 2));
}

TEST_CASE("closed-form minimum and optimal pair rate") {
    const auto o = analytic::g2_spdc_min(spdc(1, 0.7, 20, 5e-9));
    CHECK(close(o.g2_min, 1.4086716714852218e-06, 1e-12));
    CHECK(close(o.n_opt, 50.117601103258814, 1e-12));
    // numeric minimum from the oracle, limited by its golden-section tolerance
    CHECK(close(o.n_opt, 50.11760108438429, 1e-8));
    CHECK_FALSE(o.degenerate);
    // the closed form is the exact minimum of the curve
    auto c = spdc(o.n_opt, 0.7, 20, 5e-9);
    CHECK(close(analytic::g2_spdc(c).g2, o.g2_min, 1e-12));
    for (double f : {0.9, 1.1}) {
        c.pair_rate = o.n_opt * f;
        CHECK(analytic::g2_spdc(c).g2 > o.g2_min);
    }
}

TEST_CASE("dark-free detectors give a degenerate optimum") {
    auto c = spdc(1, 0.7, 0, 5e-9);
    const auto o = analytic::g2_spdc_min(c);
    CHECK(o.degenerate);
    CHECK(o.g2_min == 0.0);
}

TEST_CASE("cascaded rates and closed-form minimum") {
    const auto c = cspdc(1e5, 0.7, 20, 5e-9, 1e-6);
    const auto r = analytic::cspdc_rates(cspdc(1e6, 0.7, 20, 5e-9, 1e-6));
    CHECK(close(r.at({Role::Herald1, Role::Herald2, Role::A}), 0.1715, 1e-12));
    CHECK(close(r.at({Role::Herald1, Role::Herald2}), 0.560002, 1e-12));
    CHECK(r.at({Role::Herald1}) == 20);
    const auto o = analytic::g2_cspdc_min(c);
    CHECK(close(o.g2_min, 6.533614185928303e-07, 1e-12));
    CHECK(close(analytic::g2_spdc_min(c.as_spdc()).g2_min / o.g2_min, 2.1560374264509408, 1e-12));
}

TEST_CASE("fourfold rate formula sits far above the closed-form minimum") {
    // the two-pair term carries no factor P, so the curve minimum is set by it
    const auto c = cspdc(1, 0.7, 20, 5e-9, 1e-6);
    const auto o = analytic::g2_cspdc_min(c);
    CHECK(o.g2_at_n_opt > 1e4 * o.g2_min);
    CHECK(o.n_opt < 1.0);
}

TEST_CASE("figure of merit and F factor") {
    CHECK(FigureOfMerit::of({0.7, 20}, 5e-9).value == Approx(7e6));
    CHECK(FigureOfMerit::of({0.7, 0}, 5e-9).infinite());
    CHECK(close(analytic::f_factor(0.7), 1.465175425099138, 1e-14));
    CHECK(close(analytic::f_factor(0.0), 1.9142135623730951, 1e-14));
    CHECK(analytic::f_factor(1.0) == 1.25);
    CHECK_THROWS_AS(analytic::f_factor(1.5), DomainError);
    CHECK_THROWS_AS(analytic::f_factor(-0.1), DomainError);
}

TEST_CASE("advantage thresholds") {
    const FigureOfMerit h{7e6};
    CHECK(close(analytic::advantage_threshold(h, h, 0.7), 5.795009207160086e-08, 1e-12));
    CHECK(close(analytic::advantage_threshold_identical(h, 0.7), 9.750173283685586e-08, 1e-12));
    CHECK(close(analytic::improvement_ratio(0.7, 1e-6, h), 2.157028496961746, 1e-12));
    const FigureOfMerit inf = FigureOfMerit::of({0.7, 0}, 5e-9);
    CHECK(analytic::advantage_threshold(h, inf, 0.7) == 0.0);
    CHECK(analytic::advantage_threshold_identical(inf, 0.7) == 0.0);
    CHECK(analytic::improvement_ratio(0.7, 1e-6, inf) == Approx(1 + analytic::f_factor(0.7)));
}

TEST_CASE("perfect g2 detectors") {
    auto c = cspdc(1, 0.7, 10, 2e-9, 1e-6);
    c.g2_a.dark_rate = c.g2_b.dark_rate = 0;
    const auto lim = analytic::perfect_g2_detector_limits(c);
    CHECK(close(lim.g2_s_min, 3.7142857142857144e-08, 1e-12));
    CHECK(close(lim.ratio, 26923076.923076924, 1e-12));
    CHECK_FALSE(lim.ratio_infinite);
    c.g2_a.dark_rate = 1;
    CHECK_THROWS_AS(analytic::perfect_g2_detector_limits(c), DomainError);
}

TEST_CASE("domain errors") {
    auto c = spdc(1e5, 0.7, 20, 5e-9);
    c.g2_b.eta = 0.6;
    CHECK_THROWS_AS(analytic::g2_spdc(c), DomainError);
    c = spdc(1e5, 0.0, 20, 5e-9);
    CHECK_THROWS_AS(analytic::g2_spdc(c), DomainError);
    CHECK_THROWS_AS(analytic::g2_cspdc(cspdc(1e5, 0.7, 20, 5e-9, 0.0)), DomainError);
    CHECK_THROWS_AS(analytic::g2_cspdc_min(cspdc(1e5, 0.7, 20, 5e-9, 0.0)), DomainError);
    CHECK_THROWS_AS(analytic::g2_spdc(cspdc(1e5, 0.7, 20, 5e-9, 0.1)), DomainError);
}

TEST_CASE("properties over a parameter grid") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> eta(0.05, 1.0);
    std::uniform_real_distribution<double> lg(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double e = eta(rng);
        const double d = std::pow(10.0, -1 + 4 * lg(rng));
        const double w = std::pow(10.0, -10 + 2 * lg(rng));
        const double p = std::pow(10.0, -9 + 9 * lg(rng));
        const auto s = analytic::g2_spdc_min(spdc(1, e, d, w));
        // increasing in the dark rate, decreasing in the efficiency
        CHECK(analytic::g2_spdc_min(spdc(1, e, 2 * d, w)).g2_min > s.g2_min);
        CHECK(analytic::g2_spdc_min(spdc(1, std::min(1.0, e * 1.1), d, w)).g2_min < s.g2_min);
        // depends on d and W only through H
        CHECK(close(analytic::g2_spdc_min(spdc(1, e, 3 * d, w / 3)).g2_min, s.g2_min, 1e-12));
        // the improvement never exceeds 1 + F(0)
        const auto c = analytic::g2_cspdc_min(cspdc(1, e, d, w, p));
        CHECK(s.g2_min / c.g2_min < 1 + analytic::f_factor(0.0));
        // the closed forms change order at the threshold they imply
        const FigureOfMerit h = FigureOfMerit::of({e, d}, w);
        const double pt = analytic::advantage_threshold(h, h, e);
        if (pt < 0.5) {
            const double below = analytic::g2_cspdc_min(cspdc(1, e, d, w, pt / 2)).g2_min;
            const double above = analytic::g2_cspdc_min(cspdc(1, e, d, w, pt * 2)).g2_min;
            CHECK(below > s.g2_min * (1 - 1e-12));
            CHECK(above < s.g2_min * (1 + 1e-12));
        }
    }
}

}  // TEST_SUITE
