#include <cmath>

#include <doctest.h>

#include "heraldsim/detstate.hpp"
#include "heraldsim/mc_oracle.hpp"

using namespace heraldsim;

namespace {

ExperimentConfig busy_cspdc() {
    ExperimentConfig c;
    c.window = 1e-8;
    c.source_kind = SourceKind::Cspdc;
    c.pair_rate = 4e6;
    c.cascade_efficiency = 0.5;
    c.herald_stage2 = {0.8, 1000};
    c.herald_stage1 = DetectorSpec{0.9, 2000};
    c.g2_a = {0.7, 500};
    c.g2_b = {0.6, 800};
    return c;
}

ExperimentConfig busy_spdc() {
    ExperimentConfig c;
    c.window = 1e-8;
    c.pair_rate = 5e6;
    c.herald_stage2 = {0.6, 1e4};
    c.g2_a = {0.8, 2e4};
    c.g2_b = {0.5, 5e3};
    return c;
}

}  // namespace

TEST_SUITE("mc") {

TEST_CASE("window streams are reproducible and distinct") {
    mc::WindowRng a(1, 7), b(1, 7), c(1, 8), d(2, 7);
    const auto x = a.next();
    CHECK(x == b.next());
    CHECK(x != c.next());
    CHECK(x != d.next());
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("tally is independent of the shard count") {
    const mc::SimulationPlan plan{busy_cspdc(), 200000, 99};
    const auto one = mc::simulate(plan, 1);
    CHECK(mc::simulate(plan, 3) == one);
    CHECK(mc::simulate(plan, 8) == one);
    CHECK(mc::simulate(plan, 1) == one);
    CHECK_FALSE(mc::simulate({busy_cspdc(), 200000, 100}, 1) == one);
}

TEST_CASE("coincidence counts form a hierarchy") {
    const auto t = mc::simulate({busy_cspdc(), 100000, 3}, 2);
    std::uint64_t total = 0;
    for (std::uint8_t m = 0; m < 16; ++m) total += t.pattern_count(RoleSet::from_bits(m));
    CHECK(total == t.n_windows());
    for (std::uint8_t big = 1; big < 16; ++big)
        for (std::uint8_t small = 1; small < 16; ++small) {
            const auto b = RoleSet::from_bits(big);
            const auto s = RoleSet::from_bits(small);
            if (b.contains(s)) CHECK(t.count(b) <= t.count(s));
        }
    // SPDC runs never produce a stage-one herald click
    const auto s = mc::simulate({busy_spdc(), 10000, 3}, 2);
    CHECK(s.count({Role::Herald2}) == 0);
}

TEST_CASE("counts agree with the detector-state model") {
    for (const auto& cfg : {busy_cspdc(), busy_spdc()}) {
        const std::uint64_t n = 400000;
        const auto t = mc::simulate({cfg, n, 17}, 4);
        const detstate::MatrixModel model(cfg);
        const auto state = model.state_at(cfg.pair_rate);
        for (std::uint32_t m = 1; m < model.bank().states(); ++m) {
            const RoleSet roles = model.bank().roles(m);
            const double p = detstate::event_probability(model.bank(), state, roles);
            INFO("roles ", roles.label());
            CHECK(mc::count_consistent(t.count(roles), n, p));
        }
        const auto est = mc::g2_estimate(t, cfg.window);
        const double exact = model.g2_at(cfg.pair_rate).g2;
        CHECK(std::abs(est.g2 - exact) <= 3 * *est.statistical_sigma);
    }
}

TEST_CASE("small counts use exact Poisson tails") {
    CHECK(mc::count_consistent(0, 1000000, 1e-6));
    CHECK(mc::count_consistent(3, 1000000, 1e-6));
    CHECK_FALSE(mc::count_consistent(8, 1000000, 1e-6));
    CHECK(mc::count_consistent(0, 1000000, 0.0));
    CHECK_FALSE(mc::count_consistent(1, 1000000, 0.0));
    CHECK(mc::count_consistent(1000, 10000, 0.1));
    CHECK_FALSE(mc::count_consistent(1100, 10000, 0.1));
}

TEST_CASE("sigma shrinks as one over root n") {
    const auto cfg = busy_spdc();
    const auto a = mc::g2_estimate(mc::simulate({cfg, 200000, 5}, 4), cfg.window);
    const auto b = mc::g2_estimate(mc::simulate({cfg, 800000, 5}, 4), cfg.window);
    CHECK(*a.statistical_sigma / *b.statistical_sigma == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("deterministic triplets") {
    // perfect detectors, at most one pair per window almost surely: g2 is 0
    ExperimentConfig c;
    c.window = 1e-9;
    c.pair_rate = 1e5;
    c.herald_stage2 = c.g2_a = c.g2_b = {1.0, 0.0};
    const auto t = mc::simulate({c, 1000000, 1}, 2);
    CHECK(t.count({Role::Herald1}) > 50);
    CHECK(t.count({Role::A, Role::B}) == 0);
    CHECK(t.count({Role::Herald1}) == t.count({Role::Herald1, Role::A}) + t.count({Role::Herald1, Role::B}));
    const auto est = mc::g2_estimate(t, c.window);
    CHECK(est.g2 == 0.0);
    REQUIRE(est.upper_bound);
    CHECK(*est.upper_bound > 0.0);
}

TEST_CASE("no heralds is an estimation error") {
    ExperimentConfig c;
    c.window = 1e-9;
    c.pair_rate = 1;
    c.herald_stage2 = c.g2_a = c.g2_b = {0.5, 0.0};
    CHECK_THROWS_AS(mc::g2_estimate(mc::simulate({c, 1000, 1}, 1), c.window), EstimationError);
    CHECK_THROWS_AS(mc::simulate({c, 0, 1}, 1), ConfigError);
}

}  // TEST_SUITE
