#include <array>
#include <cmath>
#include <random>

#include <doctest.h>

#include "heraldsim/analytic.hpp"
#include "heraldsim/detstate.hpp"

using namespace heraldsim;
using namespace heraldsim::detstate;

namespace {

bool close(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

// W = 1 s so that rates equal per-window means.
ExperimentConfig spdc_oracle_cfg() {
    ExperimentConfig c;
    c.window = 1.0;
    c.pair_rate = 1e-2;
    c.herald_stage2 = {0.6, 1e-3};
    c.g2_a = {0.8, 2e-3};
    c.g2_b = {0.5, 5e-4};
    return c;
}

ExperimentConfig cspdc_oracle_cfg() {
    ExperimentConfig c;
    c.window = 1.0;
    c.source_kind = SourceKind::Cspdc;
    c.pair_rate = 2e-2;
    c.cascade_efficiency = 0.3;
    c.herald_stage2 = {0.6, 1e-3};
    c.herald_stage1 = DetectorSpec{0.9, 2e-3};
    c.g2_a = {0.7, 5e-4};
    c.g2_b = {0.75, 1e-4};
    return c;
}

ExperimentConfig symmetric(SourceKind kind, double n, double eta, double d, double w, double p = 1e-3) {
    ExperimentConfig c;
    c.window = w;
    c.source_kind = kind;
    c.pair_rate = n;
    c.herald_stage2 = c.g2_a = c.g2_b = {eta, d};
    if (kind == SourceKind::Cspdc) {
        c.herald_stage1 = DetectorSpec{eta, d};
        c.cascade_efficiency = p;
    }
    return c;
}

}  // namespace

TEST_SUITE("detstate") {

TEST_CASE("bank layout") {
    const auto s = DetectorBank::for_config(spdc_oracle_cfg());
    CHECK(s.size() == 3);
    CHECK(s.bit(Role::Herald1) == 1);
    CHECK(s.bit(Role::A) == 2);
    CHECK(s.bit(Role::B) == 4);
    CHECK_FALSE(s.has(Role::Herald2));
    CHECK(s.roles(7) == RoleSet{Role::Herald1, Role::A, Role::B});
    const auto c = DetectorBank::for_config(cspdc_oracle_cfg());
    CHECK(c.size() == 4);
    CHECK(c.mask({Role::Herald2, Role::B}) == 10);
}

TEST_CASE("single-detector dark matrix") {
    const DetectorBank bank({{Role::Herald1, {0.5, 0.1}}});
    const auto m = build_dark_matrix(bank, 1.0);
    const double q = -std::expm1(-0.1);
    CHECK(m(0, 0) == doctest::Approx(1 - q));
    CHECK(m(1, 0) == doctest::Approx(q));
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 1) == 1.0);
}

TEST_CASE("pair matrix of a single herald and beamsplitter") {
    const auto c = spdc_oracle_cfg();
    const auto bank = DetectorBank::for_config(c);
    const auto m = build_pair_matrix(bank, c);
    // from the empty state one pair lights 1 with eta1 and A with etaA/2
    CHECK(m(1 | 2, 0) == doctest::Approx(0.6 * 0.4));
    CHECK(m(1 | 4, 0) == doctest::Approx(0.6 * 0.25));
    CHECK(m(0, 0) == doctest::Approx(0.4 * 0.35));
    // nothing turns a clicked detector off
    CHECK(m(0, 1) == 0.0);
    CHECK(m(1, 1) == doctest::Approx(0.35));
}

TEST_CASE("structural invariants") {
    for (const auto& c : {spdc_oracle_cfg(), cspdc_oracle_cfg()}) {
        const MatrixModel model(c);
        for (const auto* m : {&model.dark_matrix(), &model.pair_matrix()}) {
            CHECK(m->column_sum_error() < 1e-14);
            CHECK(m->entries_are_probabilities());
            CHECK(m->monotone());
        }
        const auto ab = model.dark_matrix() * model.pair_matrix();
        const auto ba = model.pair_matrix() * model.dark_matrix();
        for (std::size_t i = 0; i < ab.dim(); ++i)
            for (std::size_t j = 0; j < ab.dim(); ++j) CHECK(std::abs(ab(i, j) - ba(i, j)) < 1e-15);
        CHECK(std::abs(model.state_at(c.pair_rate).total() - 1) < 1e-12);
    }
}

// Probability that every detector of the mask clicked, from exhaustive
// enumeration of photon numbers and detector outcomes.
TEST_CASE("spdc state matches exhaustive enumeration") {
    constexpr std::array<double, 8> oracle = {0,
                                              0.006975557066764895,
                                              0.0059820359460647356,
                                              0.0024135750350818095,
                                              0.0029955044966270241,
                                              0.0015070844263586253,
                                              1.7919215575421409e-5,
                                              1.257053672096511e-5};
    const auto c = spdc_oracle_cfg();
    const auto bank = DetectorBank::for_config(c);
    const auto s = final_state(c, 1e-15);
    for (std::uint32_t m = 1; m < 8; ++m) CHECK(close(event_probability(bank, s, bank.roles(m)), oracle[m], 1e-10));
    CHECK(close(g2_matrix(spdc_oracle_cfg(), 1e-15).g2, 0.024106509426959952, 1e-10));
}

TEST_CASE("cspdc state matches exhaustive enumeration") {
    constexpr std::array<double, 16> oracle = {0,
                                               0.0045894362040277505,
                                               0.019801326693244699,
                                               0.0032572720852622138,
                                               0.0025966229274302564,
                                               0.0012636660525046281,
                                               0.0019009288699977963,
                                               0.0011394631447796991,
                                               0.0023472409117090135,
                                               0.0013523278873346456,
                                               0.002028728104019144,
                                               0.0012197820489689577,
                                               6.0948995675459227e-6,
                                               4.7626089489538066e-6,
                                               5.8688357362427926e-6,
                                               4.6451181213331339e-6};
    const auto c = cspdc_oracle_cfg();
    const auto bank = DetectorBank::for_config(c);
    const auto s = final_state(c, 1e-15);
    for (std::uint32_t m = 1; m < 16; ++m) CHECK(close(event_probability(bank, s, bank.roles(m)), oracle[m], 1e-10));
    CHECK(close(g2_matrix(cspdc_oracle_cfg(), 1e-15).g2, 0.010885998724983683, 1e-10));
}

TEST_CASE("poisson weights") {
    const auto w = poisson_weights(1.0, 1e-12);
    CHECK(w.cutoff() == 14);
    CHECK(w.weights[0] == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    CHECK(w.tail_mass <= 1e-12);
    CHECK_THROWS_AS(poisson_weights(kMaxMeanPairs * 1.01, 1e-12), ResourceError);
    CHECK_THROWS_AS(final_state(symmetric(SourceKind::Spdc, 1e11, 0.7, 20, 1e-9)), ResourceError);
}

TEST_CASE("truncation does not move g2") {
    for (double mu : {1e-6, 1e-3, 1e-1, 2.0}) {
        for (auto kind : {SourceKind::Spdc, SourceKind::Cspdc}) {
            const auto c = symmetric(kind, mu / 1e-9, 0.7, 200, 1e-9);
            const double tight = g2_matrix(c, 1e-14).g2;
            CHECK(close(g2_matrix(c, 1e-10).g2, tight, 1e-6));
            CHECK(close(g2_matrix(c, 1e-12).g2, tight, 1e-8));
        }
    }
}

TEST_CASE("rates are ordered by inclusion") {
    const auto c = cspdc_oracle_cfg();
    const MatrixModel model(c);
    const auto r = rates_from_state(model.bank(), model.state_at(c.pair_rate), c.window);
    for (const auto& [big, rb] : r.all())
        for (const auto& [small, rs] : r.all())
            if (big.contains(small)) CHECK(rb <= rs * (1 + 1e-14));
}

TEST_CASE("spdc agrees with the analytic model at low pair rate") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double eta = 0.5 + 0.5 * u(rng);
        const double w = std::pow(10.0, -9 - u(rng));
        const double d = std::pow(10.0, 1 + 3 * u(rng));
        const double mu = std::pow(10.0, -6 + 4 * u(rng));
        const auto c = symmetric(SourceKind::Spdc, mu / w, eta, d, w);
        CHECK(close(g2_matrix(c).g2, analytic::g2_spdc(c).g2, 0.10));
    }
}

TEST_CASE("cspdc minimum agrees with the closed form") {
    const auto c = symmetric(SourceKind::Cspdc, 1, 0.7, 20, 5e-9, 1e-6);
    const double closed = analytic::g2_cspdc_min(c).g2_min;
    ExperimentConfig probe = c;
    double best = INFINITY;
    for (double n = 1e3; n < 1e6; n *= 1.05) {
        probe.pair_rate = n;
        best = std::min(best, g2_matrix(probe).g2);
    }
    CHECK(close(best, closed, 1e-3));
}

TEST_CASE("errors") {
    auto c = spdc_oracle_cfg();
    c.herald_stage2.eta = 0;
    c.herald_stage2.dark_rate = 0;
    CHECK_THROWS_AS(g2_matrix(c), DomainError);
    c = spdc_oracle_cfg();
    c.pair_rate = -1;
    CHECK_THROWS_AS(g2_matrix(c), ConfigError);
}

}  // TEST_SUITE
