#pragma once

// Window-by-window Monte Carlo of the click statistics. Shares no code with
// the detector-state model so the two can check each other.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/distributions/poisson.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/parallel.hpp"
#include "heraldsim/types.hpp"

namespace heraldsim::mc {

struct SimulationPlan {
    ExperimentConfig cfg;
    std::uint64_t n_windows = 1;
    std::uint64_t seed = 0;
};

/// Counter-based random stream: window w of run `seed` always sees the same
/// numbers, so sharding windows across threads cannot change a tally.
///
/// The stream is SplitMix64 started from mix(seed ^ mix(w + 1)). Changing
/// this changes every tally; keep it stable.
class WindowRng {
  public:
    WindowRng(std::uint64_t seed, std::uint64_t window) : state_(mix(seed ^ mix(window + 1))) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::uint64_t state_;
};

/// Histogram of click patterns over simulated windows. Patterns are indexed
/// by RoleSet bits (1, 2, A, B), whatever the source topology.
class CountTally {
  public:
    CountTally() = default;
    CountTally(SourceKind kind, std::uint64_t n_windows) : kind_(kind), n_windows_(n_windows) {}

    SourceKind source_kind() const { return kind_; }
    std::uint64_t n_windows() const { return n_windows_; }

    void add_pattern(RoleSet pattern, std::uint64_t count = 1) { patterns_[pattern.bits()] += count; }
    std::uint64_t pattern_count(RoleSet pattern) const { return patterns_[pattern.bits()]; }

    /// Windows in which every detector of `roles` clicked.
    std::uint64_t count(RoleSet roles) const {
        std::uint64_t s = 0;
        for (std::uint8_t m = 0; m < 16; ++m)
            if (RoleSet::from_bits(m).contains(roles)) s += patterns_[m];
        return s;
    }
    double frequency(RoleSet roles) const { return double(count(roles)) / double(n_windows_); }

    /// Roles present in this topology.
    RoleSet detectors() const {
        return kind_ == SourceKind::Spdc ? RoleSet{Role::Herald1, Role::A, Role::B}
                                         : RoleSet{Role::Herald1, Role::Herald2, Role::A, Role::B};
    }

    CountTally& operator+=(const CountTally& o) {
        for (std::size_t m = 0; m < 16; ++m) patterns_[m] += o.patterns_[m];
        return *this;
    }

    friend bool operator==(const CountTally&, const CountTally&) = default;

  private:
    SourceKind kind_ = SourceKind::Spdc;
    std::uint64_t n_windows_ = 0;
    std::array<std::uint64_t, 16> patterns_{};
};

namespace detail {

struct WindowSampler {
    explicit WindowSampler(const ExperimentConfig& cfg) : cfg(cfg), cascade(cfg.source_kind == SourceKind::Cspdc) {
        auto dark_prob = [&](const DetectorSpec& d) { return -std::expm1(-d.dark_rate * cfg.window); };
        darks.push_back({Role::Herald1, dark_prob(cfg.herald_stage2)});
        if (cascade) darks.push_back({Role::Herald2, dark_prob(*cfg.herald_stage1)});
        darks.push_back({Role::A, dark_prob(cfg.g2_a)});
        darks.push_back({Role::B, dark_prob(cfg.g2_b)});

        // inverse-CDF table for the pair number; the neglected tail is below
        // the resolution of a 53-bit uniform
        const double mean = cfg.mean_pairs();
        double p = std::exp(-mean);
        double c = p;
        cdf.push_back(c);
        for (std::size_t i = 1; 1.0 - c > 0x1.0p-60 && i < 100000; ++i) {
            p *= mean / double(i);
            c += p;
            if (i > mean && p < 0x1.0p-80) break;
            cdf.push_back(c);
        }
        cdf.back() = 2.0;
        to_a = cfg.g2_a.eta / 2;
        to_b = cfg.g2_b.eta / 2;
    }

    // Photon through the 50:50 beamsplitter into A or B.
    void signal(WindowRng& rng, RoleSet& fired) const {
        const double u = rng.uniform();
        if (u < to_a) fired = fired | RoleSet{Role::A};
        else if (u < to_a + to_b) fired = fired | RoleSet{Role::B};
    }

    RoleSet sample(WindowRng& rng) const {
        RoleSet fired;
        for (const auto& [role, q] : darks)
            if (rng.uniform() < q) fired = fired | RoleSet{role};

        const double u = rng.uniform();
        std::size_t pairs = 0;
        while (u >= cdf[pairs]) ++pairs;

        for (std::size_t i = 0; i < pairs; ++i) {
            if (cascade) {
                if (rng.uniform() < cfg.herald_stage1->eta) fired = fired | RoleSet{Role::Herald2};
                if (!(rng.uniform() < *cfg.cascade_efficiency)) continue;
            }
            if (rng.uniform() < cfg.herald_stage2.eta) fired = fired | RoleSet{Role::Herald1};
            signal(rng, fired);
        }
        return fired;
    }

    struct Dark {
        Role role;
        double prob;
    };
    const ExperimentConfig& cfg;
    bool cascade;
    std::vector<Dark> darks;
    std::vector<double> cdf;
    double to_a = 0;
    double to_b = 0;
};

}  // namespace detail

/// Simulate `plan.n_windows` independent coincidence windows. The tally is
/// identical for any shard count.
inline CountTally simulate(const SimulationPlan& plan, unsigned shards = worker_count()) {
    if (plan.n_windows < 1) throw ConfigError("n_windows must be >= 1");
    plan.cfg.validate();
    const detail::WindowSampler sampler(plan.cfg);

    shards = unsigned(std::max<std::uint64_t>(1, std::min<std::uint64_t>(shards, plan.n_windows)));
    std::vector<CountTally> partial(shards, CountTally(plan.cfg.source_kind, plan.n_windows));
    parallel_for(
        shards,
        [&](std::size_t s) {
            const std::uint64_t begin = plan.n_windows * s / shards;
            const std::uint64_t end = plan.n_windows * (s + 1) / shards;
            std::array<std::uint64_t, 16> local{};
            for (std::uint64_t w = begin; w < end; ++w) {
                WindowRng rng(plan.seed, w);
                ++local[sampler.sample(rng).bits()];
            }
            for (std::uint8_t m = 0; m < 16; ++m) partial[s].add_pattern(RoleSet::from_bits(m), local[m]);
        },
        shards);

    CountTally total(plan.cfg.source_kind, plan.n_windows);
    for (const auto& p : partial) total += p;
    return total;
}

/// 95% one-sided upper limit on a Poisson mean after observing zero events.
inline constexpr double kZeroCountUpperLimit = 2.995732273553991;

/// Plug-in heralded g2 from window frequencies. Sigma propagates binomial
/// standard errors of the four counts as if they were independent.
inline G2Result g2_estimate(const CountTally& tally, double window) {
    const RoleSet h = herald_roles(tally.source_kind());
    const auto c_h = double(tally.count(h));
    const auto c_ha = double(tally.count(h | RoleSet{Role::A}));
    const auto c_hb = double(tally.count(h | RoleSet{Role::B}));
    const auto c_all = double(tally.count(h | RoleSet{Role::A, Role::B}));
    if (c_h == 0 || c_ha == 0 || c_hb == 0)
        throw EstimationError("no heralded coincidences in " + std::to_string(tally.n_windows()) +
                              " windows; simulate more windows");

    const auto n = double(tally.n_windows());
    G2Result out;
    out.model = ModelKind::MonteCarlo;
    out.g2 = c_all * c_h / (c_ha * c_hb);
    if (c_all == 0) {
        out.statistical_sigma = 0.0;
        out.upper_bound = kZeroCountUpperLimit * c_h / (c_ha * c_hb);
    } else {
        double rel_var = 0;
        for (double c : {c_all, c_h, c_ha, c_hb}) rel_var += (1 - c / n) / c;
        out.statistical_sigma = out.g2 * std::sqrt(rel_var);
    }
    const RoleSet present = tally.detectors();
    for (std::uint8_t m = 1; m < 16; ++m) {
        const RoleSet s = RoleSet::from_bits(m);
        if (present.contains(s)) out.rates.set(s, tally.frequency(s) / window);
    }
    return out;
}

/// Is `count` successes in `n` trials consistent with probability `p` at the
/// `nsigma` level? Uses the normal approximation when n p >= 25 and exact
/// Poisson tails with the same two-sided coverage below that.
inline bool count_consistent(std::uint64_t count, std::uint64_t n, double p, double nsigma = 3.0) {
    const double lambda = double(n) * p;
    if (lambda >= 25.0)
        return std::abs(double(count) - lambda) <= nsigma * std::sqrt(lambda * (1 - p));
    if (lambda <= 0.0) return count == 0;
    const double alpha = 0.5 * std::erfc(nsigma / std::sqrt(2.0));
    const boost::math::poisson_distribution<double> dist(lambda);
    const double below = boost::math::cdf(dist, double(count));
    const double above = count == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, double(count - 1)));
    return below >= alpha && above >= alpha;
}

/// Standardized distance of `count` from n p; for reporting.
inline double count_z(std::uint64_t count, std::uint64_t n, double p) {
    const double lambda = double(n) * p;
    const double sd = std::sqrt(lambda * (1 - p));
    if (sd == 0) return count == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (double(count) - lambda) / sd;
}

}  // namespace heraldsim::mc
