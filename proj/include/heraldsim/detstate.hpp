#pragma once

// Bucket-detector state model: a probability vector over the 2^k click
// patterns of a detector bank, driven by column-stochastic transition
// matrices for dark counts and for each generated primary pair.
//
// State index bit j is set when bank detector j has clicked. Bank order is
// (1, A, B) for SPDC and (1, 2, A, B) for CSPDC.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/types.hpp"

namespace heraldsim::detstate {

/// Largest mean pair number per window the model will evaluate.
inline constexpr double kMaxMeanPairs = 50.0;

class DetectorBank {
  public:
    struct Entry {
        Role role;
        DetectorSpec spec;
    };

    explicit DetectorBank(std::vector<Entry> detectors) : detectors_(std::move(detectors)) {
        std::uint8_t seen = 0;
        for (const auto& e : detectors_) {
            const auto bit = std::uint8_t(1u << static_cast<unsigned>(e.role));
            if (seen & bit) throw ConfigError("duplicate detector role in bank");
            seen |= bit;
        }
    }

    static DetectorBank for_config(const ExperimentConfig& cfg) {
        if (cfg.source_kind == SourceKind::Spdc)
            return DetectorBank({{Role::Herald1, cfg.herald_stage2}, {Role::A, cfg.g2_a}, {Role::B, cfg.g2_b}});
        if (!cfg.herald_stage1) throw ConfigError("missing key detectors.herald_stage1 (required for cspdc)");
        return DetectorBank({{Role::Herald1, cfg.herald_stage2},
                             {Role::Herald2, *cfg.herald_stage1},
                             {Role::A, cfg.g2_a},
                             {Role::B, cfg.g2_b}});
    }

    std::size_t size() const { return detectors_.size(); }
    std::size_t states() const { return std::size_t(1) << detectors_.size(); }
    const Entry& operator[](std::size_t j) const { return detectors_[j]; }

    bool has(Role r) const {
        for (const auto& e : detectors_)
            if (e.role == r) return true;
        return false;
    }

    std::uint32_t bit(Role r) const {
        for (std::size_t j = 0; j < detectors_.size(); ++j)
            if (detectors_[j].role == r) return 1u << j;
        throw DomainError(std::string("detector ") + role_label(r) + " is not part of this bank");
    }

    const DetectorSpec& spec(Role r) const {
        for (const auto& e : detectors_)
            if (e.role == r) return e.spec;
        throw DomainError(std::string("detector ") + role_label(r) + " is not part of this bank");
    }

    /// State-index mask of a role set.
    std::uint32_t mask(RoleSet roles) const {
        std::uint32_t m = 0;
        for (Role r : {Role::Herald1, Role::Herald2, Role::A, Role::B})
            if (roles.contains(r)) m |= bit(r);
        return m;
    }

    /// Role set of a state-index mask.
    RoleSet roles(std::uint32_t mask) const {
        std::uint8_t bits = 0;
        for (std::size_t j = 0; j < detectors_.size(); ++j)
            if (mask & (1u << j)) bits |= std::uint8_t(1u << static_cast<unsigned>(detectors_[j].role));
        return RoleSet::from_bits(bits);
    }

  private:
    std::vector<Entry> detectors_;
};

class StateVector {
  public:
    StateVector() = default;
    explicit StateVector(std::vector<double> probs) : probs_(std::move(probs)) {}

    /// All detectors off.
    static StateVector initial(std::size_t n_detectors) {
        std::vector<double> p(std::size_t(1) << n_detectors, 0.0);
        p[0] = 1.0;
        return StateVector(std::move(p));
    }

    std::size_t size() const { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    double& operator[](std::size_t i) { return probs_[i]; }
    std::span<const double> probs() const { return probs_; }

    double total() const {
        double s = 0;
        for (double p : probs_) s += p;
        return s;
    }

    void axpy(double a, const StateVector& x) {
        for (std::size_t i = 0; i < probs_.size(); ++i) probs_[i] += a * x.probs_[i];
    }

  private:
    std::vector<double> probs_;
};

/// One random "firing" event: with probability `prob` the detectors in
/// `mask` click (in addition to whatever already clicked).
struct FireOutcome {
    std::uint32_t mask;
    double prob;
};

class TransitionMatrix {
  public:
    TransitionMatrix() = default;
    explicit TransitionMatrix(std::size_t dim) : dim_(dim), m_(dim * dim, 0.0) {}

    static TransitionMatrix identity(std::size_t dim) {
        TransitionMatrix t(dim);
        for (std::size_t i = 0; i < dim; ++i) t(i, i) = 1.0;
        return t;
    }

    /// Matrix of the map "state s -> s | mask with probability prob". Built
    /// this way every matrix is column-stochastic and never switches a
    /// detector off.
    static TransitionMatrix from_outcomes(std::size_t dim, std::span<const FireOutcome> outcomes) {
        TransitionMatrix t(dim);
        for (std::size_t from = 0; from < dim; ++from)
            for (const auto& o : outcomes) t(from | o.mask, from) += o.prob;
        return t;
    }

    std::size_t dim() const { return dim_; }
    double operator()(std::size_t to, std::size_t from) const { return m_[to * dim_ + from]; }
    double& operator()(std::size_t to, std::size_t from) { return m_[to * dim_ + from]; }

    StateVector apply(const StateVector& v) const {
        std::vector<double> out(dim_, 0.0);
        for (std::size_t to = 0; to < dim_; ++to) {
            double s = 0;
            for (std::size_t from = 0; from < dim_; ++from) s += m_[to * dim_ + from] * v[from];
            out[to] = s;
        }
        return StateVector(std::move(out));
    }

    TransitionMatrix operator*(const TransitionMatrix& o) const {
        TransitionMatrix out(dim_);
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t k = 0; k < dim_; ++k)
                for (std::size_t j = 0; j < dim_; ++j) out(i, j) += (*this)(i, k) * o(k, j);
        return out;
    }

    /// Largest deviation of a column sum from 1.
    double column_sum_error() const {
        double worst = 0;
        for (std::size_t from = 0; from < dim_; ++from) {
            double s = 0;
            for (std::size_t to = 0; to < dim_; ++to) s += (*this)(to, from);
            worst = std::max(worst, std::abs(s - 1.0));
        }
        return worst;
    }

    /// Entries lie in [0, 1] up to rounding of `tol`.
    bool entries_are_probabilities(double tol = 1e-14) const {
        for (double x : m_)
            if (!(x >= 0.0 && x <= 1.0 + tol)) return false;
        return true;
    }

    /// No probability flows from a state to one with fewer clicked detectors.
    bool monotone() const {
        for (std::size_t from = 0; from < dim_; ++from)
            for (std::size_t to = 0; to < dim_; ++to)
                if ((to & from) != from && (*this)(to, from) != 0.0) return false;
        return true;
    }

  private:
    std::size_t dim_ = 0;
    std::vector<double> m_;
};

/// Dark counts: detector j fires on its own with probability 1 - exp(-d_j W),
/// independently of the others.
inline TransitionMatrix build_dark_matrix(const DetectorBank& bank, double window) {
    if (!(window > 0)) throw DomainError("coincidence window must be > 0");
    std::vector<FireOutcome> outcomes{{0u, 1.0}};
    for (std::size_t j = 0; j < bank.size(); ++j) {
        const double q = -std::expm1(-bank[j].spec.dark_rate * window);
        std::vector<FireOutcome> next;
        next.reserve(outcomes.size() * 2);
        for (const auto& o : outcomes) {
            next.push_back({o.mask, o.prob * (1 - q)});
            next.push_back({o.mask | (1u << j), o.prob * q});
        }
        outcomes = std::move(next);
    }
    return TransitionMatrix::from_outcomes(bank.states(), outcomes);
}

/// Click outcomes of a single photon sent through the 50:50 beamsplitter.
inline std::vector<FireOutcome> beamsplitter_outcomes(const DetectorBank& bank) {
    const double pa = bank.spec(Role::A).eta / 2;
    const double pb = bank.spec(Role::B).eta / 2;
    return {{bank.bit(Role::A), pa}, {bank.bit(Role::B), pb}, {0u, 1 - pa - pb}};
}

/// Click outcomes of one generated primary pair.
///
/// SPDC: the idler fires detector 1 with probability eta_1 and the signal
/// goes to A or B through the beamsplitter. CSPDC: the idler fires detector 2
/// with probability eta_2; the signal converts with probability P into a
/// secondary pair routed like an SPDC pair.
inline std::vector<FireOutcome> pair_outcomes(const DetectorBank& bank, const ExperimentConfig& cfg) {
    const bool cascade = cfg.source_kind == SourceKind::Cspdc;
    if (bank.has(Role::Herald2) != cascade || !bank.has(Role::Herald1) || !bank.has(Role::A) || !bank.has(Role::B))
        throw ConfigError("detector bank does not match the source topology");

    const double eta1 = cfg.herald_stage2.eta;
    std::vector<FireOutcome> secondary;
    for (const auto& s : beamsplitter_outcomes(bank)) {
        secondary.push_back({s.mask | bank.bit(Role::Herald1), s.prob * eta1});
        secondary.push_back({s.mask, s.prob * (1 - eta1)});
    }
    if (!cascade) return secondary;

    if (!cfg.cascade_efficiency || !cfg.herald_stage1)
        throw ConfigError("cspdc configuration needs cascade_efficiency and herald_stage1");
    const double p = *cfg.cascade_efficiency;
    const double eta2 = cfg.herald_stage1->eta;
    std::vector<FireOutcome> out;
    for (const auto& [h2_mask, h2_prob] : {FireOutcome{bank.bit(Role::Herald2), eta2}, FireOutcome{0u, 1 - eta2}}) {
        out.push_back({h2_mask, h2_prob * (1 - p)});
        for (const auto& s : secondary) out.push_back({h2_mask | s.mask, h2_prob * p * s.prob});
    }
    return out;
}

inline TransitionMatrix build_pair_matrix(const DetectorBank& bank, const ExperimentConfig& cfg) {
    const auto outcomes = pair_outcomes(bank, cfg);
    return TransitionMatrix::from_outcomes(bank.states(), outcomes);
}

/// Truncated Poisson photon-pair number distribution for one window.
struct PhotonNumberWeights {
    double mean = 0.0;
    std::vector<double> weights;  ///< p_0 ... p_n, untruncated pmf values
    double truncation_epsilon = 0.0;
    double tail_mass = 0.0;       ///< P(i > n)

    std::size_t cutoff() const { return weights.size() - 1; }
};

namespace detail {

/// P(X > n) for X ~ Poisson(mean).
inline double poisson_upper_tail(std::size_t n, double mean) {
    if (mean == 0.0) return 0.0;
    return boost::math::gamma_p(double(n) + 1.0, mean);
}

}  // namespace detail

/// Poisson weights truncated at the smallest n whose upper tail is at most
/// `epsilon * p_ref`, where p_ref = 1 for `reference_order` 0 and the pmf
/// at `reference_order` otherwise.
///
/// A reference order keeps the truncation error small relative to events
/// that need several pairs, whose probabilities can be far below epsilon.
inline PhotonNumberWeights poisson_weights(double mean, double epsilon, unsigned reference_order = 0) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("mean pair number must be finite and >= 0");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("truncation epsilon must lie in (0, 1)");
    if (mean > kMaxMeanPairs)
        throw ResourceError("mean pairs per window N*W = " + std::to_string(mean) + " exceeds " +
                            std::to_string(kMaxMeanPairs) +
                            "; the detector-state model targets N*W << 1, lower pair_rate_hz or coincidence_window_s");

    PhotonNumberWeights out;
    out.mean = mean;
    out.truncation_epsilon = epsilon;
    double bound = epsilon;
    if (reference_order > 0 && mean > 0.0)
        bound *= std::exp(-mean + double(reference_order) * std::log(mean) - std::lgamma(double(reference_order) + 1));

    double p = std::exp(-mean);
    out.weights.push_back(p);
    constexpr std::size_t kMaxTerms = 4096;
    for (std::size_t i = 0;; ++i) {
        const double tail = detail::poisson_upper_tail(i, mean);
        if (tail <= bound) {
            out.tail_mass = tail;
            break;
        }
        if (i + 1 >= kMaxTerms) throw ResourceError("Poisson truncation needs more than 4096 terms");
        p *= mean / double(i + 1);
        out.weights.push_back(p);
    }
    return out;
}

/// Caches the two transition matrices of a configuration; only the Poisson
/// weights depend on the pair rate.
class MatrixModel {
  public:
    explicit MatrixModel(const ExperimentConfig& cfg, double epsilon = 1e-12)
        : cfg_(cfg),
          bank_(DetectorBank::for_config(cfg)),
          dark_(build_dark_matrix(bank_, cfg.window)),
          pair_(build_pair_matrix(bank_, cfg)),
          epsilon_(epsilon) {}

    const DetectorBank& bank() const { return bank_; }
    const TransitionMatrix& dark_matrix() const { return dark_; }
    const TransitionMatrix& pair_matrix() const { return pair_; }
    const ExperimentConfig& config() const { return cfg_; }

    /// sum_i p_i M_pair^i M_dark P0, accumulated with a running product.
    StateVector state_at(double pair_rate) const {
        const auto w = poisson_weights(pair_rate * cfg_.window, epsilon_, unsigned(bank_.size()));
        StateVector v = dark_.apply(StateVector::initial(bank_.size()));
        StateVector acc(std::vector<double>(bank_.states(), 0.0));
        for (std::size_t i = 0; i < w.weights.size(); ++i) {
            if (i > 0) v = pair_.apply(v);
            acc.axpy(w.weights[i], v);
        }
        return acc;
    }

    G2Result g2_at(double pair_rate) const;

  private:
    ExperimentConfig cfg_;
    DetectorBank bank_;
    TransitionMatrix dark_;
    TransitionMatrix pair_;
    double epsilon_;
};

inline StateVector final_state(const ExperimentConfig& cfg, double epsilon = 1e-12) {
    return MatrixModel(cfg, epsilon).state_at(cfg.pair_rate);
}

/// Probability that every detector in `on_set` clicked, others unconstrained.
inline double event_probability(const DetectorBank& bank, const StateVector& state, RoleSet on_set) {
    const std::uint32_t m = bank.mask(on_set);
    double s = 0;
    for (std::size_t i = 0; i < state.size(); ++i)
        if ((i & m) == m) s += state[i];
    return s;
}

/// Rates (probability / W) of every non-empty coincidence of the bank.
inline RateSet rates_from_state(const DetectorBank& bank, const StateVector& state, double window) {
    RateSet r;
    for (std::uint32_t m = 1; m < bank.states(); ++m) {
        const RoleSet roles = bank.roles(m);
        r.set(roles, event_probability(bank, state, roles) / window);
    }
    return r;
}

/// Heralded g2 from per-window click probabilities; the window factors cancel.
inline double g2_from_probabilities(double p_all, double p_herald, double p_herald_a, double p_herald_b) {
    if (p_herald_a <= 0.0 || p_herald_b <= 0.0)
        throw DomainError("heralded coincidences have zero probability; g2 undefined");
    return p_all * p_herald / (p_herald_a * p_herald_b);
}

inline G2Result MatrixModel::g2_at(double pair_rate) const {
    const StateVector s = state_at(pair_rate);
    const RoleSet h = herald_roles(cfg_.source_kind);
    const double g2 = g2_from_probabilities(event_probability(bank_, s, h | RoleSet{Role::A, Role::B}),
                                            event_probability(bank_, s, h),
                                            event_probability(bank_, s, h | RoleSet{Role::A}),
                                            event_probability(bank_, s, h | RoleSet{Role::B}));
    return {g2, ModelKind::Matrix, rates_from_state(bank_, s, cfg_.window), std::nullopt, std::nullopt};
}

inline G2Result g2_matrix(const ExperimentConfig& cfg, double epsilon = 1e-12) {
    cfg.validate();
    return MatrixModel(cfg, epsilon).g2_at(cfg.pair_rate);
}

}  // namespace heraldsim::detstate
