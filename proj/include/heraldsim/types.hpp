#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "heraldsim/errors.hpp"

namespace heraldsim {

/// One bucket (click / no-click) detector.
struct DetectorSpec {
    double eta = 1.0;        ///< Klyshko efficiency of the arm, in [0, 1]
    double dark_rate = 0.0;  ///< dark counts per second

    void validate(std::string_view name) const {
        if (!(eta >= 0.0 && eta <= 1.0))
            throw ConfigError(std::string(name) + ".eta must lie in [0, 1], got " + std::to_string(eta));
        if (!(dark_rate >= 0.0) || !std::isfinite(dark_rate))
            throw ConfigError(std::string(name) + ".dark_hz must be finite and >= 0, got " +
                              std::to_string(dark_rate));
    }

    friend bool operator==(const DetectorSpec&, const DetectorSpec&) = default;
};

enum class SourceKind { Spdc, Cspdc };

inline std::string_view to_string(SourceKind kind) { return kind == SourceKind::Spdc ? "spdc" : "cspdc"; }

/// Source and detector topology.
///
/// Detector naming follows the click roles: detector "1" always heralds the
/// photon that reaches the g2 beamsplitter (the only herald for SPDC, the
/// cascade-stage herald for CSPDC); detector "2" heralds the first crystal's
/// other photon and exists only for CSPDC.
struct ExperimentConfig {
    double window = 0.0;     ///< coincidence window W, seconds
    SourceKind source_kind = SourceKind::Spdc;
    double pair_rate = 0.0;  ///< primary pair rate N, pairs per second
    std::optional<double> cascade_efficiency;  ///< P, CSPDC only
    DetectorSpec herald_stage2;                ///< detector "1"
    std::optional<DetectorSpec> herald_stage1; ///< detector "2", CSPDC only
    DetectorSpec g2_a;
    DetectorSpec g2_b;

    /// Mean number of primary pairs per coincidence window.
    double mean_pairs() const { return pair_rate * window; }

    bool symmetric_g2_detectors() const { return g2_a == g2_b; }

    void validate() const {
        if (!(window > 0.0) || !std::isfinite(window))
            throw ConfigError("coincidence_window_s must be > 0");
        if (!(pair_rate > 0.0) || !std::isfinite(pair_rate))
            throw ConfigError("source.pair_rate_hz must be > 0");
        herald_stage2.validate("detectors.herald_stage2");
        g2_a.validate("detectors.g2_a");
        g2_b.validate("detectors.g2_b");
        if (source_kind == SourceKind::Spdc) {
            if (herald_stage1) throw ConfigError("detectors.herald_stage1 is only allowed for cspdc sources");
            if (cascade_efficiency) throw ConfigError("source.cascade_efficiency is only allowed for cspdc sources");
            return;
        }
        if (!herald_stage1) throw ConfigError("missing key detectors.herald_stage1 (required for cspdc)");
        if (!cascade_efficiency) throw ConfigError("missing key source.cascade_efficiency (required for cspdc)");
        herald_stage1->validate("detectors.herald_stage1");
        if (!(*cascade_efficiency >= 0.0 && *cascade_efficiency <= 1.0))
            throw ConfigError("source.cascade_efficiency must lie in [0, 1]");
    }

    /// The plain-SPDC counterpart: same crystal pumped directly, same herald
    /// (detector 1) and g2 detectors.
    ExperimentConfig as_spdc() const {
        ExperimentConfig out = *this;
        out.source_kind = SourceKind::Spdc;
        out.cascade_efficiency.reset();
        out.herald_stage1.reset();
        return out;
    }
};

enum class Role : std::uint8_t { Herald1 = 0, Herald2 = 1, A = 2, B = 3 };

inline char role_label(Role r) {
    switch (r) {
        case Role::Herald1: return '1';
        case Role::Herald2: return '2';
        case Role::A: return 'A';
        case Role::B: return 'B';
    }
    return '?';
}

/// A set of detector roles, e.g. {1, A} for the D_1A coincidence.
class RoleSet {
  public:
    constexpr RoleSet() = default;
    constexpr RoleSet(std::initializer_list<Role> roles) {
        for (Role r : roles) bits_ |= bit(r);
    }
    static constexpr RoleSet from_bits(std::uint8_t bits) {
        RoleSet s;
        s.bits_ = bits & 0xF;
        return s;
    }

    constexpr bool contains(Role r) const { return (bits_ & bit(r)) != 0; }
    constexpr bool contains(RoleSet other) const { return (bits_ & other.bits_) == other.bits_; }
    constexpr int size() const { return std::popcount(bits_); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint8_t bits() const { return bits_; }

    constexpr RoleSet operator|(RoleSet o) const { return from_bits(bits_ | o.bits_); }

    /// "1A", "12AB", ... in the fixed order 1, 2, A, B.
    std::string label() const {
        std::string out;
        for (Role r : {Role::Herald1, Role::Herald2, Role::A, Role::B})
            if (contains(r)) out += role_label(r);
        return out;
    }

    friend constexpr auto operator<=>(RoleSet, RoleSet) = default;

  private:
    static constexpr std::uint8_t bit(Role r) { return std::uint8_t(1u << static_cast<unsigned>(r)); }
    std::uint8_t bits_ = 0;
};

/// Singles, doubles, triples and fourfold rates in counts per second, keyed by
/// the set of detectors that must all click.
class RateSet {
  public:
    void set(RoleSet roles, double rate) { rates_[roles] = rate; }
    std::optional<double> find(RoleSet roles) const {
        auto it = rates_.find(roles);
        if (it == rates_.end()) return std::nullopt;
        return it->second;
    }
    double at(RoleSet roles) const {
        auto it = rates_.find(roles);
        if (it == rates_.end()) throw DomainError("rate " + roles.label() + " not available");
        return it->second;
    }
    const std::map<RoleSet, double>& all() const { return rates_; }
    bool empty() const { return rates_.empty(); }

  private:
    std::map<RoleSet, double> rates_;
};

/// Detector figure of merit H = eta / (W d); infinite for a dark-free detector.
struct FigureOfMerit {
    double value = 0.0;

    static FigureOfMerit of(const DetectorSpec& det, double window) {
        if (det.dark_rate == 0.0) return {std::numeric_limits<double>::infinity()};
        return {det.eta / (window * det.dark_rate)};
    }
    bool infinite() const { return std::isinf(value); }
};

enum class ModelKind { Analytic, Matrix, MonteCarlo };

inline std::string_view to_string(ModelKind m) {
    switch (m) {
        case ModelKind::Analytic: return "analytic";
        case ModelKind::Matrix: return "matrix";
        case ModelKind::MonteCarlo: return "mc";
    }
    return "?";
}

struct G2Result {
    double g2 = 0.0;
    ModelKind model = ModelKind::Analytic;
    RateSet rates;
    std::optional<double> statistical_sigma;  ///< Monte Carlo only
    std::optional<double> upper_bound;        ///< one-sided bound when the numerator count is zero
};

/// Detectors whose joint click heralds an output photon.
inline RoleSet herald_roles(SourceKind kind) {
    return kind == SourceKind::Spdc ? RoleSet{Role::Herald1} : RoleSet{Role::Herald1, Role::Herald2};
}

}  // namespace heraldsim
