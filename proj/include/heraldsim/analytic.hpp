#pragma once

// Closed-form coincidence-rate model of SPDC and cascaded-SPDC heralded
// sources, valid for low pair rates (N W << 1) and rare dark counts.

#include <cmath>
#include <limits>

#include "heraldsim/errors.hpp"
#include "heraldsim/minimize.hpp"
#include "heraldsim/types.hpp"

namespace heraldsim::analytic {

namespace detail {

inline void require_kind(const ExperimentConfig& cfg, SourceKind kind) {
    if (cfg.source_kind != kind)
        throw DomainError(std::string("expected a ") + std::string(to_string(kind)) + " configuration");
}

inline void require_symmetric(const ExperimentConfig& cfg) {
    if (!cfg.symmetric_g2_detectors())
        throw DomainError("analytic model assumes identical g2 detectors A and B");
}

inline double inv(FigureOfMerit h) { return h.infinite() ? 0.0 : 1.0 / h.value; }

}  // namespace detail

/// Pair rate and g2 at the optimum of a g2(N) curve.
struct Optimum {
    double g2_min = 0.0;
    double n_opt = 0.0;
    bool degenerate = false;  ///< no interior optimum (minimum approached as N -> 0)
};

/// Singles S1, S_A, S_B, doubles D_1A, D_1B and triples T_1AB of a directly
/// pumped source.
inline RateSet spdc_rates(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, SourceKind::Spdc);
    detail::require_symmetric(cfg);
    if (!(cfg.pair_rate > 0)) throw DomainError("pair rate must be > 0");
    if (!(cfg.window > 0)) throw DomainError("coincidence window must be > 0");

    const double n = cfg.pair_rate;
    const double w = cfg.window;
    const double eta1 = cfg.herald_stage2.eta;
    const double d1 = cfg.herald_stage2.dark_rate;
    const double eta_ab = cfg.g2_a.eta;
    const double d_ab = cfg.g2_a.dark_rate;

    const double s1 = n * eta1 + d1;
    const double s_ab = n * eta_ab / 2 + d_ab;
    const double d_1x = n * eta1 * eta_ab / 2;
    // the last term removes double pairs counted once through each detector
    const double t_1ab = d_1x * s_ab * w + d_1x * s_ab * w - d_1x * d_1x * w;

    RateSet r;
    r.set({Role::Herald1}, s1);
    r.set({Role::A}, s_ab);
    r.set({Role::B}, s_ab);
    r.set({Role::Herald1, Role::A}, d_1x);
    r.set({Role::Herald1, Role::B}, d_1x);
    r.set({Role::Herald1, Role::A, Role::B}, t_1ab);
    return r;
}

inline G2Result g2_spdc(const ExperimentConfig& cfg) {
    RateSet rates = spdc_rates(cfg);
    const double eta1 = cfg.herald_stage2.eta;
    const double eta_ab = cfg.g2_a.eta;
    if (eta1 == 0.0 || eta_ab == 0.0) throw DomainError("no heralded coincidences with zero efficiency");
    const double n = cfg.pair_rate;
    const double w = cfg.window;
    const double g2 = (4 * cfg.g2_a.dark_rate / (n * eta1 * eta_ab) + 2 / eta1 - 1) *
                      (n * w * eta1 + w * cfg.herald_stage2.dark_rate);
    return {g2, ModelKind::Analytic, std::move(rates), std::nullopt, std::nullopt};
}

/// Minimum of g2_spdc over the pair rate; `cfg.pair_rate` is ignored.
///
/// g2(N) = K + a/N + bN, so N_opt = sqrt(a/b) = sqrt(4 d_AB d1 / (eta_AB eta1 (2 - eta1))).
/// With either dark rate zero the minimum is only approached as N -> 0.
inline Optimum g2_spdc_min(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, SourceKind::Spdc);
    detail::require_symmetric(cfg);
    const double eta1 = cfg.herald_stage2.eta;
    const double eta_ab = cfg.g2_a.eta;
    if (eta1 == 0.0 || eta_ab == 0.0) throw DomainError("no heralded coincidences with zero efficiency");
    const FigureOfMerit h1 = FigureOfMerit::of(cfg.herald_stage2, cfg.window);
    const FigureOfMerit hab = FigureOfMerit::of(cfg.g2_a, cfg.window);

    const double root = 2 * std::sqrt(detail::inv(hab)) + std::sqrt((2 - eta1) * detail::inv(h1));
    Optimum out;
    out.g2_min = root * root;
    out.n_opt = std::sqrt(4 * cfg.g2_a.dark_rate * cfg.herald_stage2.dark_rate / (eta_ab * eta1 * (2 - eta1)));
    out.degenerate = out.n_opt == 0.0;
    return out;
}

/// Triples T_12A, T_12B, herald doubles D_12 and the fourfold F of a cascaded
/// source. Detector 1 (cascade herald) is taken as dark-dominated, S1 ~ d1.
inline RateSet cspdc_rates(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, SourceKind::Cspdc);
    if (!cfg.cascade_efficiency || !cfg.herald_stage1)
        throw ConfigError("cspdc configuration needs cascade_efficiency and herald_stage1");
    detail::require_symmetric(cfg);
    if (!(cfg.pair_rate > 0)) throw DomainError("pair rate must be > 0");
    if (!(cfg.window > 0)) throw DomainError("coincidence window must be > 0");

    const double n = cfg.pair_rate;
    const double w = cfg.window;
    const double p = *cfg.cascade_efficiency;
    const double eta1 = cfg.herald_stage2.eta;
    const double d1 = cfg.herald_stage2.dark_rate;
    const double eta2 = cfg.herald_stage1->eta;
    const double d2 = cfg.herald_stage1->dark_rate;
    const double eta_ab = cfg.g2_a.eta;
    const double d_ab = cfg.g2_a.dark_rate;

    const double s2 = n * eta2 + d2;
    const double t_12x = n * p * eta1 * eta2 * eta_ab / 2;
    const double d_12 = s2 * d1 * w + n * p * eta1 * eta2;
    const double miss2 = 1 - eta2;
    const double miss1 = 1 - eta1;
    const double f = 2 * t_12x * d_ab * w +
                     (1 - miss2 * miss2) * (1 - miss1 * miss1) * n * n * eta_ab * eta_ab * w / 2;

    RateSet r;
    r.set({Role::Herald1}, d1);
    r.set({Role::Herald2}, s2);
    r.set({Role::Herald1, Role::Herald2}, d_12);
    r.set({Role::Herald1, Role::Herald2, Role::A}, t_12x);
    r.set({Role::Herald1, Role::Herald2, Role::B}, t_12x);
    r.set({Role::Herald1, Role::Herald2, Role::A, Role::B}, f);
    return r;
}

inline G2Result g2_cspdc(const ExperimentConfig& cfg) {
    RateSet rates = cspdc_rates(cfg);
    const double t_a = rates.at({Role::Herald1, Role::Herald2, Role::A});
    const double t_b = rates.at({Role::Herald1, Role::Herald2, Role::B});
    if (t_a == 0.0 || t_b == 0.0) throw DomainError("no heralded triples: T_12A = 0");
    const double f = rates.at({Role::Herald1, Role::Herald2, Role::A, Role::B});
    const double d_12 = rates.at({Role::Herald1, Role::Herald2});
    return {f * d_12 / (t_a * t_b), ModelKind::Analytic, std::move(rates), std::nullopt, std::nullopt};
}

/// Closed-form minimum of the cascaded g2 together with the pair rate that
/// minimizes g2_cspdc numerically (no closed form exists for it).
struct CascadeOptimum : Optimum {
    double g2_at_n_opt = 0.0;  ///< g2_cspdc evaluated at n_opt
};

inline CascadeOptimum g2_cspdc_min(const ExperimentConfig& cfg) {
    detail::require_kind(cfg, SourceKind::Cspdc);
    if (!cfg.cascade_efficiency || !cfg.herald_stage1)
        throw ConfigError("cspdc configuration needs cascade_efficiency and herald_stage1");
    detail::require_symmetric(cfg);
    const double p = *cfg.cascade_efficiency;
    if (p == 0.0) throw DomainError("cascade efficiency P = 0: no cascaded pairs");
    const double eta1 = cfg.herald_stage2.eta;
    const double eta2 = cfg.herald_stage1->eta;
    const double inv_h1 = detail::inv(FigureOfMerit::of(cfg.herald_stage2, cfg.window));
    const double inv_h2 = detail::inv(FigureOfMerit::of(*cfg.herald_stage1, cfg.window));
    const double inv_hab = detail::inv(FigureOfMerit::of(cfg.g2_a, cfg.window));

    const double root = 2 * std::sqrt(inv_hab) * std::sqrt(1 + inv_h1 / p) +
                        std::sqrt((2 - eta1) * (2 - eta2) * inv_h1 * inv_h2);
    CascadeOptimum out;
    out.g2_min = root * root;

    ExperimentConfig probe = cfg;
    auto g2_of = [&probe](double n) {
        probe.pair_rate = n;
        return g2_cspdc(probe).g2;
    };
    const auto m = minimize_log(g2_of, 1e-6, 1.0 / cfg.window);
    out.n_opt = m.x;
    out.g2_at_n_opt = m.fx;
    out.degenerate = m.at_boundary;
    return out;
}

/// Smallest cascade efficiency for which the cascaded minimum g2 beats the
/// direct one, in the general-detector form. Infinite H_AB gives 0.
inline double advantage_threshold(FigureOfMerit h1, FigureOfMerit hab, double eta1) {
    if (hab.infinite()) return 0.0;
    if (h1.infinite()) return 0.0;
    return 1.0 / (h1.value + (2 - eta1) / 4 * hab.value + std::sqrt((2 - eta1) * hab.value * h1.value));
}

/// F(eta) = sqrt(2 - eta) + (2 - eta)/4, between 1.25 (eta = 1) and ~1.914 (eta = 0).
inline double f_factor(double eta) {
    if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("efficiency must lie in [0, 1]");
    return std::sqrt(2 - eta) + (2 - eta) / 4;
}

/// Simplified threshold for identical detectors, P > 1/(H F(eta)).
///
/// Differs from advantage_threshold with H1 = H_AB = H, which gives
/// 1/(H (1 + F(eta))); both are exposed so the discrepancy can be reported.
inline double advantage_threshold_identical(FigureOfMerit h, double eta) {
    if (h.infinite()) return 0.0;
    return 1.0 / (h.value * f_factor(eta));
}

/// Ratio g2_S,min / g2_C,min for identical detectors.
inline double improvement_ratio(double eta, double p, FigureOfMerit h) {
    const double inv_ph = h.infinite() ? 0.0 : 1.0 / (p * h.value);
    return (1 + f_factor(eta)) / (1 + inv_ph);
}

struct PerfectDetectorLimits {
    double g2_s_min = 0.0;
    double g2_c_min = 0.0;
    double ratio = 0.0;
    bool ratio_infinite = false;
};

/// Minimum g2 of both sources when the g2 detectors have no dark counts, so
/// only multi-pair events contaminate the output.
inline PerfectDetectorLimits perfect_g2_detector_limits(const ExperimentConfig& cfg) {
    if (cfg.g2_a.dark_rate != 0.0 || cfg.g2_b.dark_rate != 0.0)
        throw DomainError("perfect-detector limits need dark-free g2 detectors");
    if (!cfg.herald_stage1) throw ConfigError("missing key detectors.herald_stage1 (stage-one herald)");
    const double eta1 = cfg.herald_stage2.eta;
    const double eta2 = cfg.herald_stage1->eta;
    const FigureOfMerit h1 = FigureOfMerit::of(cfg.herald_stage2, cfg.window);
    const FigureOfMerit h2 = FigureOfMerit::of(*cfg.herald_stage1, cfg.window);
    PerfectDetectorLimits out;
    out.g2_s_min = (2 - eta1) * detail::inv(h1);
    out.g2_c_min = (2 - eta1) * (2 - eta2) * detail::inv(h1) * detail::inv(h2);
    out.ratio_infinite = h1.infinite() || h2.infinite();
    out.ratio = h2.infinite() ? std::numeric_limits<double>::infinity() : h2.value / (2 - eta2);
    return out;
}

}  // namespace heraldsim::analytic
