#pragma once

// Numeric minimization of g2 over the pair rate, plateau extraction,
// cascade-efficiency break-even search and parameter sweeps.

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heraldsim/analytic.hpp"
#include "heraldsim/detstate.hpp"
#include "heraldsim/minimize.hpp"
#include "heraldsim/parallel.hpp"
#include "heraldsim/types.hpp"

namespace heraldsim::opt {

/// g2 as a function of the primary pair rate N (pairs/s).
using G2Function = std::function<double(double)>;

struct NRange {
    double lo = 0.0;
    double hi = 0.0;
};

/// Optimum and plateau searches stay at N W <= 0.1. Beyond it the stage-1
/// herald of a cascaded source clicks in nearly every window and the source
/// degenerates into a directly pumped one at rate N P.
inline constexpr double kSearchMeanPairs = 0.1;

/// An evaluable model of g2(N) with the pair-rate range it can handle.
struct G2Model {
    G2Function g2;
    NRange search;                ///< default search range
    double max_pair_rate = 0.0;   ///< upper limit for searches
};

inline G2Model make_model(ModelKind kind, const ExperimentConfig& base, double epsilon = 1e-12) {
    G2Model m;
    switch (kind) {
        case ModelKind::Analytic: {
            auto g2 = base.source_kind == SourceKind::Spdc ? &analytic::g2_spdc : &analytic::g2_cspdc;
            m.g2 = [cfg = base, g2](double n) mutable {
                cfg.pair_rate = n;
                return g2(cfg).g2;
            };
            break;
        }
        case ModelKind::Matrix: {
            auto model = std::make_shared<const detstate::MatrixModel>(base, epsilon);
            m.g2 = [model](double n) { return model->g2_at(n).g2; };
            break;
        }
        case ModelKind::MonteCarlo:
            throw DomainError("pair-rate searches need the analytic or matrix model");
    }
    m.max_pair_rate = kSearchMeanPairs / base.window;
    m.search = {1e-3, m.max_pair_rate};
    return m;
}

struct MinimizeResult {
    double n_opt = 0.0;
    double g2_min = 0.0;
    bool degenerate = false;  ///< minimum on the boundary of the expanded range
    NRange searched;
};

/// Coarse log grid (50 points per decade) then golden-section refinement in
/// log N. A minimum on the range boundary triggers up to three expansions.
inline MinimizeResult minimize_g2(const G2Function& g2, NRange range, double max_pair_rate = INFINITY) {
    if (!(range.lo > 0 && range.hi > range.lo)) throw DomainError("pair-rate range must satisfy 0 < lo < hi");
    LogMinimizeOptions opt;
    opt.hard_hi = max_pair_rate;
    const auto m = minimize_log(g2, range.lo, range.hi, opt);
    return {m.x, m.fx, m.at_boundary, {m.lo, m.hi}};
}

inline MinimizeResult minimize_g2(ModelKind kind, const ExperimentConfig& base, std::optional<NRange> range = {},
                                  double epsilon = 1e-12) {
    const G2Model m = make_model(kind, base, epsilon);
    return minimize_g2(m.g2, range.value_or(m.search), m.max_pair_rate);
}

struct Plateau {
    double lo = 0.0;
    double hi = 0.0;
    double width_decades = 0.0;
    bool open_lo = false;  ///< still within tolerance at the lower search limit
    bool open_hi = false;
};

/// Pair-rate interval around the optimum where g2 <= (1 + delta) g2_min.
/// Edges are found by stepping out a decade at a time, then bisecting in log N.
inline Plateau plateau(const G2Function& g2, const MinimizeResult& best, double delta, NRange limits) {
    if (best.degenerate) throw DomainError("optimum lies on the search boundary; plateau undefined");
    if (!(delta >= 0)) throw DomainError("plateau tolerance must be >= 0");
    Plateau out{best.n_opt, best.n_opt, 0.0, false, false};
    if (delta == 0.0) return out;

    const double target = (1 + delta) * best.g2_min;
    auto excess = [&](double n) { return g2(n) - target; };
    auto edge = [&](double step, double limit, bool& open) {
        double inner = best.n_opt;
        for (;;) {
            double outer = inner * step;
            if ((step > 1 && outer >= limit) || (step < 1 && outer <= limit)) {
                outer = limit;
                if (excess(outer) <= 0) {
                    open = true;
                    return limit;
                }
                return bisect_log(excess, inner, outer);
            }
            if (excess(outer) > 0) return bisect_log(excess, inner, outer);
            inner = outer;
        }
    };
    out.lo = edge(0.1, limits.lo, out.open_lo);
    out.hi = edge(10.0, limits.hi, out.open_hi);
    out.width_decades = std::log10(out.hi / out.lo);
    return out;
}

/// Plateau limits: three decades beyond the searched range, capped by the model.
inline NRange plateau_limits(const G2Model& m, const MinimizeResult& best) {
    return {best.searched.lo * 1e-3, std::min(best.searched.hi * 1e3, m.max_pair_rate)};
}

inline Plateau plateau(ModelKind kind, const ExperimentConfig& base, double delta, double epsilon = 1e-12) {
    const G2Model m = make_model(kind, base, epsilon);
    const auto best = minimize_g2(m.g2, m.search, m.max_pair_rate);
    return plateau(m.g2, best, delta, plateau_limits(m, best));
}

enum class SweepParameter { PairRate, CascadeEfficiency, FigureOfMerit, Eta };
enum class Scale { Log, Linear };

inline std::string_view to_string(SweepParameter p) {
    switch (p) {
        case SweepParameter::PairRate: return "pair_rate";
        case SweepParameter::CascadeEfficiency: return "cascade_efficiency";
        case SweepParameter::FigureOfMerit: return "figure_of_merit";
        case SweepParameter::Eta: return "eta";
    }
    return "?";
}

/// Set one sweep parameter on a configuration. A figure of merit is applied
/// to every detector by adjusting its dark rate; an efficiency to every
/// detector as well.
inline ExperimentConfig apply_parameter(ExperimentConfig cfg, SweepParameter p, double v) {
    auto each_detector = [&cfg](auto&& fn) {
        fn(cfg.herald_stage2);
        if (cfg.herald_stage1) fn(*cfg.herald_stage1);
        fn(cfg.g2_a);
        fn(cfg.g2_b);
    };
    switch (p) {
        case SweepParameter::PairRate: cfg.pair_rate = v; break;
        case SweepParameter::CascadeEfficiency:
            if (cfg.source_kind == SourceKind::Cspdc) cfg.cascade_efficiency = v;
            break;
        case SweepParameter::FigureOfMerit:
            each_detector([&](DetectorSpec& d) { d.dark_rate = d.eta / (cfg.window * v); });
            break;
        case SweepParameter::Eta: each_detector([&](DetectorSpec& d) { d.eta = v; }); break;
    }
    return cfg;
}

struct SweepSpec {
    SweepParameter parameter = SweepParameter::PairRate;
    double from = 1.0;
    double to = 10.0;
    std::size_t points = 2;
    Scale scale = Scale::Log;
    ModelKind model = ModelKind::Analytic;
    ExperimentConfig base_cfg;
    double delta = 0.1;
    double epsilon = 1e-12;

    void validate() const {
        if (!(from < to)) throw ConfigError("sweep needs from < to");
        if (points < 2) throw ConfigError("sweep needs at least 2 points");
        if (scale == Scale::Log && !(from > 0)) throw ConfigError("log sweep needs from > 0");
        if (model == ModelKind::MonteCarlo) throw ConfigError("sweeps support the analytic and matrix models");
    }
};

/// Round to 9 significant digits, the precision written to result tables.
inline double round_sig9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8e", v);
    return std::strtod(buf, nullptr);
}

/// Grid points, rounded so that every written value re-parses exactly.
inline std::vector<double> sweep_grid(const SweepSpec& spec) {
    std::vector<double> xs(spec.points);
    for (std::size_t i = 0; i < spec.points; ++i) {
        const double t = double(i) / double(spec.points - 1);
        const double v = spec.scale == Scale::Log
                             ? std::exp(std::log(spec.from) + t * (std::log(spec.to) - std::log(spec.from)))
                             : spec.from + t * (spec.to - spec.from);
        xs[i] = round_sig9(v);
    }
    xs.front() = round_sig9(spec.from);
    xs.back() = round_sig9(spec.to);
    return xs;
}

struct SweepRow {
    double value = 0.0;
    SourceKind source = SourceKind::Spdc;
    ModelKind model = ModelKind::Analytic;
    std::optional<double> g2;
    std::optional<double> n_opt;
    std::optional<double> g2_min;
    std::optional<double> plateau_lo;
    std::optional<double> plateau_hi;
    std::string error;  ///< non-empty for a failed point
};

/// Sampled g2(N) with its optimum and plateau.
struct G2Curve {
    std::vector<std::pair<double, double>> samples;
    double n_opt = 0.0;
    double g2_min = 0.0;
    bool degenerate = false;
    std::optional<Plateau> plateau;
};

struct OptimumSummary {
    MinimizeResult best;
    std::optional<Plateau> plateau;
};

inline OptimumSummary summarize_optimum(const G2Model& m, double delta) {
    OptimumSummary s{minimize_g2(m.g2, m.search, m.max_pair_rate), std::nullopt};
    if (!s.best.degenerate) s.plateau = plateau(m.g2, s.best, delta, plateau_limits(m, s.best));
    return s;
}

/// Evaluate a sweep. A pair-rate sweep reports g2 at each N together with the
/// curve's optimum; any other parameter reports g2 at the configured N and the
/// optimum at each point. Points that fail become error rows.
inline std::vector<SweepRow> sweep(const SweepSpec& spec) {
    spec.validate();
    const auto grid = sweep_grid(spec);
    std::vector<SweepRow> rows(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rows[i].value = grid[i];
        rows[i].source = spec.base_cfg.source_kind;
        rows[i].model = spec.model;
    }

    auto fill = [&](SweepRow& row, const OptimumSummary& s) {
        row.n_opt = s.best.n_opt;
        row.g2_min = s.best.g2_min;
        if (s.plateau) {
            row.plateau_lo = s.plateau->lo;
            row.plateau_hi = s.plateau->hi;
        }
    };

    if (spec.parameter == SweepParameter::PairRate) {
        const G2Model m = make_model(spec.model, spec.base_cfg, spec.epsilon);
        std::optional<OptimumSummary> summary;
        std::string summary_error;
        try {
            summary = summarize_optimum(m, spec.delta);
        } catch (const std::exception& e) {
            summary_error = e.what();
        }
        parallel_for(grid.size(), [&](std::size_t i) {
            try {
                rows[i].g2 = m.g2(grid[i]);
                if (summary) fill(rows[i], *summary);
                else rows[i].error = summary_error;
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        });
        return rows;
    }

    parallel_for(grid.size(), [&](std::size_t i) {
        try {
            const auto cfg = apply_parameter(spec.base_cfg, spec.parameter, grid[i]);
            cfg.validate();
            const G2Model m = make_model(spec.model, cfg, spec.epsilon);
            rows[i].g2 = m.g2(cfg.pair_rate);
            const auto s = summarize_optimum(m, spec.delta);
            fill(rows[i], s);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

inline G2Curve g2_curve(ModelKind kind, const ExperimentConfig& base, double from, double to, std::size_t points,
                        double delta = 0.1, double epsilon = 1e-12) {
    SweepSpec spec;
    spec.from = from;
    spec.to = to;
    spec.points = points;
    spec.model = kind;
    spec.base_cfg = base;
    spec.delta = delta;
    spec.epsilon = epsilon;
    spec.validate();
    const G2Model m = make_model(kind, base, epsilon);
    G2Curve curve;
    for (double n : sweep_grid(spec)) curve.samples.emplace_back(n, m.g2(n));
    const auto s = summarize_optimum(m, delta);
    curve.n_opt = s.best.n_opt;
    curve.g2_min = s.best.g2_min;
    curve.degenerate = s.best.degenerate;
    curve.plateau = s.plateau;
    return curve;
}

/// Minimum g2 over the pair rate for the chosen model. The analytic model
/// uses the closed-form minima.
inline double min_g2(ModelKind kind, const ExperimentConfig& cfg, double epsilon = 1e-12) {
    if (kind == ModelKind::Analytic)
        return cfg.source_kind == SourceKind::Spdc ? analytic::g2_spdc_min(cfg).g2_min
                                                   : analytic::g2_cspdc_min(cfg).g2_min;
    return minimize_g2(kind, cfg, std::nullopt, epsilon).g2_min;
}

struct ThresholdCrossing {
    enum class Status { Crossing, AlwaysAdvantageous, NeverAdvantageous };
    Status status = Status::Crossing;
    double p_star = 0.0;               ///< numeric break-even cascade efficiency
    double p_threshold = 0.0;          ///< closed-form general threshold
    double p_threshold_identical = 0.0;  ///< simplified identical-detector threshold
    double relative_difference = 0.0;  ///< (p_star - p_threshold) / p_threshold
    double g2_spdc_min = 0.0;
};

/// Bisect log P in [1e-12, 1] for g2_C,min(P) = g2_S,min.
inline ThresholdCrossing threshold_crossing(const ExperimentConfig& base, ModelKind kind, double epsilon = 1e-12) {
    if (base.source_kind != SourceKind::Cspdc) throw DomainError("threshold search needs a cspdc configuration");
    base.validate();
    ThresholdCrossing out;
    const auto h1 = FigureOfMerit::of(base.herald_stage2, base.window);
    const auto hab = FigureOfMerit::of(base.g2_a, base.window);
    out.p_threshold = analytic::advantage_threshold(h1, hab, base.herald_stage2.eta);
    out.p_threshold_identical = analytic::advantage_threshold_identical(h1, base.herald_stage2.eta);
    out.g2_spdc_min = min_g2(kind, base.as_spdc(), epsilon);

    auto gap = [&](double p) {
        ExperimentConfig c = base;
        c.cascade_efficiency = p;
        return min_g2(kind, c, epsilon) - out.g2_spdc_min;
    };
    constexpr double kLo = 1e-12;
    constexpr double kHi = 1.0;
    if (gap(kLo) <= 0) {
        out.status = ThresholdCrossing::Status::AlwaysAdvantageous;
        out.p_star = 0.0;
    } else if (gap(kHi) >= 0) {
        out.status = ThresholdCrossing::Status::NeverAdvantageous;
        out.p_star = INFINITY;
    } else {
        out.p_star = bisect_log(gap, kLo, kHi, 1e-7);
    }
    out.relative_difference =
        out.p_threshold > 0 ? (out.p_star - out.p_threshold) / out.p_threshold : INFINITY;
    return out;
}

}  // namespace heraldsim::opt
