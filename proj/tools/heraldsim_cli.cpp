// heraldsim: heralded g2 of SPDC and cascaded-SPDC sources from the command line.
//
//   heraldsim g2 CONFIG [--model analytic|matrix|mc] [--windows N] [--seed S]
//   heraldsim min CONFIG [--model analytic|matrix]
//   heraldsim sweep CONFIG --param P --from X --to Y --points K [--log|--linear] [--source S] [--out FILE]
//   heraldsim criterion CONFIG [--model analytic|matrix]
//   heraldsim validate CONFIG [--windows N] [--seed S]
//
// Exit codes: 0 success, 1 usage/config error, 2 model-domain error,
// 3 validation failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "heraldsim/heraldsim.hpp"

namespace {

using namespace heraldsim;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitValidation = 3;

struct Options {
    std::string config;
    std::string model = "matrix";
    double windows = 1e7;
    std::uint64_t seed = 42;
    unsigned threads = 0;
    std::string param;
    double from = 0;
    double to = 0;
    std::size_t points = 0;
    bool linear = false;
    std::string source;
    std::string out;
};

ModelKind parse_model(const std::string& s) {
    if (s == "analytic") return ModelKind::Analytic;
    if (s == "matrix") return ModelKind::Matrix;
    if (s == "mc") return ModelKind::MonteCarlo;
    throw ConfigError("unknown model '" + s + "'");
}

opt::SweepParameter parse_param(const std::string& s) {
    if (s == "pair_rate") return opt::SweepParameter::PairRate;
    if (s == "cascade_efficiency") return opt::SweepParameter::CascadeEfficiency;
    if (s == "figure_of_merit") return opt::SweepParameter::FigureOfMerit;
    if (s == "eta") return opt::SweepParameter::Eta;
    throw ConfigError("unknown sweep parameter '" + s + "'");
}

std::uint64_t window_count(double w) {
    if (!(w >= 1) || w != std::floor(w) || w > 1e15) throw ConfigError("--windows must be a positive integer");
    return std::uint64_t(w);
}

unsigned threads_of(const Options& o) { return o.threads ? o.threads : worker_count(); }

void print_rates(const RateSet& rates) {
    for (const auto& [roles, rate] : rates.all()) std::cout << "rate_" << roles.label() << "_hz: " << format_sci(rate) << '\n';
}

G2Result evaluate(const RunConfig& rc, ModelKind model, const Options& o) {
    const auto& cfg = rc.experiment;
    switch (model) {
        case ModelKind::Analytic:
            return cfg.source_kind == SourceKind::Spdc ? analytic::g2_spdc(cfg) : analytic::g2_cspdc(cfg);
        case ModelKind::Matrix: return detstate::g2_matrix(cfg, rc.truncation_epsilon);
        case ModelKind::MonteCarlo: {
            const auto tally = mc::simulate({cfg, window_count(o.windows), o.seed}, threads_of(o));
            return mc::g2_estimate(tally, cfg.window);
        }
    }
    throw DomainError("unknown model");
}

int cmd_g2(const Options& o) {
    const RunConfig rc = load_config(o.config);
    const ModelKind model = parse_model(o.model);
    const G2Result r = evaluate(rc, model, o);
    std::cout << "model: " << to_string(model) << '\n'
              << "source_type: " << to_string(rc.experiment.source_kind) << '\n'
              << "pair_rate_hz: " << format_sci(rc.experiment.pair_rate) << '\n'
              << "g2: " << format_sci(r.g2) << '\n';
    if (r.statistical_sigma) std::cout << "sigma: " << format_sci(*r.statistical_sigma) << '\n';
    if (r.upper_bound) std::cout << "g2_upper_bound_95: " << format_sci(*r.upper_bound) << '\n';
    if (model == ModelKind::MonteCarlo)
        std::cout << "windows: " << window_count(o.windows) << "\nseed: " << o.seed << '\n';
    print_rates(r.rates);
    return kExitOk;
}

int cmd_min(const Options& o) {
    const RunConfig rc = load_config(o.config);
    const ModelKind model = parse_model(o.model);
    const auto& cfg = rc.experiment;
    const auto m = opt::make_model(model, cfg, rc.truncation_epsilon);
    const auto s = opt::summarize_optimum(m, rc.plateau_delta);
    std::cout << "model: " << to_string(model) << '\n'
              << "source_type: " << to_string(cfg.source_kind) << '\n'
              << "n_opt_hz: " << format_sci(s.best.n_opt) << '\n'
              << "g2_min: " << format_sci(s.best.g2_min) << '\n'
              << "boundary_optimum: " << (s.best.degenerate ? "yes" : "no") << '\n';
    if (s.plateau) {
        std::cout << "plateau_delta: " << format_sci(rc.plateau_delta) << '\n'
                  << "plateau_lo_hz: " << format_sci(s.plateau->lo) << (s.plateau->open_lo ? " (search limit)" : "")
                  << '\n'
                  << "plateau_hi_hz: " << format_sci(s.plateau->hi) << (s.plateau->open_hi ? " (search limit)" : "")
                  << '\n'
                  << "plateau_width_decades: " << format_sci(s.plateau->width_decades) << '\n';
    } else {
        std::cout << "plateau: undefined (optimum on the search boundary)\n";
    }
    try {
        const double closed = cfg.source_kind == SourceKind::Spdc ? analytic::g2_spdc_min(cfg).g2_min
                                                                  : analytic::g2_cspdc_min(cfg).g2_min;
        std::cout << "closed_form_g2_min: " << format_sci(closed) << '\n';
    } catch (const DomainError& e) {
        std::cout << "closed_form_g2_min: n/a (" << e.what() << ")\n";
    }
    return kExitOk;
}

int cmd_sweep(const Options& o) {
    const RunConfig rc = load_config(o.config);
    opt::SweepSpec spec;
    spec.parameter = parse_param(o.param);
    spec.from = o.from;
    spec.to = o.to;
    spec.points = o.points;
    spec.scale = o.linear ? opt::Scale::Linear : opt::Scale::Log;
    spec.model = parse_model(o.model);
    spec.delta = rc.plateau_delta;
    spec.epsilon = rc.truncation_epsilon;
    spec.validate();

    std::vector<ExperimentConfig> bases;
    const auto& cfg = rc.experiment;
    const std::string source = o.source.empty() ? std::string(to_string(cfg.source_kind)) : o.source;
    if (source == "both" || source == "cspdc") {
        if (cfg.source_kind != SourceKind::Cspdc) throw ConfigError("--source " + source + " needs a cspdc configuration");
        bases.push_back(cfg);
    }
    if (source == "both" || source == "spdc") bases.push_back(cfg.as_spdc());
    if (bases.empty()) throw ConfigError("--source must be spdc, cspdc or both");

    std::vector<opt::SweepRow> rows;
    for (const auto& base : bases) {
        spec.base_cfg = base;
        const auto part = opt::sweep(spec);
        rows.insert(rows.end(), part.begin(), part.end());
    }

    bool any_ok = false;
    for (const auto& r : rows) any_ok = any_ok || r.error.empty();
    if (o.out.empty()) {
        write_result_table(std::cout, spec.parameter, rows);
    } else {
        std::ofstream out(o.out);
        if (!out) throw ConfigError("cannot write " + o.out);
        write_result_table(out, spec.parameter, rows);
    }
    return any_ok ? kExitOk : kExitDomain;
}

int cmd_criterion(const Options& o) {
    const RunConfig rc = load_config(o.config);
    const auto& cfg = rc.experiment;
    if (cfg.source_kind != SourceKind::Cspdc) throw ConfigError("criterion needs a cspdc configuration");
    ModelKind model = parse_model(o.model);
    if (model == ModelKind::MonteCarlo) throw ConfigError("criterion supports the analytic and matrix models");
    const auto tc = opt::threshold_crossing(cfg, model, rc.truncation_epsilon);
    const double p = *cfg.cascade_efficiency;

    std::cout << "cascade_efficiency: " << format_sci(p) << '\n'
              << "figure_of_merit_herald_1: " << format_sci(FigureOfMerit::of(cfg.herald_stage2, cfg.window).value)
              << '\n'
              << "figure_of_merit_g2: " << format_sci(FigureOfMerit::of(cfg.g2_a, cfg.window).value) << '\n'
              << "p_threshold_general: " << format_sci(tc.p_threshold) << '\n'
              << "p_threshold_identical_simplified: " << format_sci(tc.p_threshold_identical)
              << "  (1/(H F(eta)) form, herald-1 H and eta)\n"
              << "p_star_numeric_" << to_string(model) << ": ";
    switch (tc.status) {
        case opt::ThresholdCrossing::Status::Crossing: std::cout << format_sci(tc.p_star) << '\n'; break;
        case opt::ThresholdCrossing::Status::AlwaysAdvantageous: std::cout << "0 (always advantageous)\n"; break;
        case opt::ThresholdCrossing::Status::NeverAdvantageous: std::cout << "none (never advantageous)\n"; break;
    }
    std::cout << "p_star_vs_general_relative_difference: " << format_sci(tc.relative_difference) << '\n'
              << "ADVANTAGEOUS: " << (p > tc.p_threshold ? "yes" : "no") << '\n'
              << "ADVANTAGEOUS_numeric: " << (p > tc.p_star ? "yes" : "no") << '\n';
    return kExitOk;
}

int cmd_validate(const Options& o) {
    const RunConfig rc = load_config(o.config);
    const auto& cfg = rc.experiment;
    const std::uint64_t n = window_count(o.windows);

    std::optional<G2Result> an;
    std::string an_error;
    try {
        an = cfg.source_kind == SourceKind::Spdc ? analytic::g2_spdc(cfg) : analytic::g2_cspdc(cfg);
    } catch (const std::exception& e) {
        an_error = e.what();
    }
    const detstate::MatrixModel model(cfg, rc.truncation_epsilon);
    const auto state = model.state_at(cfg.pair_rate);
    const G2Result mx = model.g2_at(cfg.pair_rate);
    const auto tally = mc::simulate({cfg, n, o.seed}, threads_of(o));

    std::cout << "source_type: " << to_string(cfg.source_kind) << "\nwindows: " << n << "\nseed: " << o.seed << '\n';
    if (!an) std::cout << "analytic: n/a (" << an_error << ")\n";
    std::cout << "quantity,analytic,matrix,mc,mc_sigma,rel_analytic_matrix,z_mc_matrix,status\n";

    bool failed = false;
    for (std::uint32_t m = 1; m < model.bank().states(); ++m) {
        const RoleSet roles = model.bank().roles(m);
        const double p = detstate::event_probability(model.bank(), state, roles);
        const std::uint64_t c = tally.count(roles);
        const bool ok = mc::count_consistent(c, n, p);
        failed = failed || !ok;
        const double mx_rate = p / cfg.window;
        const double mc_rate = double(c) / double(n) / cfg.window;
        const double sd_rate = std::sqrt(double(n) * p * (1 - p)) / double(n) / cfg.window;
        std::optional<double> an_rate = an ? an->rates.find(roles) : std::nullopt;
        std::cout << "rate_" << roles.label() << "_hz," << format_opt(an_rate) << ',' << format_sci(mx_rate) << ','
                  << format_sci(mc_rate) << ',' << format_sci(sd_rate) << ','
                  << (an_rate && mx_rate > 0 ? format_sci((*an_rate - mx_rate) / mx_rate) : std::string()) << ','
                  << format_sci(mc::count_z(c, n, p)) << ',' << (ok ? "PASS" : "FAIL") << '\n';
    }

    std::string mc_g2 = ",";
    std::string g2_status = "PASS";
    std::string z;
    try {
        const auto est = mc::g2_estimate(tally, cfg.window);
        mc_g2 = format_sci(est.g2) + ',' + format_sci(*est.statistical_sigma);
        if (est.upper_bound) {
            if (mx.g2 > *est.upper_bound) g2_status = "FAIL";
        } else {
            z = format_sci((est.g2 - mx.g2) / *est.statistical_sigma);
            if (std::abs(est.g2 - mx.g2) > 3 * *est.statistical_sigma) g2_status = "FAIL";
        }
    } catch (const EstimationError& e) {
        g2_status = "SKIP";
    }
    failed = failed || g2_status == "FAIL";
    std::cout << "g2," << (an ? format_sci(an->g2) : std::string()) << ',' << format_sci(mx.g2) << ',' << mc_g2 << ','
              << (an ? format_sci((an->g2 - mx.g2) / mx.g2) : std::string()) << ',' << z << ',' << g2_status << '\n';
    std::cout << "validation: " << (failed ? "FAIL (matrix and Monte Carlo disagree beyond 3 sigma)" : "PASS") << '\n';
    return failed ? kExitValidation : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heralded g2 of SPDC and cascaded-SPDC single-photon sources"};
    app.require_subcommand(1);
    Options o;

    auto add_config = [&](CLI::App* sub) { sub->add_option("config", o.config, "JSON configuration file")->required(); };
    auto add_mc = [&](CLI::App* sub) {
        sub->add_option("--windows", o.windows, "Monte Carlo windows (e.g. 1e7)");
        sub->add_option("--seed", o.seed, "Monte Carlo seed");
        sub->add_option("--threads", o.threads, "worker threads (default: HERALDSIM_THREADS or all cores)");
    };

    auto* g2 = app.add_subcommand("g2", "evaluate g2 at the configured pair rate");
    add_config(g2);
    g2->add_option("--model", o.model, "analytic | matrix | mc");
    add_mc(g2);

    auto* min = app.add_subcommand("min", "minimize g2 over the pair rate and report the plateau");
    add_config(min);
    min->add_option("--model", o.model, "analytic | matrix");

    auto* sw = app.add_subcommand("sweep", "sweep one parameter and write a CSV result table");
    add_config(sw);
    sw->add_option("--param", o.param, "pair_rate | cascade_efficiency | figure_of_merit | eta")->required();
    sw->add_option("--from", o.from, "first value")->required();
    sw->add_option("--to", o.to, "last value")->required();
    sw->add_option("--points", o.points, "number of points (>= 2)")->required();
    auto* log_flag = sw->add_flag("--log", "logarithmic grid (default)");
    sw->add_flag("--linear", o.linear, "linear grid")->excludes(log_flag);
    sw->add_option("--model", o.model, "analytic | matrix");
    sw->add_option("--source", o.source, "spdc | cspdc | both (default: the configured source)");
    sw->add_option("--out", o.out, "output CSV file (default: stdout)");

    auto* crit = app.add_subcommand("criterion", "when does cascading beat direct pumping?");
    add_config(crit);
    crit->add_option("--model", o.model, "model for the numeric break-even search: analytic | matrix");

    auto* val = app.add_subcommand("validate", "compare analytic, matrix and Monte Carlo models");
    add_config(val);
    add_mc(val);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*g2) return cmd_g2(o);
        if (*min) return cmd_min(o);
        if (*sw) return cmd_sweep(o);
        if (*crit) return cmd_criterion(o);
        if (*val) return cmd_validate(o);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDomain;
    }
    return kExitUsage;
}
