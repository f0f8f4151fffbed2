#pragma once

// JSON configuration files. Units are part of the key names (_s, _hz).
//
// {
//   "coincidence_window_s": 5e-9,
//   "source": {"type": "cspdc", "pair_rate_hz": 1e5, "cascade_efficiency": 1e-6},
//   "detectors": {
//     "herald_stage2": {"eta": 0.7, "dark_hz": 20},
//     "herald_stage1": {"eta": 0.7, "dark_hz": 20},
//     "g2_a": {"eta": 0.7, "dark_hz": 20},
//     "g2_b": {"eta": 0.7, "dark_hz": 20}
//   },
//   "truncation_epsilon": 1e-12,
//   "plateau_delta": 0.1
// }

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>

#include <json.hpp>

#include "heraldsim/errors.hpp"
#include "heraldsim/types.hpp"

namespace heraldsim {

struct RunConfig {
    ExperimentConfig experiment;
    double truncation_epsilon = 1e-12;
    double plateau_delta = 0.1;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key " + path + key);
    }
}

inline const json& require(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key)) throw ConfigError("missing key " + path + key);
    return obj.at(key);
}

inline const json& require_object(const json& obj, const std::string& path, const char* key) {
    const json& v = require(obj, path, key);
    if (!v.is_object()) throw ConfigError("key " + path + key + " must be an object");
    return v;
}

inline double number(const json& v, const std::string& name) {
    if (!v.is_number()) throw ConfigError("key " + name + " must be a number");
    return v.get<double>();
}

inline DetectorSpec parse_detector(const json& obj, const std::string& path) {
    reject_unknown(obj, path, {"eta", "dark_hz"});
    DetectorSpec d{number(require(obj, path, "eta"), path + "eta"),
                   number(require(obj, path, "dark_hz"), path + "dark_hz")};
    d.validate(path.substr(0, path.size() - 1));
    return d;
}

inline json detector_json(const DetectorSpec& d) { return {{"eta", d.eta}, {"dark_hz", d.dark_rate}}; }

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& root) {
    using detail::number;
    using detail::require;
    using detail::require_object;
    if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
    detail::reject_unknown(root, "",
                           {"coincidence_window_s", "source", "detectors", "truncation_epsilon", "plateau_delta"});

    RunConfig rc;
    ExperimentConfig& cfg = rc.experiment;
    cfg.window = number(require(root, "", "coincidence_window_s"), "coincidence_window_s");

    const auto& src = require_object(root, "", "source");
    detail::reject_unknown(src, "source.", {"type", "pair_rate_hz", "cascade_efficiency"});
    const auto& type = require(src, "source.", "type");
    if (type == "spdc") cfg.source_kind = SourceKind::Spdc;
    else if (type == "cspdc") cfg.source_kind = SourceKind::Cspdc;
    else throw ConfigError("key source.type must be \"spdc\" or \"cspdc\"");
    cfg.pair_rate = number(require(src, "source.", "pair_rate_hz"), "source.pair_rate_hz");
    if (src.contains("cascade_efficiency"))
        cfg.cascade_efficiency = number(src.at("cascade_efficiency"), "source.cascade_efficiency");

    const auto& det = require_object(root, "", "detectors");
    detail::reject_unknown(det, "detectors.", {"herald_stage2", "herald_stage1", "g2_a", "g2_b"});
    cfg.herald_stage2 =
        detail::parse_detector(require_object(det, "detectors.", "herald_stage2"), "detectors.herald_stage2.");
    if (det.contains("herald_stage1"))
        cfg.herald_stage1 =
            detail::parse_detector(require_object(det, "detectors.", "herald_stage1"), "detectors.herald_stage1.");
    cfg.g2_a = detail::parse_detector(require_object(det, "detectors.", "g2_a"), "detectors.g2_a.");
    cfg.g2_b = detail::parse_detector(require_object(det, "detectors.", "g2_b"), "detectors.g2_b.");

    if (root.contains("truncation_epsilon"))
        rc.truncation_epsilon = number(root.at("truncation_epsilon"), "truncation_epsilon");
    if (!(rc.truncation_epsilon > 0 && rc.truncation_epsilon < 1))
        throw ConfigError("key truncation_epsilon must lie in (0, 1)");
    if (root.contains("plateau_delta")) rc.plateau_delta = number(root.at("plateau_delta"), "plateau_delta");
    if (!(rc.plateau_delta >= 0)) throw ConfigError("key plateau_delta must be >= 0");

    cfg.validate();
    return rc;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed configuration " + path.string() + ": " + e.what());
    }
    return parse_config(root);
}

inline nlohmann::json to_json(const RunConfig& rc) {
    const ExperimentConfig& cfg = rc.experiment;
    nlohmann::json src = {{"type", std::string(to_string(cfg.source_kind))}, {"pair_rate_hz", cfg.pair_rate}};
    if (cfg.cascade_efficiency) src["cascade_efficiency"] = *cfg.cascade_efficiency;
    nlohmann::json det = {{"herald_stage2", detail::detector_json(cfg.herald_stage2)},
                          {"g2_a", detail::detector_json(cfg.g2_a)},
                          {"g2_b", detail::detector_json(cfg.g2_b)}};
    if (cfg.herald_stage1) det["herald_stage1"] = detail::detector_json(*cfg.herald_stage1);
    return {{"coincidence_window_s", cfg.window},
            {"source", src},
            {"detectors", det},
            {"truncation_epsilon", rc.truncation_epsilon},
            {"plateau_delta", rc.plateau_delta}};
}

}  // namespace heraldsim
