#pragma once

#include "holab/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace holab::scenarios {

using nlohmann::json;

// Parameter types: number, integer, boolean, string, number-list, matrix (list of number lists).
struct KeySpec {
    std::string name;
    std::string type;
    json default_value;
    std::string description;
};

// Expectation kinds:
//   abs |value - target| <= tol    rel |value - target| <= tol |target|
//   max value <= tol               min value >= tol
//   gt  value > tol                eq  value == target
struct ExpectSpec {
    std::string name;
    std::string kind;
    double tolerance = 0.0;
    std::string description;
};

struct ScenarioInfo {
    std::string name;
    std::string description;
    std::string anchor;  // the relation the scenario checks
    std::vector<KeySpec> keys;
    std::vector<ExpectSpec> expectations;
};

struct Expectation {
    std::string name;
    std::string kind;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct CsvTable {
    std::string name;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

struct ScenarioConfig {
    std::string scenario;
    json parameters = json::object();
    json tolerances = json::object();
    std::string out_dir;
    std::vector<std::string> formats{"json"};
    std::optional<std::uint64_t> seed;
};

struct RunReport {
    std::string scenario;
    json inputs;
    json results = json::object();
    std::vector<Expectation> expectations;
    json diagnostics = json::object();
    std::vector<CsvTable> tables;
    double wall_time = 0.0;  // seconds; kept out of the emitted report so it stays reproducible

    bool passed() const;
    const Expectation& expectation(const std::string& name) const;
};

const std::vector<ScenarioInfo>& catalog();
const ScenarioInfo& find_scenario(const std::string& name);  // ConfigError if unknown
json catalog_json();

// ConfigError on unknown keys, wrong types, unknown scenario or unknown tolerance names.
ScenarioConfig parse_config(const json& j);
ScenarioConfig load_config(const std::string& path);

RunReport run(const ScenarioConfig& cfg);

json report_json(const RunReport& r);
std::string csv_text(const CsvTable& t);
// Writes <scenario>.json and/or <scenario>-<table>.csv into dir; returns the paths written.
std::vector<std::string> emit(const RunReport& r, const std::string& dir, const std::vector<std::string>& formats);

}  // namespace holab::scenarios
