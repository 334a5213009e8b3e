// holab: list and run named scenarios.
//
// Exit status: 0 all expectations pass, 2 an expectation failed, 1 runtime or numerical error,
// 64 usage error (bad arguments, malformed or schema-violating config).

#include "holab/scenarios.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace sc = holab::scenarios;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitError = 1;
constexpr int kExitExpectation = 2;
constexpr int kExitUsage = 64;

void print_catalog(bool as_json) {
    if (as_json) {
        std::cout << sc::catalog_json().dump(2) << "\n";
        return;
    }
    for (const auto& s : sc::catalog()) {
        std::cout << s.name << "  " << s.description << "\n";
        std::cout << "    checks: " << s.anchor << "\n";
        for (const auto& k : s.keys)
            std::cout << "    " << k.name << " (" << k.type << ", default " << k.default_value.dump() << ")  "
                      << k.description << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"holab: geometric phase scenarios"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "print the scenario catalog with key schemas");
    bool list_json = false;
    list->add_flag("--json", list_json, "print the full catalog as JSON");

    auto* runc = app.add_subcommand("run", "run one scenario from a config file");
    std::string config, out;
    std::vector<std::string> formats;
    std::uint64_t seed = 0;
    runc->add_option("--config", config, "scenario config (JSON)")->required();
    runc->add_option("--out", out, "output directory (overrides output.directory)");
    runc->add_option("--format", formats, "output formats: json, csv")
        ->delimiter(',')
        ->check(CLI::IsMember({"json", "csv"}));
    auto* seed_opt = runc->add_option("--seed", seed, "seed for randomized fixtures (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitPass : kExitUsage;
    }

    if (list->parsed()) {
        print_catalog(list_json);
        return kExitPass;
    }

    sc::ScenarioConfig cfg;
    try {
        cfg = sc::load_config(config);
    } catch (const holab::ConfigError& e) {
        std::cerr << "holab: " << e.what() << "\n";
        return kExitUsage;
    }
    if (!out.empty()) cfg.out_dir = out;
    if (!formats.empty()) cfg.formats = formats;
    if (*seed_opt) cfg.seed = seed;
    if (cfg.out_dir.empty()) cfg.out_dir = "holab-out";

    try {
        const sc::RunReport r = sc::run(cfg);
        for (const auto& path : sc::emit(r, cfg.out_dir, cfg.formats)) std::cerr << "holab: wrote " << path << "\n";
        std::fprintf(stderr, "holab: %s finished in %.3f s\n", r.scenario.c_str(), r.wall_time);
        std::cout << sc::report_json(r).dump(2) << "\n";
        for (const auto& e : r.expectations)
            if (!e.pass) std::cerr << "holab: expectation " << e.name << " failed\n";
        return r.passed() ? kExitPass : kExitExpectation;
    } catch (const holab::ConfigError& e) {
        std::cerr << "holab: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "holab: " << cfg.scenario << ": " << e.what() << "\n";
        return kExitError;
    }
}
