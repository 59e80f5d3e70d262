#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lecam/density_model.hpp"
#include "lecam/exec.hpp"

namespace lecam {

// Exit codes of the command-line driver.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfigError = 1,
    kExitAssertionFailure = 2,
    kExitNumericFailure = 3,
};

struct ExperimentConfig {
    std::string command;
    nlohmann::json density;                 // density spec (may be empty for sweeps)
    std::vector<nlohmann::json> gamma_class;  // density specs defining gamma_k
    std::vector<double> gamma;              // explicit gamma sequence, wins if set
    std::int64_t n = 4096;
    std::optional<int> k0;                  // empty means "auto" via gamma
    int k1 = 0;                             // 0 means ceil(log2 n)
    std::uint64_t seed = 1;
    int replicates = 100;
    nlohmann::json grids;                   // lambdas / ms / ps / ns / levels / c
    std::string input;                      // input file for `invert`
    std::string out = "report.csv";
    std::string format = "csv";             // csv | json
    std::string constants_path;             // empty: compiled-in default
    bool serial = false;
    nlohmann::json raw;                     // full config echo
};

ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

struct SuiteResult {
    std::string name;
    std::string status;  // "pass", "fail", or "skipped: <reason>"
};

struct RunManifest {
    nlohmann::json config_echo;
    std::string library_version;
    int constants_version = 0;
    double wall_seconds = 0.0;
    std::vector<SuiteResult> suites;
    int exit_code = 0;
};

// gamma_k = max over the family of the squared Besov tail at level k,
// k = 0..k_max (nonincreasing by construction).
std::vector<double> gamma_sequence(const std::vector<DensityModel>& family, int k_max = 20);

// Dispatches the configured command, writes the report files, and returns
// the process exit code. Reports are a pure function of (config, seed,
// constants version); wall time lives only in the manifest.
int run(const ExperimentConfig& cfg, RunManifest& manifest);

int cli_main(int argc, char** argv);

}  // namespace lecam
