#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace evlab {

struct ScenarioInfo {
    std::string name;
    std::string summary;
};

// Stable table of the shipped scenarios.
const std::vector<ScenarioInfo>& scenario_table();

// Listing, optionally filtered by substring; machine-readable JSON form.
std::string list_scenarios_text(const std::string& filter = "");
std::string list_scenarios_json(const std::string& filter = "");

struct RunOptions {
    std::string scenario;
    std::string config_path;  // JSON file merged over the scenario defaults
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool dump = false;  // also write CSV dumps
    int threads = 1;
    std::string precision = "auto";  // auto | exact | float
};

// Runs a scenario and writes <out_dir>/report.json (plus CSVs with dump).
// Exit status: 0 success, 2 validation failure, 3 runtime numerical failure.
int run_scenario(const RunOptions& opts, std::ostream& log);

}  // namespace evlab
