#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pival {

// Every field can also be set from a command-line flag; flags win.
struct RunConfig {
    std::uint64_t seed = 20240601;
    int threads = 0;  // 0 = OpenMP default
    bool allow_boundary = false;

    std::string data_path;  // empty = bundled trial data
    std::string study;
    std::string outcome;

    std::string family = "poisson";
    std::string link = "log";
    double exposure_scale = 1000.0;

    std::string prior = "flat";
    int resolution = 801;
    double half_width_se = 8.0;

    std::string method = "grid";
    int chains = 4;
    int draws = 5000;
    int burn_in = 1000;

    double epsilon = 0.01;
    double epsilon_loss = 0.5;
    double c = 0.001;
    double client_capital = 1.0;
    double analyst_capital = 1.0;
    double alpha = 0.01;
    std::string utility = "linear";

    int n_sim = 1000;
    std::string kernel = "exact";
    int min_events = 1;
    bool boundary_is_failure = true;
    std::vector<std::string> bayes;

    std::string out;
    std::string csv;
};

// Boost INFO key-tree text, e.g. `model { family poisson }`. Unknown keys are a ParseError.
RunConfig parse_run_config_text(const std::string& text, const std::string& source = "<memory>");
RunConfig load_run_config(const std::string& path);

}  // namespace pival
