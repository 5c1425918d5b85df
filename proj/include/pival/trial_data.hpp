#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pival/glm.hpp"

namespace pival {

struct TrialRecord {
    std::string study;
    std::string outcome;
    std::string arm;
    int treat = 0;
    long events = 0;
    std::optional<double> exposure;  // person-years
    std::optional<double> arm_size;
    bool exposure_from_arm_size = false;

    // Exposure used for the offset: person-years, or the arm size when those are blank.
    double effective_exposure() const;
};

// Header `study,outcome,arm,treat,events,exposure` with an optional trailing `arm_size`.
std::vector<TrialRecord> parse_trial_csv(const std::string& path);
std::vector<TrialRecord> parse_trial_csv_text(const std::string& text, const std::string& source = "<memory>");

// Distinct (study, outcome) pairs in file order.
std::vector<std::pair<std::string, std::string>> trial_groups(const std::vector<TrialRecord>& records);

// Poisson rate design: intercept + treat, offset log(exposure / exposure_scale).
ModelData trial_model_data(const std::vector<TrialRecord>& records, const std::string& study,
                           const std::string& outcome, double exposure_scale = 1000.0);

}  // namespace pival
