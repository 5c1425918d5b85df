#pragma once

#include <utility>
#include <vector>

namespace pival {

struct ClientParams {
    double epsilon = 0.01;       // fractional gain when the analyst is right
    double epsilon_loss = 0.5;   // fractional loss when the analyst is wrong
    double c = 0.001;            // opportunity cost of sleeping
    double capital = 1.0;        // M
    void validate() const;
};

enum class UtilityKind { linear, log, tabulated };

struct AnalystParams {
    double capital = 1.0;  // C
    double alpha = 0.01;   // symmetric gain/loss
    UtilityKind utility = UtilityKind::linear;
    std::vector<std::pair<double, double>> table;  // (x, U(x)) for the tabulated kind, x strictly increasing

    void validate() const;
    double utility_at(double x) const;
    // U(C + alpha) - U(C - alpha)
    double central_difference() const;
};

// Eq. 31 ratio before clamping at 1.
double pi_critical_raw(const ClientParams& client);
double pi_critical(const ClientParams& client);

double evpi_pure(const AnalystParams& analyst, double pi);
double evpi_recalibrated(const AnalystParams& analyst, double pi, double pi_crit);

struct RecalibrationLoss {
    double fraction = 0.0;  // f(pi_crit)
    double factor = 1.0;    // 1 - f
};

RecalibrationLoss recalibration_loss(const AnalystParams& analyst, double pi_crit);

enum class Action { act, sleep };

struct DecisionOutcome {
    Action action = Action::sleep;
    double utility_act = 0.0;
    double utility_sleep = 0.0;
};

DecisionOutcome evaluate_decision(const ClientParams& client, double pi);

}  // namespace pival
