#include "pival/decision.hpp"

#include <algorithm>
#include <cmath>

#include <math.h>  // boost pchip calls unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

#include "pival/errors.hpp"

namespace pival {

void ClientParams::validate() const {
    if (!(epsilon > 0.0)) throw DomainError("client: epsilon must be positive");
    if (!(epsilon_loss > 0.0 && epsilon_loss < 1.0)) throw DomainError("client: epsilon_loss must lie in (0,1)");
    if (!(c >= 0.0 && c < 1.0)) throw DomainError("client: opportunity cost must lie in [0,1)");
    if (!(capital > 0.0)) throw DomainError("client: capital must be positive");
}

void AnalystParams::validate() const {
    if (!(alpha > 0.0)) throw DomainError("analyst: alpha must be positive");
    if (utility == UtilityKind::log && !(capital > alpha))
        throw DomainError("analyst: log utility needs C > alpha");
    if (utility == UtilityKind::tabulated) {
        if (table.size() < 4) throw DomainError("analyst: tabulated utility needs at least 4 points");
        for (std::size_t i = 1; i < table.size(); ++i)
            if (!(table[i].first > table[i - 1].first)) throw DomainError("analyst: table x must increase");
        if (capital - alpha < table.front().first || capital + alpha > table.back().first)
            throw DomainError("analyst: C +/- alpha outside the tabulated range");
    }
}

double AnalystParams::utility_at(double x) const {
    switch (utility) {
        case UtilityKind::linear: return x;
        case UtilityKind::log:
            if (!(x > 0.0)) throw DomainError("log utility undefined at non-positive capital");
            return std::log(x);
        case UtilityKind::tabulated: {
            std::vector<double> xs, ys;
            for (const auto& [a, b] : table) {
                xs.push_back(a);
                ys.push_back(b);
            }
            if (x < xs.front() || x > xs.back()) throw DomainError("tabulated utility: outside table range");
            boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
            return spline(x);
        }
    }
    return 0.0;
}

double AnalystParams::central_difference() const {
    validate();
    return utility_at(capital + alpha) - utility_at(capital - alpha);
}

double pi_critical_raw(const ClientParams& client) {
    client.validate();
    const double gain = std::log1p(client.epsilon) - std::log1p(-client.c);
    return 2.0 * gain / (gain - std::log1p(-client.epsilon_loss));
}

double pi_critical(const ClientParams& client) { return std::min(1.0, pi_critical_raw(client)); }

namespace {

void require_pi(double pi) {
    if (!(pi > 0.0 && pi <= 1.0)) throw DomainError("pi must lie in (0,1]");
}

}  // namespace

double evpi_pure(const AnalystParams& analyst, double pi) {
    require_pi(pi);
    // CDQ * alpha * pi with CDQ = central difference / (2 alpha)
    return analyst.central_difference() / 2.0 * pi;
}

double evpi_recalibrated(const AnalystParams& analyst, double pi, double pi_crit) {
    require_pi(pi);
    require_pi(pi_crit);
    return analyst.central_difference() / 2.0 * std::min(pi, pi_crit);
}

RecalibrationLoss recalibration_loss(const AnalystParams& analyst, double pi_crit) {
    require_pi(pi_crit);
    const double top = analyst.utility_at(analyst.capital + analyst.alpha);
    if (!(top > 0.0)) throw DomainError("recalibration_loss: U(C + alpha) must be positive");
    RecalibrationLoss r;
    r.fraction = analyst.central_difference() / (2.0 * top) * pi_crit;
    r.factor = 1.0 - r.fraction;
    return r;
}

DecisionOutcome evaluate_decision(const ClientParams& client, double pi) {
    client.validate();
    require_pi(pi);
    const double m = std::log(client.capital);
    const double right = 1.0 - pi / 2.0, wrong = pi / 2.0;
    DecisionOutcome d;
    d.utility_act = right * (m + std::log1p(client.epsilon)) + wrong * (m + std::log1p(-client.epsilon_loss));
    d.utility_sleep = right * (m + std::log1p(-client.c)) + wrong * m;
    // Ties sleep: acting needs a strict gain.
    d.action = d.utility_act > d.utility_sleep ? Action::act : Action::sleep;
    return d;
}

}  // namespace pival
