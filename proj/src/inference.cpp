#include "pival/inference.hpp"

#include <algorithm>
#include <cmath>

#include "pival/errors.hpp"
#include "pival/numerics.hpp"

namespace pival {

std::string direction_name(Direction d) { return d == Direction::positive ? "positive" : "negative"; }

std::string tail_method_name(TailMethod m) {
    switch (m) {
        case TailMethod::wald_normal: return "wald_normal";
        case TailMethod::wald_t: return "wald_t";
        case TailMethod::posterior_analytic: return "posterior_analytic";
        case TailMethod::posterior_empirical: return "posterior_empirical";
        case TailMethod::posterior_mixture: return "posterior_mixture";
        case TailMethod::posterior_grid: return "posterior_grid";
    }
    return "?";
}

namespace {

// Twice the smaller of the two complementary tails, each computed directly.
double two_sided(double lower, double upper) { return std::min(1.0, 2.0 * std::min(lower, upper)); }

}  // namespace

TailReport wald_pvalue(const FitResult& fit, double phi, Eigen::Index index, double beta0, WaldDist dist,
                       std::optional<int> dof) {
    if (!fit.converged) throw ConvergenceError("wald_pvalue: fit did not converge");
    if (index < 0 || index >= fit.beta_hat.size()) throw DomainError("wald_pvalue: coefficient index out of range");
    if (!(phi > 0.0)) throw DomainError("wald_pvalue: phi must be positive");
    TailReport r;
    const double se = std::sqrt(phi * fit.cov_unscaled(index, index));
    r.z = (fit.beta_hat[index] - beta0) / se;
    r.direction = r.z >= 0.0 ? Direction::positive : Direction::negative;
    if (dist == WaldDist::normal) {
        r.method = TailMethod::wald_normal;
        r.p_or_pi = two_sided(std_normal_cdf(r.z), std_normal_cdf(-r.z));
    } else {
        const int d = dof ? *dof : static_cast<int>(fit.n - fit.p);
        if (d <= 0) throw DofError("wald_pvalue: t reference needs positive dof");
        r.method = TailMethod::wald_t;
        r.dof = d;
        r.p_or_pi = two_sided(student_t_cdf(r.z, d), student_t_cdf(-r.z, d));
    }
    if (fit.boundary) r.warning = "boundary fit: " + fit.boundary_reason;
    return r;
}

TailReport pi_value_analytic(const LaplacePosterior& posterior, Eigen::Index index, double beta0) {
    if (index < 0 || index >= posterior.mean.size()) throw DomainError("pi_value_analytic: index out of range");
    TailReport r;
    r.method = TailMethod::posterior_analytic;
    r.z = (posterior.mean[index] - beta0) / posterior.marginal_scale(index);
    r.direction = r.z >= 0.0 ? Direction::positive : Direction::negative;
    if (posterior.kind == PosteriorKind::mvt) {
        r.dof = posterior.dof;
        r.p_or_pi = two_sided(student_t_cdf(r.z, posterior.dof), student_t_cdf(-r.z, posterior.dof));
    } else {
        r.p_or_pi = two_sided(std_normal_cdf(r.z), std_normal_cdf(-r.z));
    }
    return r;
}

TailReport pi_value_from_samples(std::span<const double> samples, double beta0, SampleMethod method,
                                 const MixtureOptions& opts) {
    if (samples.empty()) throw DomainError("pi_value_from_samples: no samples");
    std::size_t ge = 0;
    for (double v : samples) ge += v >= beta0;
    const std::size_t lt = samples.size() - ge;
    const double n = static_cast<double>(samples.size());
    TailReport r;
    r.z = std::numeric_limits<double>::quiet_NaN();
    r.direction = ge >= lt ? Direction::positive : Direction::negative;
    r.method = TailMethod::posterior_empirical;
    r.p_or_pi = 2.0 * static_cast<double>(std::min(ge, lt)) / n;
    if (method == SampleMethod::empirical) return r;

    if (samples.size() < 1000) throw DomainError("pi_value_from_samples: mixture method needs >= 1000 samples");
    std::vector<double> centred(samples.begin(), samples.end());
    for (double& v : centred) v -= beta0;
    try {
        const auto model = fit_gaussian_mixture_1d(centred, opts);
        r.method = TailMethod::posterior_mixture;
        r.p_or_pi = model.folded_tail_area();
    } catch (const DegeneracyError& e) {
        r.warning = std::string("mixture fit degenerate, empirical value reported: ") + e.what();
    }
    return r;
}

TailReport pi_value_grid(const GridPosterior& grid, std::size_t axis, double beta0) {
    if (!grid.proper) throw NotApplicableError("pi_value_grid: posterior is improper");
    if (axis >= grid.dim()) throw DomainError("pi_value_grid: axis out of range");
    const double lower = grid.marginal_cdf(axis, beta0);
    TailReport r;
    r.method = TailMethod::posterior_grid;
    r.z = std::numeric_limits<double>::quiet_NaN();
    r.direction = lower <= 0.5 ? Direction::positive : Direction::negative;
    r.p_or_pi = two_sided(lower, 1.0 - lower);
    return r;
}

double direction_estimate(double pi, Direction direction) {
    if (!(pi > 0.0 && pi <= 1.0)) throw DomainError("direction_estimate: pi must lie in (0,1]");
    const double magnitude = 1.0 - pi;
    return direction == Direction::positive ? magnitude : -magnitude;
}

double TailComparison::max_pairwise_gap() const {
    return std::max({std::abs(p_normal - p_t_jeffreys), std::abs(p_normal - p_t_uniform),
                     std::abs(p_t_jeffreys - p_t_uniform)});
}

TailComparison tail_comparison(double z, long n_minus_p) {
    if (n_minus_p <= 2) throw DofError("tail_comparison: n - p must exceed 2");
    const double a = std::abs(z);
    const double nu = static_cast<double>(n_minus_p);
    TailComparison t;
    t.p_normal = 2.0 * std_normal_cdf(-a);
    t.p_t_jeffreys = 2.0 * student_t_cdf(-a, nu);
    t.p_t_uniform = 2.0 * student_t_cdf(-a * std::sqrt(nu / (nu - 2.0)), nu - 2.0);
    return t;
}

}  // namespace pival
