#include "pival/priors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pival/errors.hpp"
#include "pival/numerics.hpp"
#include "pival/quadrature.hpp"

namespace pival {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Gaussian density averaged over sigma ~ U[smin, smax], unnormalized as in Table 1.
double uniform_sigma_density(double diff, double smin, double smax) {
    const double dsig = smax - smin;
    const double denom = std::numbers::sqrt2 * std::numbers::pi * dsig;
    const double u = 0.5 * diff * diff;
    if (u == 0.0) return std::log(smax / smin) / denom;
    const double a = u / (smax * smax), b = u / (smin * smin);
    if (a < 1e-8) {
        // E1(x) = -gamma - log x + x - ...: the difference loses nothing when taken in this form.
        return (std::log(b / a) + (a - b) - 0.25 * (a * a - b * b)) / (2.0 * denom);
    }
    return (exp_integral_gamma0(a) - exp_integral_gamma0(b)) / (2.0 * denom);
}

double explore_integral(const PriorSpec& spec, double beta, const std::function<double(double)>& kernel) {
    std::vector<double> breaks{spec.beta_min};
    if (beta > spec.beta_min && beta < spec.beta_max) breaks.push_back(beta);
    breaks.push_back(spec.beta_max);
    QuadOptions opts;
    opts.rel_tol = 1e-12;
    return integrate_pieces([&](double b0) { return kernel(beta - b0); }, breaks, opts).value;
}

bool inside(const PriorSpec& spec, double beta) { return beta >= spec.beta_min && beta <= spec.beta_max; }

}  // namespace

std::string prior_kind_name(PriorKind kind) {
    switch (kind) {
        case PriorKind::flat_hypercube: return "flat_hypercube";
        case PriorKind::test_fixed_sigma: return "test_fixed_sigma";
        case PriorKind::explore_fixed_sigma: return "explore_fixed_sigma";
        case PriorKind::test_uniform_sigma: return "test_uniform_sigma";
        case PriorKind::explore_uniform_sigma: return "explore_uniform_sigma";
        case PriorKind::test_invchisq: return "test_invchisq";
        case PriorKind::explore_invchisq: return "explore_invchisq";
    }
    return "?";
}

PriorKind prior_kind_from_name(const std::string& name) {
    for (auto k : {PriorKind::flat_hypercube, PriorKind::test_fixed_sigma, PriorKind::explore_fixed_sigma,
                   PriorKind::test_uniform_sigma, PriorKind::explore_uniform_sigma, PriorKind::test_invchisq,
                   PriorKind::explore_invchisq})
        if (prior_kind_name(k) == name) return k;
    throw DomainError("unknown prior kind '" + name + "'");
}

bool PriorSpec::is_test() const {
    return kind == PriorKind::test_fixed_sigma || kind == PriorKind::test_uniform_sigma ||
           kind == PriorKind::test_invchisq;
}

bool PriorSpec::is_explore() const {
    return kind == PriorKind::explore_fixed_sigma || kind == PriorKind::explore_uniform_sigma ||
           kind == PriorKind::explore_invchisq;
}

void PriorSpec::validate() const {
    if (is_explore() || kind == PriorKind::flat_hypercube) {
        if (!(beta_min < beta_max)) throw DomainError("prior: bounds must be strictly ordered");
        if (is_explore() && !(std::isfinite(beta_min) && std::isfinite(beta_max)))
            throw DomainError("prior: explore kinds need finite bounds");
    }
    if (kind == PriorKind::test_fixed_sigma || kind == PriorKind::explore_fixed_sigma)
        if (!(sigma > 0.0)) throw DomainError("prior: sigma must be positive");
    if (kind == PriorKind::test_uniform_sigma || kind == PriorKind::explore_uniform_sigma)
        if (!(sigma_min > 0.0 && sigma_min < sigma_max && std::isfinite(sigma_max)))
            throw DomainError("prior: need 0 < sigma_min < sigma_max < inf");
    if (kind == PriorKind::test_invchisq || kind == PriorKind::explore_invchisq)
        if (!(nu0 > 0.0 && s > 0.0)) throw DomainError("prior: nu0 and s must be positive");
    if (is_test() && !std::isfinite(beta0_prior)) throw DomainError("prior: beta0 must be finite");
}

PriorSpec PriorSpec::flat() { return PriorSpec{}; }

PriorSpec PriorSpec::flat(double lo, double hi) {
    PriorSpec p;
    p.beta_min = lo;
    p.beta_max = hi;
    p.validate();
    return p;
}

PriorSpec PriorSpec::normal(double mean, double sd) {
    PriorSpec p;
    p.kind = PriorKind::test_fixed_sigma;
    p.beta0_prior = mean;
    p.sigma = sd;
    p.validate();
    return p;
}

PriorSpec PriorSpec::student_t(double nu, double location, double scale) {
    PriorSpec p;
    p.kind = PriorKind::test_invchisq;
    p.beta0_prior = location;
    p.nu0 = nu;
    p.s = scale;
    p.validate();
    return p;
}

PriorSpec PriorSpec::test_uniform_sigma(double beta0, double smin, double smax) {
    PriorSpec p;
    p.kind = PriorKind::test_uniform_sigma;
    p.beta0_prior = beta0;
    p.sigma_min = smin;
    p.sigma_max = smax;
    p.validate();
    return p;
}

PriorSpec PriorSpec::explore_fixed_sigma(double lo, double hi, double sigma) {
    PriorSpec p;
    p.kind = PriorKind::explore_fixed_sigma;
    p.beta_min = lo;
    p.beta_max = hi;
    p.sigma = sigma;
    p.validate();
    return p;
}

PriorSpec PriorSpec::explore_uniform_sigma(double lo, double hi, double smin, double smax) {
    PriorSpec p;
    p.kind = PriorKind::explore_uniform_sigma;
    p.beta_min = lo;
    p.beta_max = hi;
    p.sigma_min = smin;
    p.sigma_max = smax;
    p.validate();
    return p;
}

PriorSpec PriorSpec::explore_invchisq(double lo, double hi, double nu0, double s) {
    PriorSpec p;
    p.kind = PriorKind::explore_invchisq;
    p.beta_min = lo;
    p.beta_max = hi;
    p.nu0 = nu0;
    p.s = s;
    p.validate();
    return p;
}

double prior_logpdf(const PriorSpec& spec, double beta) {
    if (std::isnan(beta)) throw DomainError("prior_logpdf: NaN argument");
    switch (spec.kind) {
        case PriorKind::flat_hypercube:
            if (!inside(spec, beta)) return kNegInf;
            if (std::isfinite(spec.beta_min) && std::isfinite(spec.beta_max))
                return -std::log(spec.beta_max - spec.beta_min);
            return 0.0;
        case PriorKind::test_fixed_sigma: {
            const double z = (beta - spec.beta0_prior) / spec.sigma;
            return std_normal_logpdf(z) - std::log(spec.sigma);
        }
        case PriorKind::explore_fixed_sigma: {
            if (!inside(spec, beta)) return kNegInf;
            // Exact convolution of the Gaussian kernel with the uniform on the bounds.
            const double a = (beta - spec.beta_min) / spec.sigma;
            const double b = (beta - spec.beta_max) / spec.sigma;
            return std::log(std_normal_sf(b) - std_normal_sf(a));
        }
        case PriorKind::test_uniform_sigma:
            return std::log(uniform_sigma_density(beta - spec.beta0_prior, spec.sigma_min, spec.sigma_max));
        case PriorKind::explore_uniform_sigma: {
            if (!inside(spec, beta)) return kNegInf;
            const double v = explore_integral(spec, beta, [&](double d) {
                return uniform_sigma_density(d, spec.sigma_min, spec.sigma_max);
            });
            return std::log(v);
        }
        case PriorKind::test_invchisq:
            return student_t_logpdf((beta - spec.beta0_prior) / spec.s, spec.nu0) - std::log(spec.s);
        case PriorKind::explore_invchisq: {
            if (!inside(spec, beta)) return kNegInf;
            const double v = explore_integral(spec, beta, [&](double d) {
                return std::exp(student_t_logpdf(d / spec.s, spec.nu0)) / spec.s;
            });
            return std::log(v);
        }
    }
    return kNegInf;
}

std::optional<double> prior_log_mass(const PriorSpec& spec) {
    switch (spec.kind) {
        case PriorKind::flat_hypercube:
            if (std::isfinite(spec.beta_min) && std::isfinite(spec.beta_max)) return 0.0;
            return std::nullopt;
        case PriorKind::test_fixed_sigma:
        case PriorKind::test_invchisq: return 0.0;
        case PriorKind::test_uniform_sigma: return -0.5 * std::log(std::numbers::pi);
        default: return std::nullopt;  // explore kinds are truncated to their bounds
    }
}

double FiniteWorldBounds::log_density() const {
    double s = 0.0;
    for (const auto& [lo, hi] : intervals) s -= std::log(hi - lo);
    return s;
}

FiniteWorldBounds finite_world_bounds(const Link& link, std::pair<double, double> y_range,
                                      const std::vector<std::pair<double, double>>& x_ranges) {
    auto [ylo, yhi] = y_range;
    if (!(ylo < yhi)) throw DomainError("finite_world_bounds: y range must be ordered");
    if (!link.mu_in_range(ylo) || !link.mu_in_range(yhi))
        throw DomainError("finite_world_bounds: y range outside the link's invertible domain");
    if (x_ranges.empty()) throw DomainError("finite_world_bounds: need at least one parameter");
    const double glo = link.g(ylo), ghi = link.g(yhi);
    FiniteWorldBounds out;
    for (const auto& [xlo, xhi] : x_ranges) {
        if (xlo > xhi) throw DomainError("finite_world_bounds: x range must be ordered");
        if (xlo <= 0.0 && xhi >= 0.0) throw DomainError("finite_world_bounds: x range contains 0");
        const double c[4] = {glo / xlo, glo / xhi, ghi / xlo, ghi / xhi};
        out.intervals.emplace_back(*std::min_element(c, c + 4), *std::max_element(c, c + 4));
    }
    out.parameter_scaling = 1.0 / static_cast<double>(x_ranges.size());
    return out;
}

double local_uniformity_check(const PriorSpec& spec, double lo, double hi, int resolution) {
    if (!(lo < hi) || resolution < 2) throw DomainError("local_uniformity_check: bad interval or resolution");
    double mx = kNegInf, mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < resolution; ++i) {
        const double b = lo + (hi - lo) * i / (resolution - 1);
        const double lp = prior_logpdf(spec, b);
        if (!std::isfinite(lp)) throw SupportError("local_uniformity_check: density vanishes inside the interval");
        mx = std::max(mx, lp);
        mn = std::min(mn, lp);
    }
    return -std::expm1(mn - mx);
}

void ScalePriorSpec::validate() const {
    if (kind == ScalePriorKind::uniform_bounded) {
        if (!(phi_min >= 0.0 && phi_min < phi_max && std::isfinite(phi_max)))
            throw DomainError("scale prior: need 0 <= phi_min < phi_max < inf");
    }
}

double scale_prior_logpdf(const ScalePriorSpec& spec, double phi) {
    if (!(phi > 0.0)) throw DomainError("scale_prior_logpdf: phi must be positive");
    if (spec.kind == ScalePriorKind::jeffreys) return -std::log(phi);
    if (phi < spec.phi_min || phi > spec.phi_max) return kNegInf;
    return 0.0;
}

}  // namespace pival
