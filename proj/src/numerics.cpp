#include "pival/numerics.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/expint.hpp>

#include "pival/errors.hpp"

namespace pival {

namespace {

void require_finite(double x, const char* what) {
    if (std::isnan(x)) throw DomainError(std::string(what) + ": NaN argument");
}

}  // namespace

double std_normal_cdf(double x) {
    require_finite(x, "std_normal_cdf");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double std_normal_sf(double x) {
    require_finite(x, "std_normal_sf");
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_logpdf(double x) {
    return -0.5 * x * x - 0.5 * std::log(2.0 * std::numbers::pi);
}

double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("std_normal_quantile: p must lie in (0,1)");
    // Work from the nearer tail so 1-p is never formed when p is tiny.
    if (p <= 0.5) return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
    return std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * (1.0 - p));
}

double student_t_cdf(double x, double nu) {
    require_finite(x, "student_t_cdf");
    if (!(nu > 0.0)) throw DomainError("student_t_cdf: nu must be positive");
    if (std::isinf(nu)) return std_normal_cdf(x);
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    boost::math::students_t_distribution<double> dist(nu);
    return x < 0 ? boost::math::cdf(dist, x) : boost::math::cdf(boost::math::complement(dist, -x));
}

double student_t_logpdf(double x, double nu) {
    if (!(nu > 0.0)) throw DomainError("student_t_logpdf: nu must be positive");
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
           0.5 * (nu + 1.0) * std::log1p(x * x / nu);
}

double exp_integral_gamma0(double x) {
    require_finite(x, "exp_integral_gamma0");
    if (!(x > 0.0)) throw DomainError("exp_integral_gamma0: x must be positive");
    if (std::isinf(x)) return 0.0;
    if (x > 700.0) return 0.0;
    return boost::math::expint(1, x);
}

double erfc_inverse(double p) {
    if (!(p > 0.0 && p < 2.0)) throw DomainError("erfc_inverse: p must lie in (0,2)");
    return boost::math::erfc_inv(p);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id), static_cast<std::uint32_t>(stream_id >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
}

// Distributions are built per call so no hidden state survives between draws.
double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::normal(double mean, double sd) { return mean + sd * normal(); }

std::int64_t RngStream::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("poisson mean must be finite and non-negative");
    if (mean == 0.0) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(engine_);
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial p must lie in [0,1]");
    return std::binomial_distribution<std::int64_t>(n, p)(engine_);
}

double RngStream::gamma(double shape, double scale) {
    return std::gamma_distribution<double>(shape, scale)(engine_);
}

double RngStream::chi_squared(double dof) { return gamma(0.5 * dof, 2.0); }

std::uint64_t RngStream::next_u64() { return engine_(); }

std::size_t RngStream::index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

}  // namespace pival
