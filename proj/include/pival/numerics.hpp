#pragma once

#include <cstdint>
#include <random>

namespace pival {

// Phi(x); erfc-based so the lower tail keeps relative accuracy down to ~1e-300.
double std_normal_cdf(double x);
// Upper tail 1 - Phi(x) without cancellation.
double std_normal_sf(double x);
double std_normal_pdf(double x);
double std_normal_logpdf(double x);
double std_normal_quantile(double p);

double student_t_cdf(double x, double nu);
double student_t_logpdf(double x, double nu);

// Gamma(0, x) = E1(x).
double exp_integral_gamma0(double x);

double erfc_inverse(double p);

// Deterministic, independently seedable stream. Equal (seed, stream_id) give equal sequences.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    double uniform();  // [0, 1)
    double normal();
    double normal(double mean, double sd);
    std::int64_t poisson(double mean);
    std::int64_t binomial(std::int64_t n, double p);
    double gamma(double shape, double scale);
    double chi_squared(double dof);
    std::uint64_t next_u64();
    std::size_t index(std::size_t n);  // uniform on [0, n)

    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
};

}  // namespace pival
