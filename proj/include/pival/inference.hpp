#pragma once

#include <optional>
#include <span>
#include <string>

#include "pival/glm.hpp"
#include "pival/mixture.hpp"
#include "pival/posterior.hpp"

namespace pival {

enum class Direction { positive, negative };
enum class TailMethod { wald_normal, wald_t, posterior_analytic, posterior_empirical, posterior_mixture, posterior_grid };
enum class WaldDist { normal, t };

std::string direction_name(Direction d);
std::string tail_method_name(TailMethod m);

struct TailReport {
    double z = 0.0;  // signed standardized distance of the estimate from beta0 (NaN for sample-based methods)
    Direction direction = Direction::positive;
    double p_or_pi = 1.0;
    TailMethod method = TailMethod::wald_normal;
    std::optional<int> dof;
    std::optional<std::string> warning;
};

TailReport wald_pvalue(const FitResult& fit, double phi, Eigen::Index index, double beta0 = 0.0,
                       WaldDist dist = WaldDist::normal, std::optional<int> dof = std::nullopt);

TailReport pi_value_analytic(const LaplacePosterior& posterior, Eigen::Index index, double beta0 = 0.0);

enum class SampleMethod { empirical, mixture };

TailReport pi_value_from_samples(std::span<const double> samples, double beta0, SampleMethod method,
                                 const MixtureOptions& opts = {});

TailReport pi_value_grid(const GridPosterior& grid, std::size_t axis, double beta0 = 0.0);

// E[sgn(beta - beta0)] = P(>=) - P(<) = sign * (1 - pi).
double direction_estimate(double pi, Direction direction);

struct TailComparison {
    double p_normal = 0.0;
    double p_t_jeffreys = 0.0;
    double p_t_uniform = 0.0;
    double max_pairwise_gap() const;
};

TailComparison tail_comparison(double z, long n_minus_p);

}  // namespace pival
