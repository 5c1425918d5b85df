#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pival/family.hpp"

namespace pival {

enum class PriorKind {
    flat_hypercube,
    test_fixed_sigma,
    explore_fixed_sigma,
    test_uniform_sigma,
    explore_uniform_sigma,
    test_invchisq,
    explore_invchisq,
};

std::string prior_kind_name(PriorKind kind);
PriorKind prior_kind_from_name(const std::string& name);

struct PriorSpec {
    PriorKind kind = PriorKind::flat_hypercube;
    double beta0_prior = 0.0;
    double beta_min = -std::numeric_limits<double>::infinity();
    double beta_max = std::numeric_limits<double>::infinity();
    double sigma = 1.0;
    double sigma_min = 1.0;
    double sigma_max = 2.0;
    double nu0 = 1.0;
    double s = 1.0;

    bool is_test() const;
    bool is_explore() const;
    void validate() const;

    static PriorSpec flat();
    static PriorSpec flat(double lo, double hi);
    static PriorSpec normal(double mean, double sd);
    static PriorSpec student_t(double nu, double location, double scale);
    static PriorSpec cauchy(double location, double scale) { return student_t(1.0, location, scale); }
    static PriorSpec test_uniform_sigma(double beta0, double sigma_min, double sigma_max);
    static PriorSpec explore_fixed_sigma(double lo, double hi, double sigma);
    static PriorSpec explore_uniform_sigma(double lo, double hi, double sigma_min, double sigma_max);
    static PriorSpec explore_invchisq(double lo, double hi, double nu0, double s);
};

// Table 1 density on the log scale; -inf outside explore/flat bounds.
double prior_logpdf(const PriorSpec& spec, double beta);
// Log of the total mass of the density prior_logpdf describes, when finite and closed-form.
std::optional<double> prior_log_mass(const PriorSpec& spec);

struct FiniteWorldBounds {
    std::vector<std::pair<double, double>> intervals;
    double parameter_scaling = 1.0;  // the 1/p factor, kept apart from the density
    double log_density() const;      // -sum log(lengths): the normalized hypercube density
};

FiniteWorldBounds finite_world_bounds(const Link& link, std::pair<double, double> y_range,
                                      const std::vector<std::pair<double, double>>& x_ranges);

double local_uniformity_check(const PriorSpec& spec, double lo, double hi, int resolution = 1001);

enum class ScalePriorKind { jeffreys, uniform_bounded };

struct ScalePriorSpec {
    ScalePriorKind kind = ScalePriorKind::jeffreys;
    double phi_min = 0.0;
    double phi_max = std::numeric_limits<double>::infinity();
    void validate() const;
};

double scale_prior_logpdf(const ScalePriorSpec& spec, double phi);

}  // namespace pival
