#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "pival/glm.hpp"
#include "pival/posterior.hpp"
#include "pival/priors.hpp"

namespace pival {

struct PredictivePosterior {
    LaplacePosterior predictive;           // N(beta_hat, 3 Sigma)
    LaplacePosterior replicate_estimator;  // N(beta_hat, 2 Sigma)
};

PredictivePosterior predictive_posterior(const FitResult& fit, double phi);

// 2 Phi(Phi^-1(pi_init / 2) / sqrt 3)
double predictive_pi(double pi_init);
// Largest pi_init whose predictive pi does not exceed `level`.
double predictive_pi_threshold(double level = 0.05);

// Density and cdf of x = -log10(pi_rep) given pi_init.
double rpd_pdf(double x, double pi_init);
double rpd_cdf(double x, double pi_init);
// P(X > x) without cancellation.
double rpd_sf(double x, double pi_init);

struct RpdMoments {
    double mean_log10 = 0.0;
    double sd_log10 = 0.0;
    double mean_raw = 0.0;
    double sd_raw = 0.0;
};

RpdMoments rpd_moments(double pi_init);

struct RpdCurve {
    double pi_init = 0.0;
    double cap = 30.0;
    std::vector<double> x, pdf, cdf;
    double mass_beyond_cap = 0.0;
    RpdMoments moments;
};

RpdCurve rpd_curve(double pi_init, double cap = 30.0, double step = 1e-3);

enum class KernelKind { exact, gaussian };
enum class ScaleKernelKind { exact, lognormal };

struct TranslationKernel {
    KernelKind kind = KernelKind::exact;
    Eigen::VectorXd bias;       // gaussian only; empty means zero
    Eigen::VectorXd inflation;  // gaussian only; sd multipliers, empty means 1
    ScaleKernelKind scale_kind = ScaleKernelKind::exact;
    double scale_sd = 0.0;      // lognormal sd on log phi

    void validate(Eigen::Index p) const;
};

struct BayesAnalysis {
    std::string name;
    std::vector<PriorSpec> priors;  // one per coefficient; empty = flat

    static BayesAnalysis flat();
    // Flat intercept, Student-t(df, 0, scale) on every other coefficient.
    static BayesAnalysis student_t(double df, double scale, Eigen::Index p);
};

struct ReplicationConfig {
    int n_sim = 1000;
    std::optional<ModelData> replicate_design;  // y ignored; defaults to the initial design
    bool run_ml = true;
    std::vector<BayesAnalysis> bayes;
    TranslationKernel kernel;
    std::uint64_t seed = 1;
    int min_events_guard = 1;
    bool boundary_is_failure = true;
    Eigen::Index index = -1;                 // coefficient of interest; -1 = last
    std::optional<int> scale_dof;            // Eq. 36 scale marginal dof; default n - p
    double phi_plug = 1.0;                   // scale for grid/chain initials of unknown-scale families
    int grid_resolution = 201;
    double grid_half_width_se = 8.0;
    int chains = 4;
    int chain_draws = 2000;
    int chain_burn_in = 500;

    void validate() const;
};

using InitialPosterior = std::variant<FitResult, GridPosterior, Eigen::MatrixXd>;

struct BayesOutcome {
    bool ok = false;
    std::string failure_reason;
    Eigen::VectorXd draw;
    double pi = std::numeric_limits<double>::quiet_NaN();
};

struct ReplicateRecord {
    std::size_t index = 0;
    Eigen::VectorXd beta_g;
    double phi_g = 1.0;
    Eigen::VectorXd y_rep;
    Eigen::VectorXd ml_estimates;
    Eigen::VectorXd ml_se;
    Eigen::VectorXd ml_p;
    bool ml_boundary = false;
    std::vector<BayesOutcome> bayes;
    bool failed = false;
    std::string failure_reason;
};

struct BayesSummary {
    std::string name;
    double draw_mean = 0.0;
    double draw_sd = 0.0;
    double fraction_pi_below_005 = 0.0;
    std::vector<double> neglog10_pi_quantiles;
};

struct ReplicationSummary {
    int n_sim = 0;
    int n_failed = 0;
    double fraction_failed = 0.0;
    double ml_mean = 0.0;
    double ml_sd = 0.0;
    double ml_var = 0.0;
    double ml_mc_se = 0.0;
    std::vector<double> quantile_levels;
    std::vector<double> neglog10_p_quantiles;
    double fraction_p_below_005 = 0.0;
    std::vector<BayesSummary> bayes;
};

struct ReplicationReport {
    std::uint64_t seed = 0;
    Eigen::Index index = 0;
    std::vector<ReplicateRecord> records;
    ReplicationSummary summary;
    std::vector<std::string> bayes_names;
};

ReplicationReport run_replication(const InitialPosterior& initial, const ModelData& initial_data,
                                  const Family& family, const Link& link, const ReplicationConfig& config);

namespace serial {
ReplicationReport run_replication(const InitialPosterior& initial, const ModelData& initial_data,
                                  const Family& family, const Link& link, const ReplicationConfig& config);
}  // namespace serial

// Kolmogorov-Smirnov distance between an empirical sample and a cdf.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

}  // namespace pival
