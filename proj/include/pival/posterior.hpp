#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pival/glm.hpp"
#include "pival/numerics.hpp"
#include "pival/priors.hpp"

namespace pival {

enum class PosteriorKind { normal_known_phi, mvt };

struct LaplacePosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;           // phi * cov_unscaled (plug-in phi for the mvt kind)
    PosteriorKind kind = PosteriorKind::normal_known_phi;
    int dof = 0;                   // mvt only
    Eigen::MatrixXd scale_matrix;  // mvt only

    // Marginal scale of component i: sd for the normal kind, t scale for mvt.
    double marginal_scale(Eigen::Index i) const;
    void validate() const;
};

struct ScaleMarginal {
    int dof = 0;
    double scale = 0.0;  // scaled-inverse-chi2 scale
    double mode = 0.0;
};

struct LaplaceResult {
    LaplacePosterior beta_posterior;
    std::optional<ScaleMarginal> scale_marginal;
    LaplacePosterior plug_in;  // empirical Bayes: normal at phi_MAP = D/(n-p)
};

LaplaceResult laplace_posterior(const FitResult& fit, const ScalePriorSpec& scale_prior, const Family& family);

using LogDensityFn = std::function<double(const Eigen::VectorXd&)>;
using ScalarLogFn = std::function<double(double)>;

enum class TailDirection { left, right, both };

struct ImproprietyReport {
    bool improper = false;
    double peak_log = 0.0;
    double left_log_ratio = 0.0;   // log f(-30) - log peak
    double right_log_ratio = 0.0;
    double left_slope = 0.0;       // d log f / d beta at -30
    double right_slope = 0.0;
    std::string evidence;
};

ImproprietyReport detect_impropriety(const ScalarLogFn& marginal_loglik, TailDirection direction = TailDirection::both);

struct GridPosterior {
    std::vector<std::vector<double>> axes;
    std::vector<double> log_density;  // row-major, last axis fastest; normalized only when proper
    double log_normalizer = 0.0;
    bool proper = true;
    std::vector<ImproprietyReport> impropriety;  // per axis
    std::vector<std::vector<double>> marginals;  // per-axis density on the axis nodes
    std::vector<double> node_cdf;                // cumulative trapezoid mass, for sampling

    std::size_t dim() const { return axes.size(); }
    std::size_t size() const { return log_density.size(); }
    double marginal_mean(std::size_t axis) const;
    double marginal_sd(std::size_t axis) const;
    // P(beta_axis < b) from the trapezoid marginal, linear interpolation at b.
    double marginal_cdf(std::size_t axis, double b) const;
    // One draw: node chosen by trapezoid mass, then jittered uniformly within its cell.
    Eigen::VectorXd sample(RngStream& rng) const;
};

struct GridOptions {
    bool check_impropriety = true;
};

GridPosterior grid_posterior(const LogDensityFn& loglik, const std::vector<PriorSpec>& priors,
                             const std::vector<std::pair<double, double>>& bounds, int resolution,
                             const GridOptions& opts = {});

struct McmcChain {
    Eigen::MatrixXd draws;  // iterations x p, post burn-in
    double acceptance_rate = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
    int burn_in = 0;
    double proposal_scale = 0.0;  // frozen multiplier on the proposal Cholesky factor
};

struct MetropolisOptions {
    int adapt_batch = 100;
    double target_acceptance = 0.3;
};

McmcChain rw_metropolis(const LogDensityFn& log_post, const Eigen::VectorXd& init, const Eigen::MatrixXd& proposal_cov,
                        int n_iter, int burn_in, RngStream stream, const MetropolisOptions& opts = {});

// Independent chains on streams first_stream .. first_stream+n_chains-1, run in parallel.
std::vector<McmcChain> run_chains(const LogDensityFn& log_post, const Eigen::VectorXd& init,
                                  const Eigen::MatrixXd& proposal_cov, int n_chains, int n_iter, int burn_in,
                                  std::uint64_t seed, std::uint64_t first_stream = 0,
                                  const MetropolisOptions& opts = {});
Eigen::MatrixXd pool_draws(const std::vector<McmcChain>& chains);

struct PFormula {
    std::vector<double> axis0, axis1;
    std::vector<double> raw;           // row-major, axis1 fastest
    std::vector<double> renormalized;
};

PFormula p_formula_density(const FitResult& fit, const Family& family, const Link& link, const ModelData& data,
                           const std::vector<double>& axis0, const std::vector<double>& axis1, double phi);

// Flat-prior log posterior of a GLM plus per-coefficient priors.
LogDensityFn glm_log_posterior(const Family& family, const Link& link, const ModelData& data, double phi,
                               const std::vector<PriorSpec>& priors);

namespace serial {
GridPosterior grid_posterior(const LogDensityFn& loglik, const std::vector<PriorSpec>& priors,
                             const std::vector<std::pair<double, double>>& bounds, int resolution,
                             const GridOptions& opts = {});
std::vector<McmcChain> run_chains(const LogDensityFn& log_post, const Eigen::VectorXd& init,
                                  const Eigen::MatrixXd& proposal_cov, int n_chains, int n_iter, int burn_in,
                                  std::uint64_t seed, std::uint64_t first_stream = 0,
                                  const MetropolisOptions& opts = {});
}  // namespace serial

}  // namespace pival
