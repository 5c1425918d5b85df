#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pival/family.hpp"

namespace pival {

// For binomial data y holds proportions and `trials` the binomial sizes; the
// working prior weight is weights[i] * trials[i].
struct ModelData {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    Eigen::VectorXd offset;
    Eigen::VectorXd weights;
    Eigen::VectorXd trials;  // binomial only; empty otherwise
    std::vector<std::string> coef_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    // Prior weight times trials (binomial) or prior weight.
    double case_weight(Eigen::Index i) const;

    // Fills defaults (zero offset, unit weights, names b0..) and checks shapes, rank and response domain.
    void validate(const Family& family) const;
    ModelData with_defaults() const;

    static ModelData binomial(const Eigen::VectorXd& successes, const Eigen::VectorXd& trials, const Eigen::MatrixXd& X);
};

struct ScaleEstimates {
    double phi_mom = 0.0;
    double phi_eql = 0.0;
    double phi_dev = 0.0;
    double phi_mpl = 0.0;
};

struct FitOptions {
    double tol_deviance = 1e-10;
    double tol_score = 1e-8;
    int max_iter = 50;
    double divergence_guard = 15.0;
    double mean_underflow = 1e-10;
    int max_halvings = 30;
};

struct FitResult {
    FamilyKind family = FamilyKind::gaussian;
    LinkKind link = LinkKind::identity;
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd cov_unscaled;
    Eigen::VectorXd mu_hat;
    Eigen::VectorXd working_weights;
    double deviance = 0.0;
    std::optional<ScaleEstimates> scale;  // absent when n == p
    bool converged = false;
    bool boundary = false;
    std::string boundary_reason;
    int iterations = 0;
    double loglik_at_mle = 0.0;  // at phi = 1 for known-scale families, phi_dev otherwise (1 when n == p)
    double score_norm = 0.0;
    Eigen::Index n = 0;
    Eigen::Index p = 0;

    // Scale used for inference: 1 for known-scale families, phi_dev otherwise.
    double inferential_phi() const;
    Eigen::VectorXd standard_errors(double phi) const;
};

double log_likelihood(const Family& family, const Link& link, const Eigen::VectorXd& beta, double phi,
                      const ModelData& data);
// Log-likelihood of the saturated model (mu = y).
double saturated_log_likelihood(const Family& family, double phi, const ModelData& data);

Eigen::VectorXd linear_predictor(const Eigen::VectorXd& beta, const ModelData& data);
Eigen::VectorXd fitted_means(const Link& link, const Eigen::VectorXd& beta, const ModelData& data);

// d ll / d beta. phi is ignored for known-scale families, as in log_likelihood.
Eigen::VectorXd score(const Family& family, const Link& link, const Eigen::VectorXd& beta, double phi,
                      const ModelData& data);
// X^T W X / phi with W the Fisher-scoring weights.
Eigen::MatrixXd expected_information(const Family& family, const Link& link, const Eigen::VectorXd& beta,
                                     double phi, const ModelData& data);

double deviance(const Family& family, const ModelData& data, const Eigen::VectorXd& mu_hat);

FitResult fit_irls(const Family& family, const Link& link, const ModelData& data, const FitOptions& opts = {});
// Throws ConvergenceError / BoundaryError for flagged fits.
void require_clean(const FitResult& fit);

ScaleEstimates scale_estimates(const Family& family, const Link& link, const ModelData& data, const FitResult& fit);

double saddlepoint_logpdf(const Family& family, double y, double mu, double phi);

}  // namespace pival
