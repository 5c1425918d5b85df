#include "pival/glm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pival/errors.hpp"

namespace pival {

namespace {

double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

double lchoose(double n, double k) { return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0); }

// Log density of one observation at mean mu; mu may sit on the closure of the domain (saturated model).
double obs_loglik(const Family& family, double y, double mu, double phi, double a, double trials) {
    switch (family.kind()) {
        case FamilyKind::gaussian:
            return -0.5 * std::log(2.0 * std::numbers::pi * phi / a) - a * (y - mu) * (y - mu) / (2.0 * phi);
        case FamilyKind::poisson:
            return a * (xlogy(y, mu) - mu - std::lgamma(y + 1.0));
        case FamilyKind::binomial: {
            const double s = y * trials;
            return a * (lchoose(trials, s) + xlogy(s, mu) + xlogy(trials - s, 1.0 - mu));
        }
        case FamilyKind::gamma: {
            const double k = a / phi;
            return k * std::log(k) - std::lgamma(k) + (k - 1.0) * std::log(y) - k * std::log(mu) - k * y / mu;
        }
    }
    return 0.0;
}

Eigen::MatrixXd unscaled_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& w) {
    const Eigen::MatrixXd wx = w.cwiseSqrt().asDiagonal() * X;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
    const Eigen::Index p = X.cols();
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv = r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd perm = qr.colsPermutation();
    Eigen::MatrixXd cov = perm * (rinv * rinv.transpose()) * perm.transpose();
    return 0.5 * (cov + cov.transpose());
}

Eigen::VectorXd fisher_weights(const Family& family, const Link& link, const ModelData& data,
                               const Eigen::VectorXd& mu) {
    Eigen::VectorXd w(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        const double gp = link.dg(mu[i]);
        w[i] = data.case_weight(i) / (family.variance(mu[i]) * gp * gp);
    }
    return w;
}

bool means_valid(const Family& family, const Link& link, const Eigen::VectorXd& mu) {
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (!family.mean_in_domain(mu[i]) || !link.mu_in_range(mu[i])) return false;
    return true;
}

double initial_mean(const Family& family, const Link& link, double y, double trials) {
    double mu = y;
    switch (family.kind()) {
        case FamilyKind::poisson: mu = y > 0.0 ? y : 0.5; break;
        case FamilyKind::binomial: mu = (y * trials + 0.5) / (trials + 1.0); break;
        default: break;
    }
    if (!link.mu_in_range(mu)) {
        if (link.kind() == LinkKind::log) mu = std::max(std::abs(mu), 1e-3);
        if (link.kind() == LinkKind::logit) mu = std::clamp(mu, 0.01, 0.99);
    }
    return mu;
}

}  // namespace

double ModelData::case_weight(Eigen::Index i) const {
    const double a = weights.size() ? weights[i] : 1.0;
    return trials.size() ? a * trials[i] : a;
}

ModelData ModelData::with_defaults() const {
    ModelData d = *this;
    if (d.offset.size() == 0) d.offset = Eigen::VectorXd::Zero(d.n());
    if (d.weights.size() == 0) d.weights = Eigen::VectorXd::Ones(d.n());
    if (d.coef_names.empty())
        for (Eigen::Index j = 0; j < d.p(); ++j) d.coef_names.push_back("b" + std::to_string(j));
    return d;
}

ModelData ModelData::binomial(const Eigen::VectorXd& successes, const Eigen::VectorXd& trials,
                              const Eigen::MatrixXd& X) {
    ModelData d;
    d.y = successes.cwiseQuotient(trials);
    d.trials = trials;
    d.X = X;
    return d.with_defaults();
}

void ModelData::validate(const Family& family) const {
    const Eigen::Index rows = X.rows();
    if (y.size() != rows) throw DimensionError("ModelData: y and X row counts differ");
    if (offset.size() != 0 && offset.size() != rows) throw DimensionError("ModelData: offset length mismatch");
    if (weights.size() != 0 && weights.size() != rows) throw DimensionError("ModelData: weights length mismatch");
    if (rows < X.cols() || X.cols() == 0) throw DesignError("ModelData: need n >= p >= 1");
    if (!X.allFinite()) throw DomainError("ModelData: non-finite design entry");
    if (offset.size() && !offset.allFinite()) throw DomainError("ModelData: non-finite offset");
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        if (!(weights[i] > 0.0)) throw DomainError("ModelData: prior weights must be positive");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) throw DesignError("ModelData: design matrix is rank deficient");
    if (family.kind() == FamilyKind::binomial) {
        if (trials.size() != rows) throw DimensionError("ModelData: binomial data need trials");
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double s = y[i] * trials[i];
            if (!(trials[i] > 0.0) || s < -1e-9 || s > trials[i] + 1e-9 || std::abs(s - std::round(s)) > 1e-8)
                throw DomainError("ModelData: binomial successes must be integers in [0, trials]");
        }
    }
    for (Eigen::Index i = 0; i < rows; ++i)
        if (!family.response_in_domain(y[i]))
            throw DomainError("ModelData: response " + std::to_string(y[i]) + " outside the " + family.name() +
                              " support (row " + std::to_string(i) + ")");
}

double FitResult::inferential_phi() const {
    if (family == FamilyKind::poisson || family == FamilyKind::binomial) return 1.0;
    if (!scale) throw DofError("scale not estimable with n == p");
    return scale->phi_dev;
}

Eigen::VectorXd FitResult::standard_errors(double phi) const { return (phi * cov_unscaled.diagonal()).cwiseSqrt(); }

Eigen::VectorXd linear_predictor(const Eigen::VectorXd& beta, const ModelData& data) {
    Eigen::VectorXd eta = data.X * beta;
    if (data.offset.size()) eta += data.offset;
    return eta;
}

Eigen::VectorXd fitted_means(const Link& link, const Eigen::VectorXd& beta, const ModelData& data) {
    const Eigen::VectorXd eta = linear_predictor(beta, data);
    Eigen::VectorXd mu(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = link.ginv(eta[i]);
    return mu;
}

double log_likelihood(const Family& family, const Link& link, const Eigen::VectorXd& beta, double phi,
                      const ModelData& data) {
    if (!(phi > 0.0)) throw DomainError("log_likelihood: phi must be positive");
    if (!beta.allFinite()) throw DomainError("log_likelihood: non-finite beta");
    const Eigen::VectorXd mu = fitted_means(link, beta, data);
    double ll = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (!family.mean_in_domain(mu[i]))
            throw DomainError("log_likelihood: mean " + std::to_string(mu[i]) + " outside the " + family.name() +
                              " domain");
        const double a = data.weights.size() ? data.weights[i] : 1.0;
        const double m = data.trials.size() ? data.trials[i] : 1.0;
        ll += obs_loglik(family, data.y[i], mu[i], phi, a, m);
    }
    return ll;
}

double saturated_log_likelihood(const Family& family, double phi, const ModelData& data) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        const double a = data.weights.size() ? data.weights[i] : 1.0;
        const double m = data.trials.size() ? data.trials[i] : 1.0;
        ll += obs_loglik(family, data.y[i], data.y[i], phi, a, m);
    }
    return ll;
}

Eigen::VectorXd score(const Family& family, const Link& link, const Eigen::VectorXd& beta, double phi,
                      const ModelData& data) {
    const Eigen::VectorXd mu = fitted_means(link, beta, data);
    Eigen::VectorXd u(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        u[i] = data.case_weight(i) * (data.y[i] - mu[i]) / (family.variance(mu[i]) * link.dg(mu[i]));
    return data.X.transpose() * u / (family.known_scale() ? 1.0 : phi);
}

Eigen::MatrixXd expected_information(const Family& family, const Link& link, const Eigen::VectorXd& beta,
                                     double phi, const ModelData& data) {
    const Eigen::VectorXd w = fisher_weights(family, link, data, fitted_means(link, beta, data));
    return data.X.transpose() * w.asDiagonal() * data.X / (family.known_scale() ? 1.0 : phi);
}

double deviance(const Family& family, const ModelData& data, const Eigen::VectorXd& mu_hat) {
    if (mu_hat.size() != data.y.size()) throw DimensionError("deviance: mu_hat length mismatch");
    double d = 0.0;
    for (Eigen::Index i = 0; i < mu_hat.size(); ++i) d += data.case_weight(i) * family.unit_deviance(data.y[i], mu_hat[i]);
    return d;
}

FitResult fit_irls(const Family& family, const Link& link, const ModelData& raw, const FitOptions& opts) {
    raw.validate(family);
    const ModelData data = raw.with_defaults();
    const Eigen::Index n = data.n(), p = data.p();

    FitResult fit;
    fit.family = family.kind();
    fit.link = link.kind();
    fit.n = n;
    fit.p = p;

    Eigen::VectorXd mu(n), eta(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mu[i] = initial_mean(family, link, data.y[i], data.trials.size() ? data.trials[i] : 1.0);
        eta[i] = link.g(mu[i]);
    }
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    bool have_beta = false;
    double dev_old = deviance(family, data, mu);

    for (int it = 1; it <= opts.max_iter; ++it) {
        fit.iterations = it;
        const Eigen::VectorXd w = fisher_weights(family, link, data, mu);
        Eigen::VectorXd z(n);
        for (Eigen::Index i = 0; i < n; ++i) z[i] = eta[i] - data.offset[i] + (data.y[i] - mu[i]) * link.dg(mu[i]);
        const Eigen::VectorXd sw = w.cwiseSqrt();
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sw.asDiagonal() * data.X);
        if (qr.rank() < p) throw DesignError("fit_irls: weighted design lost rank");
        Eigen::VectorXd beta_new = qr.solve(sw.cwiseProduct(z));

        Eigen::VectorXd mu_new = fitted_means(link, beta_new, data);
        double dev_new = means_valid(family, link, mu_new) ? deviance(family, data, mu_new)
                                                           : std::numeric_limits<double>::infinity();
        if (have_beta) {
            int halvings = 0;
            while (!(std::isfinite(dev_new) && dev_new <= dev_old * (1.0 + 1e-12) + 1e-12)) {
                if (++halvings > opts.max_halvings) break;
                beta_new = 0.5 * (beta_new + beta);
                mu_new = fitted_means(link, beta_new, data);
                dev_new = means_valid(family, link, mu_new) ? deviance(family, data, mu_new)
                                                            : std::numeric_limits<double>::infinity();
            }
            if (halvings > opts.max_halvings) {
                fit.boundary = true;
                fit.boundary_reason = "step-halving failure";
                break;
            }
        } else if (!std::isfinite(dev_new)) {
            throw DomainError("fit_irls: first IRLS step left the mean domain; supply a different link or start");
        }

        beta = beta_new;
        have_beta = true;
        mu = mu_new;
        eta = linear_predictor(beta, data);
        const double rel = std::abs(dev_new - dev_old) / (std::abs(dev_new) + 0.1);
        dev_old = dev_new;
        fit.score_norm = score(family, link, beta, 1.0, data).lpNorm<Eigen::Infinity>();
        if (rel < opts.tol_deviance && fit.score_norm < opts.tol_score) {
            fit.converged = true;
            break;
        }
    }

    fit.beta_hat = beta;
    fit.mu_hat = mu;
    fit.deviance = dev_old;
    fit.working_weights = fisher_weights(family, link, data, mu);
    fit.cov_unscaled = unscaled_covariance(data.X, fit.working_weights);

    if (fit.boundary_reason.empty()) {
        for (Eigen::Index j = 0; j < p; ++j)
            if (std::abs(beta[j]) > opts.divergence_guard) {
                fit.boundary = true;
                fit.boundary_reason = "coefficient " + data.coef_names[j] + " beyond divergence guard";
                break;
            }
    }
    if (fit.boundary_reason.empty() && family.kind() != FamilyKind::gaussian) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool low = mu[i] < opts.mean_underflow;
            const bool high = family.kind() == FamilyKind::binomial && mu[i] > 1.0 - opts.mean_underflow;
            if ((low && family.kind() != FamilyKind::gamma) || high) {
                fit.boundary = true;
                fit.boundary_reason = "fitted mean underflow at row " + std::to_string(i);
                break;
            }
        }
    }

    if (n > p && fit.converged) fit.scale = scale_estimates(family, link, data, fit);
    double phi_ll = 1.0;
    if (!family.known_scale() && fit.scale && fit.scale->phi_dev > 0.0) phi_ll = fit.scale->phi_dev;
    fit.loglik_at_mle = log_likelihood(family, link, beta, phi_ll, data);
    return fit;
}

void require_clean(const FitResult& fit) {
    if (!fit.converged) throw ConvergenceError("IRLS did not converge");
    if (fit.boundary) throw BoundaryError("boundary fit: " + fit.boundary_reason);
}

ScaleEstimates scale_estimates(const Family& family, const Link& link, const ModelData& raw, const FitResult& fit) {
    const ModelData data = raw.with_defaults();
    const Eigen::Index n = data.n(), p = data.p();
    if (n <= p) throw DofError("scale_estimates: n must exceed p");
    ScaleEstimates s;
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double r = data.y[i] - fit.mu_hat[i];
        pearson += data.case_weight(i) * r * r / family.variance(fit.mu_hat[i]);
    }
    const double dn = static_cast<double>(n), dp = static_cast<double>(p);
    s.phi_mom = pearson / (dn - dp);
    const double dev = deviance(family, data, fit.mu_hat);
    s.phi_eql = dev / dn;
    s.phi_dev = s.phi_eql * dn / (dn - dp);
    if (!(dev > 0.0)) return s;

    // Eq. 10 profile: (p/2) log phi + ll(beta_hat, phi). For poisson/binomial phi is absent from the exact
    // density, so the saddlepoint form is profiled instead (its phi-free V(y) term dropped).
    auto profile = [&](double t) {
        const double phi = std::exp(t);
        double ll = 0.0;
        if (family.known_scale()) {
            for (Eigen::Index i = 0; i < n; ++i) {
                const double a = data.case_weight(i);
                ll += -0.5 * std::log(2.0 * std::numbers::pi * phi / a) -
                      a * family.unit_deviance(data.y[i], fit.mu_hat[i]) / (2.0 * phi);
            }
        } else {
            ll = log_likelihood(family, link, fit.beta_hat, phi, data);
        }
        return 0.5 * dp * t + ll;
    };
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = std::log(s.phi_dev) - 5.0, b = std::log(s.phi_dev) + 5.0;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = profile(c), fd = profile(d);
    while (b - a > 1e-10) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = profile(d);
        }
    }
    s.phi_mpl = std::exp(0.5 * (a + b));
    return s;
}

double saddlepoint_logpdf(const Family& family, double y, double mu, double phi) {
    if (!(phi > 0.0)) throw DomainError("saddlepoint_logpdf: phi must be positive");
    const double v = family.variance(y);
    if (!(v > 0.0) || !family.mean_in_domain(y)) throw SupportError("saddlepoint_logpdf: V(y) = 0 at the response");
    return -0.5 * std::log(2.0 * std::numbers::pi * phi * v) - family.unit_deviance(y, mu) / (2.0 * phi);
}

}  // namespace pival
