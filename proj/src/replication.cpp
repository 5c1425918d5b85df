#include "pival/replication.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "pival/errors.hpp"
#include "pival/inference.hpp"
#include "pival/numerics.hpp"
#include "pival/quadrature.hpp"

namespace pival {

PredictivePosterior predictive_posterior(const FitResult& fit, double phi) {
    if (fit.boundary) throw NotApplicableError("predictive_posterior: boundary fit");
    if (!fit.converged) throw ConvergenceError("predictive_posterior: fit did not converge");
    if (!(phi > 0.0)) throw DomainError("predictive_posterior: phi must be positive");
    PredictivePosterior out;
    const Eigen::MatrixXd sigma = phi * fit.cov_unscaled;
    out.predictive.mean = fit.beta_hat;
    out.predictive.cov = 3.0 * sigma;
    out.replicate_estimator.mean = fit.beta_hat;
    out.replicate_estimator.cov = 2.0 * sigma;
    return out;
}

double predictive_pi(double pi_init) {
    if (!(pi_init > 0.0 && pi_init <= 1.0)) throw DomainError("predictive_pi: pi must lie in (0,1]");
    if (pi_init == 1.0) return 1.0;
    return std::min(1.0, 2.0 * std_normal_cdf(std_normal_quantile(pi_init / 2.0) / std::sqrt(3.0)));
}

double predictive_pi_threshold(double level) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("predictive_pi_threshold: level must lie in (0,1)");
    return 2.0 * std_normal_cdf(std::sqrt(3.0) * std_normal_quantile(level / 2.0));
}

namespace {

double rpd_centre(double pi_init) {
    if (!(pi_init > 0.0 && pi_init <= 1.0)) throw DomainError("rpd: pi_init must lie in (0,1]");
    return pi_init == 1.0 ? 0.0 : std_normal_quantile(pi_init / 2.0);
}

// |z| at which 2 Phi(-|z|) = 10^-x.
double folded_z(double x) {
    if (x == 0.0) return 0.0;
    return std::numbers::sqrt2 * erfc_inverse(std::pow(10.0, -x));
}

constexpr double kMaxX = 300.0;

}  // namespace

double rpd_pdf(double x, double pi_init) {
    const double t = rpd_centre(pi_init);
    if (x < 0.0 || x > kMaxX) return 0.0;
    const double e = x == 0.0 ? 0.0 : erfc_inverse(std::pow(10.0, -x));
    const double a = std::numbers::sqrt2 * e;
    // Jacobian 10^-x exp(e^2) ln10 sqrt(pi/2), folded into the exponent; N(.|T, sqrt2) = exp(-d^2/4) / (2 sqrt(pi)).
    const double log_front = -x * std::numbers::ln10 + e * e + std::log(std::numbers::ln10) +
                             0.5 * std::log(std::numbers::pi / 2.0) - std::log(2.0 * std::sqrt(std::numbers::pi));
    const double d1 = a - t, d2 = -a - t;
    return std::exp(log_front - d1 * d1 / 4.0) + std::exp(log_front - d2 * d2 / 4.0);
}

double rpd_cdf(double x, double pi_init) {
    const double t = rpd_centre(pi_init);
    if (x <= 0.0) return 0.0;
    if (x > kMaxX) return 1.0;
    const double a = folded_z(x);
    return std_normal_cdf((a - t) / std::numbers::sqrt2) - std_normal_cdf((-a - t) / std::numbers::sqrt2);
}

double rpd_sf(double x, double pi_init) {
    const double t = rpd_centre(pi_init);
    if (x <= 0.0) return 1.0;
    if (x > kMaxX) return 0.0;
    const double a = folded_z(x);
    return std_normal_sf((a - t) / std::numbers::sqrt2) + std_normal_cdf((-a - t) / std::numbers::sqrt2);
}

RpdMoments rpd_moments(double pi_init) {
    rpd_centre(pi_init);
    const std::vector<double> breaks{0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, kMaxX};
    QuadOptions opts;
    opts.rel_tol = 1e-11;
    auto moment = [&](auto g) {
        return integrate_pieces([&](double x) { return g(x) * rpd_pdf(x, pi_init); }, breaks, opts).value;
    };
    RpdMoments m;
    const double mass = moment([](double) { return 1.0; });
    m.mean_log10 = moment([](double x) { return x; }) / mass;
    const double m2 = moment([](double x) { return x * x; }) / mass;
    m.sd_log10 = std::sqrt(std::max(0.0, m2 - m.mean_log10 * m.mean_log10));
    m.mean_raw = moment([](double x) { return std::pow(10.0, -x); }) / mass;
    const double r2 = moment([](double x) { return std::pow(10.0, -2.0 * x); }) / mass;
    m.sd_raw = std::sqrt(std::max(0.0, r2 - m.mean_raw * m.mean_raw));
    return m;
}

RpdCurve rpd_curve(double pi_init, double cap, double step) {
    if (!(cap > 0.0 && step > 0.0 && step < cap)) throw DomainError("rpd_curve: need 0 < step < cap");
    RpdCurve c;
    c.pi_init = pi_init;
    c.cap = cap;
    const auto n = static_cast<std::size_t>(std::llround(cap / step));
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = cap * static_cast<double>(i) / static_cast<double>(n);
        c.x.push_back(x);
        c.pdf.push_back(rpd_pdf(x, pi_init));
        c.cdf.push_back(rpd_cdf(x, pi_init));
    }
    c.mass_beyond_cap = rpd_sf(cap, pi_init);
    c.moments = rpd_moments(pi_init);
    return c;
}

void TranslationKernel::validate(Eigen::Index p) const {
    if (kind == KernelKind::gaussian) {
        if (bias.size() != 0 && bias.size() != p) throw DimensionError("kernel: bias length must equal p");
        if (inflation.size() != 0 && inflation.size() != p)
            throw DimensionError("kernel: inflation length must equal p");
        for (Eigen::Index j = 0; j < inflation.size(); ++j)
            if (!(inflation[j] >= 1.0))
                throw DomainError("kernel: inflation below 1 cannot be expressed as added variance");
    }
    if (scale_kind == ScaleKernelKind::lognormal && !(scale_sd >= 0.0))
        throw DomainError("kernel: lognormal sd must be non-negative");
}

BayesAnalysis BayesAnalysis::flat() { return {"bayes_flat", {}}; }

BayesAnalysis BayesAnalysis::student_t(double df, double scale, Eigen::Index p) {
    BayesAnalysis a;
    a.name = "bayes_student_t";
    a.priors.push_back(PriorSpec::flat());
    for (Eigen::Index j = 1; j < p; ++j) a.priors.push_back(PriorSpec::student_t(df, 0.0, scale));
    return a;
}

void ReplicationConfig::validate() const {
    if (n_sim < 100) throw DomainError("replication: n_sim must be at least 100");
    if (!run_ml && bayes.empty()) throw DomainError("replication: no analyses configured");
    if (min_events_guard < 0) throw DomainError("replication: min_events_guard must be non-negative");
    if (grid_resolution < 3 || chains < 1 || chain_draws < 1 || chain_burn_in < 0)
        throw DomainError("replication: bad grid/chain sizing");
}

namespace {

struct Prepared {
    const InitialPosterior* initial = nullptr;
    Family family{FamilyKind::gaussian};
    Link link{LinkKind::identity};
    const ReplicationConfig* cfg = nullptr;
    ModelData design;                    // replicate design, y unused
    Eigen::Index p = 0;
    Eigen::Index index = 0;
    Eigen::VectorXd centre;              // fit mean (fit initial only)
    Eigen::MatrixXd chol;                // Cholesky of cov_unscaled (fit initial only)
    double s2 = 1.0;                     // D/(n-p) for the Eq. 36 scale draw
    int scale_dof = 0;
    Eigen::VectorXd initial_sd;          // per-coefficient initial posterior sd
    std::vector<std::vector<Eigen::Index>> groups;  // rows sharing a design row
};

Prepared prepare(const InitialPosterior& initial, const ModelData& initial_data, const Family& family, const Link& link,
                 const ReplicationConfig& cfg) {
    cfg.validate();
    Prepared pr;
    pr.initial = &initial;
    pr.family = family;
    pr.link = link;
    pr.cfg = &cfg;
    const ModelData base = initial_data.with_defaults();
    pr.design = cfg.replicate_design ? cfg.replicate_design->with_defaults() : base;
    pr.p = pr.design.p();
    if (pr.p != base.p()) throw DimensionError("replication: replicate design must have the initial p columns");
    pr.index = cfg.index < 0 ? pr.p - 1 : cfg.index;
    if (pr.index >= pr.p) throw DomainError("replication: coefficient index out of range");
    cfg.kernel.validate(pr.p);
    if (family.kind() == FamilyKind::binomial && pr.design.trials.size() != pr.design.n())
        throw DimensionError("replication: binomial design needs trials");

    if (const auto* fit = std::get_if<FitResult>(&initial)) {
        if (fit->boundary) throw NotApplicableError("replication: initial fit is a boundary fit");
        if (!fit->converged) throw ConvergenceError("replication: initial fit did not converge");
        pr.centre = fit->beta_hat;
        Eigen::LLT<Eigen::MatrixXd> llt(fit->cov_unscaled);
        if (llt.info() != Eigen::Success) throw DomainError("replication: initial covariance not positive definite");
        pr.chol = llt.matrixL();
        const long nmp = static_cast<long>(fit->n - fit->p);
        pr.scale_dof = cfg.scale_dof ? *cfg.scale_dof : static_cast<int>(nmp);
        if (!family.known_scale()) {
            if (nmp <= 0 || pr.scale_dof <= 0) throw DofError("replication: scale draw needs positive dof");
            pr.s2 = fit->deviance / static_cast<double>(nmp);
        }
        pr.initial_sd = (fit->cov_unscaled.diagonal() * (family.known_scale() ? 1.0 : pr.s2)).cwiseSqrt();
    } else if (const auto* grid = std::get_if<GridPosterior>(&initial)) {
        if (static_cast<Eigen::Index>(grid->dim()) != pr.p) throw DimensionError("replication: grid dimension != p");
        if (!grid->proper) throw NotApplicableError("replication: initial grid posterior is improper");
        pr.initial_sd.resize(pr.p);
        for (Eigen::Index j = 0; j < pr.p; ++j) pr.initial_sd[j] = grid->marginal_sd(static_cast<std::size_t>(j));
    } else {
        const auto& draws = std::get<Eigen::MatrixXd>(initial);
        if (draws.cols() != pr.p || draws.rows() < 2) throw DimensionError("replication: draw matrix must be m x p");
        const Eigen::RowVectorXd mean = draws.colwise().mean();
        pr.initial_sd = ((draws.rowwise() - mean).array().square().colwise().sum() / (draws.rows() - 1.0)).sqrt();
    }

    std::map<std::vector<double>, std::size_t> seen;
    for (Eigen::Index i = 0; i < pr.design.n(); ++i) {
        std::vector<double> key;
        for (Eigen::Index j = 0; j < pr.p; ++j) key.push_back(pr.design.X(i, j));
        auto [it, inserted] = seen.emplace(key, pr.groups.size());
        if (inserted) pr.groups.emplace_back();
        pr.groups[it->second].push_back(i);
    }
    return pr;
}

std::pair<Eigen::VectorXd, double> draw_initial(const Prepared& pr, RngStream& rng) {
    const auto& cfg = *pr.cfg;
    if (std::holds_alternative<FitResult>(*pr.initial)) {
        double phi = 1.0;
        if (!pr.family.known_scale()) phi = pr.scale_dof * pr.s2 / rng.chi_squared(pr.scale_dof);
        Eigen::VectorXd z(pr.p);
        for (Eigen::Index j = 0; j < pr.p; ++j) z[j] = rng.normal();
        return {pr.centre + std::sqrt(phi) * (pr.chol * z), phi};
    }
    const double phi = pr.family.known_scale() ? 1.0 : cfg.phi_plug;
    if (const auto* grid = std::get_if<GridPosterior>(pr.initial)) return {grid->sample(rng), phi};
    const auto& draws = std::get<Eigen::MatrixXd>(*pr.initial);
    const auto row = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(draws.rows())));
    return {draws.row(row).transpose(), phi};
}

void apply_kernel(const Prepared& pr, RngStream& rng, Eigen::VectorXd& beta, double& phi) {
    const auto& k = pr.cfg->kernel;
    if (k.kind == KernelKind::gaussian) {
        for (Eigen::Index j = 0; j < pr.p; ++j) {
            const double infl = k.inflation.size() ? k.inflation[j] : 1.0;
            const double extra = pr.initial_sd[j] * std::sqrt(infl * infl - 1.0);
            const double b = k.bias.size() ? k.bias[j] : 0.0;
            beta[j] += b + extra * rng.normal();
        }
    }
    if (k.scale_kind == ScaleKernelKind::lognormal) phi *= std::exp(k.scale_sd * rng.normal());
}

double simulate_response(const Family& family, double mu, double phi, double weight, double trials, RngStream& rng) {
    switch (family.kind()) {
        case FamilyKind::gaussian: return rng.normal(mu, std::sqrt(phi / weight));
        case FamilyKind::poisson: return static_cast<double>(rng.poisson(mu));
        case FamilyKind::binomial:
            return static_cast<double>(rng.binomial(static_cast<std::int64_t>(std::llround(trials)), mu)) / trials;
        case FamilyKind::gamma: {
            const double shape = weight / phi;
            return rng.gamma(shape, mu / shape);
        }
    }
    return 0.0;
}

bool counts_family(const Family& f) { return f.kind() == FamilyKind::poisson || f.kind() == FamilyKind::binomial; }

void run_bayes(const Prepared& pr, const ModelData& data, const FitResult& fit, double phi, const BayesAnalysis& an,
               RngStream& rng, BayesOutcome& out) {
    const auto& cfg = *pr.cfg;
    const Eigen::VectorXd se = fit.standard_errors(phi);
    if (pr.p == 2) {
        std::vector<std::pair<double, double>> bounds;
        for (Eigen::Index j = 0; j < 2; ++j)
            bounds.emplace_back(fit.beta_hat[j] - cfg.grid_half_width_se * se[j],
                                fit.beta_hat[j] + cfg.grid_half_width_se * se[j]);
        const Family family = pr.family;
        const Link link = pr.link;
        auto loglik = [&](const Eigen::VectorXd& b) { return log_likelihood(family, link, b, phi, data); };
        const auto grid = serial::grid_posterior(loglik, an.priors, bounds, cfg.grid_resolution);
        if (!grid.proper) {
            out.failure_reason = "improper posterior";
            return;
        }
        out.pi = pi_value_grid(grid, static_cast<std::size_t>(pr.index), 0.0).p_or_pi;
        out.draw = grid.sample(rng);
    } else {
        const auto lp = glm_log_posterior(pr.family, pr.link, data, phi, an.priors);
        const auto chains = serial::run_chains(lp, fit.beta_hat, phi * fit.cov_unscaled, cfg.chains,
                                               cfg.chain_draws, cfg.chain_burn_in, rng.next_u64());
        const Eigen::MatrixXd pooled = pool_draws(chains);
        const Eigen::VectorXd col = pooled.col(pr.index);
        out.pi = pi_value_from_samples(std::span<const double>(col.data(), col.size()), 0.0, SampleMethod::mixture)
                     .p_or_pi;
        out.draw = pooled.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(pooled.rows())))).transpose();
    }
    out.ok = true;
}

ReplicateRecord one_replicate(const Prepared& pr, std::size_t i) {
    const auto& cfg = *pr.cfg;
    ReplicateRecord rec;
    rec.index = i;
    rec.bayes.resize(cfg.bayes.size());
    RngStream rng(cfg.seed, static_cast<std::uint64_t>(i));
    try {
        auto [beta, phi] = draw_initial(pr, rng);
        apply_kernel(pr, rng, beta, phi);
        rec.beta_g = beta;
        rec.phi_g = phi;

        ModelData data = pr.design;
        const Eigen::VectorXd mu = fitted_means(pr.link, beta, data);
        data.y.resize(data.n());
        for (Eigen::Index r = 0; r < data.n(); ++r) {
            if (!pr.family.mean_in_domain(mu[r])) throw DomainError("replicate mean outside the family domain");
            data.y[r] = simulate_response(pr.family, mu[r], phi, data.weights[r],
                                          data.trials.size() ? data.trials[r] : 1.0, rng);
        }
        rec.y_rep = data.y;

        if (counts_family(pr.family) && cfg.min_events_guard > 0) {
            for (const auto& g : pr.groups) {
                double events = 0.0;
                for (auto r : g) events += data.trials.size() ? data.y[r] * data.trials[r] : data.y[r];
                if (events < cfg.min_events_guard) {
                    rec.failed = true;
                    rec.failure_reason = "fewer than " + std::to_string(cfg.min_events_guard) + " events in a design group";
                    return rec;
                }
            }
        }

        const FitResult fit = fit_irls(pr.family, pr.link, data);
        rec.ml_boundary = fit.boundary;
        if (!fit.converged) {
            rec.failed = true;
            rec.failure_reason = "non-convergence";
            return rec;
        }
        if (fit.boundary && (cfg.boundary_is_failure || !cfg.bayes.empty())) {
            rec.failed = true;
            rec.failure_reason = "boundary fit: " + fit.boundary_reason;
            return rec;
        }
        const double phi_hat = fit.inferential_phi();
        rec.ml_estimates = fit.beta_hat;
        rec.ml_se = fit.standard_errors(phi_hat);
        rec.ml_p.resize(pr.p);
        for (Eigen::Index j = 0; j < pr.p; ++j) rec.ml_p[j] = wald_pvalue(fit, phi_hat, j).p_or_pi;

        for (std::size_t a = 0; a < cfg.bayes.size(); ++a) {
            run_bayes(pr, data, fit, phi_hat, cfg.bayes[a], rng, rec.bayes[a]);
            if (!rec.bayes[a].ok) {
                rec.failed = true;
                rec.failure_reason = cfg.bayes[a].name + ": " + rec.bayes[a].failure_reason;
            }
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure_reason = e.what();
    }
    return rec;
}

double quantile_type7(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    sd = v.size() > 1 ? std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) : 0.0;
}

ReplicationReport assemble(const Prepared& pr, std::vector<ReplicateRecord> records) {
    const auto& cfg = *pr.cfg;
    ReplicationReport rep;
    rep.seed = cfg.seed;
    rep.index = pr.index;
    for (const auto& b : cfg.bayes) rep.bayes_names.push_back(b.name);
    auto& s = rep.summary;
    s.n_sim = cfg.n_sim;
    s.quantile_levels = {0.05, 0.25, 0.5, 0.75, 0.95};
    std::vector<double> est, nlp;
    for (const auto& r : records) {
        if (r.failed) {
            ++s.n_failed;
            continue;
        }
        est.push_back(r.ml_estimates[pr.index]);
        nlp.push_back(-std::log10(r.ml_p[pr.index]));
    }
    s.fraction_failed = static_cast<double>(s.n_failed) / cfg.n_sim;
    if (est.empty()) throw HarnessError("replication: every replicate failed");
    mean_sd(est, s.ml_mean, s.ml_sd);
    s.ml_var = s.ml_sd * s.ml_sd;
    s.ml_mc_se = s.ml_sd / std::sqrt(static_cast<double>(est.size()));
    for (double q : s.quantile_levels) s.neglog10_p_quantiles.push_back(quantile_type7(nlp, q));
    s.fraction_p_below_005 =
        static_cast<double>(std::count_if(nlp.begin(), nlp.end(), [](double v) { return v > -std::log10(0.05); })) /
        static_cast<double>(nlp.size());
    for (std::size_t a = 0; a < cfg.bayes.size(); ++a) {
        BayesSummary bs;
        bs.name = cfg.bayes[a].name;
        std::vector<double> draws, nlpi;
        std::size_t below = 0;
        for (const auto& r : records) {
            if (r.failed) continue;
            draws.push_back(r.bayes[a].draw[pr.index]);
            nlpi.push_back(-std::log10(std::max(r.bayes[a].pi, 1e-300)));
            below += r.bayes[a].pi < 0.05;
        }
        mean_sd(draws, bs.draw_mean, bs.draw_sd);
        bs.fraction_pi_below_005 = static_cast<double>(below) / static_cast<double>(draws.size());
        for (double q : s.quantile_levels) bs.neglog10_pi_quantiles.push_back(quantile_type7(nlpi, q));
        s.bayes.push_back(bs);
    }
    rep.records = std::move(records);
    return rep;
}

}  // namespace

ReplicationReport run_replication(const InitialPosterior& initial, const ModelData& initial_data, const Family& family,
                                  const Link& link, const ReplicationConfig& config) {
    const Prepared pr = prepare(initial, initial_data, family, link, config);
    std::vector<ReplicateRecord> records(static_cast<std::size_t>(config.n_sim));
    // Each replicate owns stream (seed, index), so the schedule cannot change any record.
#pragma omp parallel for schedule(dynamic, 16)
    for (int i = 0; i < config.n_sim; ++i) records[i] = one_replicate(pr, static_cast<std::size_t>(i));
    return assemble(pr, std::move(records));
}

namespace serial {
ReplicationReport run_replication(const InitialPosterior& initial, const ModelData& initial_data, const Family& family,
                                  const Link& link, const ReplicationConfig& config) {
    const Prepared pr = prepare(initial, initial_data, family, link, config);
    std::vector<ReplicateRecord> records;
    records.reserve(static_cast<std::size_t>(config.n_sim));
    for (int i = 0; i < config.n_sim; ++i) records.push_back(one_replicate(pr, static_cast<std::size_t>(i)));
    return assemble(pr, std::move(records));
}
}  // namespace serial

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw DomainError("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

}  // namespace pival
