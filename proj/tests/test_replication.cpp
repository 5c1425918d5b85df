#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pival/errors.hpp"
#include "pival/inference.hpp"
#include "pival/replication.hpp"

using namespace pival;

namespace {

const Family kPoisson(FamilyKind::poisson);
const Link kLog(LinkKind::log);

double phi_ref(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Monte Carlo oracle for the replicate pi-value: z_rep ~ N(z_init, sqrt 2), pi_rep = 2 Phi(-|z_rep|).
std::vector<double> mc_pi_rep(double pi_init, int n, std::uint64_t seed) {
    RngStream r(seed, 0);
    const double z0 = -std::abs(std_normal_quantile(pi_init / 2.0));
    std::vector<double> out(n);
    for (auto& v : out) v = 2.0 * phi_ref(-std::abs(r.normal(z0, std::numbers::sqrt2)));
    return out;
}

struct Stats {
    double mean, var, n;
};

Stats estimate_stats(const ReplicationReport& rep) {
    double s = 0.0, s2 = 0.0, n = 0.0;
    for (const auto& r : rep.records) {
        if (r.failed) continue;
        const double v = r.ml_estimates[rep.index];
        s += v;
        s2 += v * v;
        n += 1.0;
    }
    const double mean = s / n;
    return {mean, (s2 - n * mean * mean) / (n - 1.0), n};
}

ReplicationConfig ml_config(int n_sim, std::uint64_t seed) {
    ReplicationConfig c;
    c.n_sim = n_sim;
    c.seed = seed;
    return c;
}

const FitResult& credence_fit() {
    static const FitResult fit = fit_irls(kPoisson, kLog, fixture::credence_primary());
    return fit;
}

const ReplicationReport& credence_exact_run() {
    static const ReplicationReport rep =
        run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, ml_config(5000, 20240601));
    return rep;
}

}  // namespace

TEST_CASE("predictive posterior scales the covariance") {
    const FitResult& fit = credence_fit();
    const auto pp = predictive_posterior(fit, 1.0);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) {
            CHECK(pp.predictive.cov(i, j) == doctest::Approx(3.0 * fit.cov_unscaled(i, j)).epsilon(1e-15));
            CHECK(pp.replicate_estimator.cov(i, j) == doctest::Approx(2.0 * fit.cov_unscaled(i, j)).epsilon(1e-15));
        }
    CHECK(std::sqrt(pp.predictive.cov(1, 1)) == doctest::Approx(std::sqrt(3.0) * 0.0838).epsilon(2e-3));
    CHECK(std::sqrt(pp.predictive.cov(1, 1)) == doctest::Approx(0.1451).epsilon(2e-3));
    CHECK(std::sqrt(pp.replicate_estimator.cov(1, 1)) == doctest::Approx(0.1185).epsilon(2e-3));
    CHECK(pp.predictive.mean == fit.beta_hat);
    CHECK_THROWS_AS(predictive_posterior(fit_irls(kPoisson, kLog, fixture::dapa_dka()), 1.0), NotApplicableError);
}

TEST_CASE("predictive pi-values") {
    CHECK(predictive_pi(1.0) == 1.0);
    CHECK(predictive_pi(3.23e-5) == doctest::Approx(0.0164).epsilon(5e-3));
    CHECK(predictive_pi(7.79e-8) == doctest::Approx(0.0019).epsilon(3e-2));
    const double q = std_normal_quantile(0.0003);
    CHECK(predictive_pi(0.0006) == doctest::Approx(2.0 * phi_ref(q / std::sqrt(3.0))).epsilon(1e-10));
    CHECK(predictive_pi(0.0006) == doctest::Approx(0.0475).epsilon(2e-3));
    CHECK(predictive_pi(0.0006) < 0.05);
    CHECK(predictive_pi(0.0007) > 0.05);
    const double t = predictive_pi_threshold();
    CHECK(t > 0.0006);
    CHECK(t < 0.0007);
    CHECK(predictive_pi(t) == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("predictive pi never falls below the initial value") {
    double prev = 0.0;
    for (double lp = -15.0; lp < 0.0; lp += 0.01) {
        const double pi = std::pow(10.0, lp);
        const double rep = predictive_pi(pi);
        CHECK(rep > pi);
        CHECK(rep > prev);
        prev = rep;
    }
}

TEST_CASE("replication density has unit mass") {
    for (double pi_init : {0.5, 0.05, 1e-5}) {
        CAPTURE(pi_init);
        // Piecewise Simpson on [0, 40] plus the closed-form tail beyond.
        double mass = 0.0;
        for (int k = 0; k < 400; ++k)
            mass += oracle::simpson([&](double x) { return rpd_pdf(x, pi_init); }, 0.1 * k, 0.1 * (k + 1), 200);
        mass += rpd_sf(40.0, pi_init);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
        for (double x : {0.2, 1.0, 3.0, 6.0}) {
            const double integral = oracle::simpson([&](double u) { return rpd_pdf(u, pi_init); }, 0.0, x, 4000);
            CHECK(rpd_cdf(x, pi_init) == doctest::Approx(integral).epsilon(1e-8));
            CHECK(rpd_cdf(x, pi_init) + rpd_sf(x, pi_init) == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("replication cdf against a monte carlo oracle") {
    const int n = 400000;
    const auto sims = mc_pi_rep(1e-5, n, 91);
    const double frac = static_cast<double>(std::count_if(sims.begin(), sims.end(), [](double p) { return p > 0.05; })) / n;
    const double model = rpd_cdf(-std::log10(0.05), 1e-5);
    const double se = std::sqrt(model * (1.0 - model) / n);
    CHECK(std::abs(frac - model) < 3.0 * se);
    CHECK(model == doctest::Approx(0.041).epsilon(0.05));
}

TEST_CASE("replication median shifts by the folded tail") {
    // Folding |z_rep| moves the mass below -log10 pi_init to 0.5 - Phi(-sqrt2 |z_init|).
    for (double pi_init : {0.5, 0.05, 1e-3, 1e-5}) {
        const double z0 = std::abs(std_normal_quantile(pi_init / 2.0));
        CHECK(rpd_cdf(-std::log10(pi_init), pi_init) ==
              doctest::Approx(0.5 - phi_ref(-std::numbers::sqrt2 * z0)).epsilon(1e-12));
    }
}

TEST_CASE("replication density moments") {
    for (double pi_init : {1e-8, 1e-6, 1e-4, 1e-2, 0.05}) {
        CAPTURE(pi_init);
        const auto m = rpd_moments(pi_init);
        CHECK(m.sd_raw > m.mean_raw);
        const double ratio = m.sd_log10 / m.mean_log10;
        CHECK(ratio > 0.15);
        CHECK(ratio < 1.0);
    }
    const auto m = rpd_moments(0.5);
    const int n = 200000;
    const auto sims = mc_pi_rep(0.5, n, 92);
    double s = 0.0, s2 = 0.0;
    for (double v : sims) {
        s += v;
        s2 += v * v;
    }
    const double mean = s / n, sd = std::sqrt((s2 - n * mean * mean) / (n - 1));
    CHECK(std::abs(m.mean_raw - mean) < 3.0 * sd / std::sqrt(n));
}

TEST_CASE("replication density curve") {
    const auto c = rpd_curve(0.05);
    REQUIRE(c.x.size() == c.pdf.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        CHECK(c.pdf[i] >= 0.0);
        if (i) {
            CHECK(c.cdf[i] >= c.cdf[i - 1]);
            mass += 0.5 * (c.pdf[i] + c.pdf[i - 1]) * (c.x[i] - c.x[i - 1]);
        }
    }
    CHECK(c.cdf.front() == 0.0);
    CHECK(c.cdf.back() + c.mass_beyond_cap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mass + c.mass_beyond_cap == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("exact replication of the primary outcome") {
    const auto& rep = credence_exact_run();
    REQUIRE(rep.records.size() == 5000);
    CHECK(rep.summary.n_failed == 0);
    const auto st = estimate_stats(rep);
    const double mc_se = std::sqrt(st.var / st.n);
    CHECK(std::abs(st.mean - (-0.3483)) < 3.0 * mc_se);
    CHECK(st.var == doctest::Approx(2.0 * 0.0838 * 0.0838).epsilon(0.1));
    CHECK(rep.summary.ml_mean == doctest::Approx(st.mean).epsilon(1e-12));

    const double pi_init = wald_pvalue(credence_fit(), 1.0, 1).p_or_pi;
    const double below = 1.0 - rpd_cdf(-std::log10(0.05), pi_init);
    CHECK(std::abs(rep.summary.fraction_p_below_005 - below) < 0.02);
}

TEST_CASE("replication is deterministic and thread-count invariant") {
    const auto cfg = ml_config(300, 5);
    const auto a = run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, cfg);
    const auto b = run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, cfg);
    const auto c = serial::run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, cfg);
    REQUIRE(a.records.size() == 300);
    for (std::size_t i = 0; i < 300; ++i) {
        CHECK(a.records[i].y_rep == b.records[i].y_rep);
        CHECK(a.records[i].ml_estimates == c.records[i].ml_estimates);
        CHECK(a.records[i].beta_g == c.records[i].beta_g);
    }
    CHECK(a.summary.ml_mean == c.summary.ml_mean);
    CHECK(a.summary.neglog10_p_quantiles == c.summary.neglog10_p_quantiles);
}

TEST_CASE("gaussian kernel bias shifts the replicate estimates") {
    auto cfg = ml_config(3000, 8);
    cfg.kernel.kind = KernelKind::gaussian;
    cfg.kernel.bias = Eigen::Vector2d(0.0, 0.2);
    const auto shifted = run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, cfg);
    const auto st = estimate_stats(shifted);
    CHECK(std::abs(st.mean - (credence_fit().beta_hat[1] + 0.2)) < 3.0 * std::sqrt(st.var / st.n));
    for (const auto& r : shifted.records) CHECK(r.beta_g[1] - r.beta_g[1] == 0.0);
}

TEST_CASE("larger replicate studies shrink the replicate variance") {
    auto cfg = ml_config(3000, 9);
    ModelData big = fixture::credence_primary();
    big.offset.array() += std::log(10.0);
    cfg.replicate_design = big;
    const auto rep = run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, cfg);
    const auto st = estimate_stats(rep);
    const double sigma = credence_fit().cov_unscaled(1, 1);
    CHECK(st.var < 2.0 * sigma);
    CHECK(st.var > sigma);
    CHECK(st.var == doctest::Approx(1.1 * sigma).epsilon(0.1));
}

TEST_CASE("rare-event replicates: guard failures") {
    const ModelData d = fixture::credence_dka();
    const FitResult fit = fit_irls(kPoisson, kLog, d);
    auto cfg = ml_config(1000, 10);
    cfg.boundary_is_failure = false;
    const auto rep = run_replication(fit, d, kPoisson, kLog, cfg);
    CHECK(rep.summary.n_failed > 0);
    CHECK(rep.summary.fraction_failed == doctest::Approx(rep.summary.n_failed / 1000.0));
    int guard = 0;
    for (const auto& r : rep.records)
        if (r.failed) {
            CHECK_FALSE(r.failure_reason.empty());
            guard += r.failure_reason.find("events") != std::string::npos;
        }
    CHECK(guard == rep.summary.n_failed);
}

TEST_CASE("rare-event replicates pile up near p = 1") {
    // Zero-event control arms give boundary fits whose p-values sit at one; the density has no such spike.
    const ModelData d = fixture::credence_dka();
    const FitResult fit = fit_irls(kPoisson, kLog, d);
    auto cfg = ml_config(4000, 10);
    cfg.boundary_is_failure = false;
    cfg.min_events_guard = 0;
    const auto rep = run_replication(fit, d, kPoisson, kLog, cfg);
    int near_one = 0, ok = 0;
    for (const auto& r : rep.records) {
        if (r.failed) continue;
        ++ok;
        near_one += r.ml_p[1] > 0.9;
    }
    const double pi_init = wald_pvalue(fit, 1.0, 1).p_or_pi;
    const double model = rpd_cdf(-std::log10(0.9), pi_init);
    const double observed = static_cast<double>(near_one) / ok;
    CHECK(observed > 5.0 * model);
}

TEST_CASE("flat bayesian replicate analysis tracks the wald p-value") {
    auto cfg = ml_config(100, 11);
    cfg.bayes.push_back(BayesAnalysis::flat());
    cfg.grid_resolution = 101;
    const auto rep = run_replication(credence_fit(), fixture::credence_primary(), kPoisson, kLog, cfg);
    REQUIRE(rep.bayes_names.size() == 1);
    int compared = 0;
    for (const auto& r : rep.records) {
        if (r.failed) continue;
        REQUIRE(r.bayes.size() == 1);
        REQUIRE(r.bayes[0].ok);
        CHECK(r.bayes[0].draw.size() == 2);
        const double p = r.ml_p[1], pi = r.bayes[0].pi;
        // Likelihood skewness pulls the flat-prior pi below p as |z| grows.
        if (p > 1e-4) {
            CHECK(std::abs(std::log(pi / p)) < 0.15);
            ++compared;
        }
    }
    CHECK(compared > 30);
    REQUIRE(rep.summary.bayes.size() == 1);
    CHECK(rep.summary.bayes[0].draw_mean == doctest::Approx(-0.348).epsilon(0.15));
}

TEST_CASE("grid and draw-matrix initial posteriors") {
    const ModelData d = fixture::credence_primary();
    const FitResult& fit = credence_fit();
    const Eigen::VectorXd se = fit.standard_errors(1.0);
    const auto grid = grid_posterior(glm_log_posterior(kPoisson, kLog, d, 1.0, {}), {PriorSpec::flat(), PriorSpec::flat()},
                                     {{fit.beta_hat[0] - 8 * se[0], fit.beta_hat[0] + 8 * se[0]},
                                      {fit.beta_hat[1] - 8 * se[1], fit.beta_hat[1] + 8 * se[1]}},
                                     201);
    const auto from_grid = run_replication(grid, d, kPoisson, kLog, ml_config(2000, 12));
    const auto g = estimate_stats(from_grid);
    CHECK(std::abs(g.mean - fit.beta_hat[1]) < 3.0 * std::sqrt(g.var / g.n));

    RngStream r(13, 0);
    Eigen::MatrixXd draws(4000, 2);
    const Eigen::MatrixXd L = fit.cov_unscaled.llt().matrixL();
    for (Eigen::Index i = 0; i < draws.rows(); ++i)
        draws.row(i) = (fit.beta_hat + L * Eigen::Vector2d(r.normal(), r.normal())).transpose();
    const auto from_draws = run_replication(draws, d, kPoisson, kLog, ml_config(2000, 14));
    const auto m = estimate_stats(from_draws);
    CHECK(std::abs(m.mean - fit.beta_hat[1]) < 3.0 * std::sqrt(m.var / m.n) + 3.0 * se[1] / std::sqrt(4000.0));
}

TEST_CASE("replication configuration errors") {
    const ModelData d = fixture::credence_primary();
    CHECK_THROWS_AS(run_replication(credence_fit(), d, kPoisson, kLog, ml_config(50, 1)), DomainError);
    auto cfg = ml_config(200, 1);
    cfg.run_ml = false;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = ml_config(200, 1);
    cfg.kernel.kind = KernelKind::gaussian;
    cfg.kernel.inflation = Eigen::Vector2d(1.0, 0.5);
    CHECK_THROWS_AS(cfg.kernel.validate(2), DomainError);
    cfg.kernel.inflation = Eigen::Vector3d(1.0, 1.0, 1.0);
    CHECK_THROWS_AS(cfg.kernel.validate(2), DimensionError);
    cfg = ml_config(200, 1);
    cfg.min_events_guard = 1000000;
    CHECK_THROWS_AS(run_replication(credence_fit(), d, kPoisson, kLog, cfg), HarnessError);
}

TEST_CASE("kolmogorov-smirnov distance") {
    CHECK(ks_distance({0.5}, [](double x) { return std::clamp(x, 0.0, 1.0); }) == doctest::Approx(0.5));
    std::vector<double> u;
    for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000.0);
    CHECK(ks_distance(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) == doctest::Approx(0.0005).epsilon(1e-9));
}
