#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "pival/errors.hpp"
#include "pival/inference.hpp"

using namespace pival;

namespace {

const Family kPoisson(FamilyKind::poisson);
const Link kLog(LinkKind::log);

// Phi by erfc, independent of the library's normal cdf.
double phi_ref(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Lower t tail by Simpson quadrature of the density, x <= 0.
double t_lower(double x, double nu) { return 0.5 - oracle::simpson([&](double t) { return oracle::t_pdf(t, nu); }, x, 0.0, 20000); }

std::vector<double> normal_draws(RngStream& r, int n, double mean, double sd) {
    std::vector<double> v(n);
    for (auto& x : v) x = r.normal(mean, sd);
    return v;
}

}  // namespace

TEST_CASE("wald p-values for the trial outcomes") {
    const FitResult primary = fit_irls(kPoisson, kLog, fixture::credence_primary());
    const auto a = wald_pvalue(primary, 1.0, 1);
    CHECK(a.z == doctest::Approx(-4.156).epsilon(5e-4));
    CHECK(a.p_or_pi == doctest::Approx(3.23e-5).epsilon(5e-3));
    CHECK(a.direction == Direction::negative);
    CHECK(a.method == TailMethod::wald_normal);
    CHECK_FALSE(a.warning.has_value());

    const auto b = wald_pvalue(fit_irls(kPoisson, kLog, fixture::dapa_primary()), 1.0, 1);
    CHECK(b.p_or_pi == doctest::Approx(7.79e-8).epsilon(5e-3));

    const auto c = wald_pvalue(fit_irls(kPoisson, kLog, fixture::credence_dka()), 1.0, 1);
    CHECK(c.z == doctest::Approx(2.2975).epsilon(5e-4));
    CHECK(c.p_or_pi == doctest::Approx(0.0216).epsilon(5e-3));
    CHECK(c.direction == Direction::positive);
}

TEST_CASE("wald p-value at the null is one") {
    const FitResult fit = fit_irls(kPoisson, kLog, fixture::credence_primary());
    const auto r = wald_pvalue(fit, 1.0, 1, fit.beta_hat[1]);
    CHECK(r.z == 0.0);
    CHECK(r.p_or_pi == 1.0);
}

TEST_CASE("boundary fits carry a warning but still report") {
    const FitResult fit = fit_irls(kPoisson, kLog, fixture::dapa_dka());
    const auto r = wald_pvalue(fit, 1.0, 1);
    REQUIRE(r.warning.has_value());
    CHECK(r.p_or_pi > 0.99);
    CHECK_THROWS_AS(wald_pvalue(fit, 1.0, 2), DomainError);
}

TEST_CASE("wald p-value equals twice the smaller raw tail") {
    for (std::uint64_t s = 0; s < 40; ++s) {
        RngStream r(200 + s, 0);
        const ModelData d = fixture::random_data(FamilyKind::poisson, r, 30, Eigen::Vector3d(0.5, 0.3 * (s % 5), -0.2));
        const FitResult fit = fit_irls(kPoisson, kLog, d);
        for (Eigen::Index j = 0; j < 3; ++j) {
            const auto rep = wald_pvalue(fit, 1.0, j);
            const double z = fit.beta_hat[j] / std::sqrt(fit.cov_unscaled(j, j));
            const double ref = 2.0 * std::min(phi_ref(z), phi_ref(-z));
            CHECK(rep.p_or_pi == doctest::Approx(ref).epsilon(1e-13));
        }
    }
}

TEST_CASE("wald t reference") {
    RngStream r(21, 0);
    const ModelData d = fixture::random_data(FamilyKind::gaussian, r, 12, Eigen::Vector2d(0.2, 0.6));
    const FitResult fit = fit_irls(Family(FamilyKind::gaussian), Link(LinkKind::identity), d);
    const double phi = fit.inferential_phi();
    const auto t = wald_pvalue(fit, phi, 1, 0.0, WaldDist::t);
    REQUIRE(t.dof);
    CHECK(*t.dof == 10);
    CHECK(t.p_or_pi == doctest::Approx(2.0 * t_lower(-std::abs(t.z), 10.0)).epsilon(1e-9));
    CHECK(t.p_or_pi > wald_pvalue(fit, phi, 1).p_or_pi);
}

TEST_CASE("analytic pi-values") {
    LaplacePosterior normal;
    normal.mean = Eigen::Vector2d(0.3, -0.5);
    normal.cov = Eigen::Vector2d(0.04, 0.09).asDiagonal();
    CHECK(pi_value_analytic(normal, 1).p_or_pi == doctest::Approx(2.0 * phi_ref(-0.5 / 0.3)).epsilon(1e-13));
    CHECK(pi_value_analytic(normal, 0, 0.3).p_or_pi == 1.0);

    LaplacePosterior t;
    t.kind = PosteriorKind::mvt;
    t.dof = 10;
    t.mean = Eigen::VectorXd::Constant(1, 1.96);
    t.scale_matrix = Eigen::MatrixXd::Identity(1, 1);
    t.cov = t.scale_matrix;
    const auto rep = pi_value_analytic(t, 0);
    CHECK(rep.p_or_pi == doctest::Approx(2.0 * t_lower(-1.96, 10.0)).epsilon(1e-9));
    CHECK(rep.p_or_pi == doctest::Approx(0.0785).epsilon(1e-3));
}

TEST_CASE("sample pi-values") {
    SUBCASE("mixture on a gaussian posterior sample") {
        RngStream r(22, 0);
        const auto s = normal_draws(r, 80000, -0.348, 0.083);
        MixtureOptions opts;
        opts.g_max = 3;
        opts.restarts = 4;
        const auto rep = pi_value_from_samples(s, 0.0, SampleMethod::mixture, opts);
        const double exact = 2.0 * phi_ref(-0.348 / 0.083);
        CHECK(rep.method == TailMethod::posterior_mixture);
        CHECK(rep.p_or_pi == doctest::Approx(exact).epsilon(0.3));
        CHECK(rep.direction == Direction::negative);
    }
    SUBCASE("all samples on one side") {
        RngStream r(23, 0);
        const auto s = normal_draws(r, 5000, 10.0, 1.0);
        CHECK(pi_value_from_samples(s, 0.0, SampleMethod::empirical).p_or_pi == 0.0);
        const auto mix = pi_value_from_samples(s, 0.0, SampleMethod::mixture);
        CHECK(mix.p_or_pi > 0.0);
        CHECK(mix.p_or_pi < 1e-15);
    }
    SUBCASE("symmetric samples") {
        RngStream r(24, 0);
        std::vector<double> s;
        for (int i = 0; i < 2000; ++i) {
            const double v = r.normal();
            s.push_back(v);
            s.push_back(-v);
        }
        CHECK(pi_value_from_samples(s, 0.0, SampleMethod::empirical).p_or_pi == 1.0);
        CHECK(pi_value_from_samples(s, 0.0, SampleMethod::mixture).p_or_pi > 0.95);
    }
    SUBCASE("empirical floor") {
        std::vector<double> s(4000, 1.0);
        s[17] = -1.0;
        CHECK(pi_value_from_samples(s, 0.0, SampleMethod::empirical).p_or_pi == 2.0 / 4000.0);
    }
    SUBCASE("mixture needs enough samples") {
        std::vector<double> s(999, 1.0);
        CHECK_THROWS_AS(pi_value_from_samples(s, 0.0, SampleMethod::mixture), DomainError);
    }
}

TEST_CASE("mixture and empirical agree within three binomial errors") {
    for (double mean : {0.8, 1.5, 2.2}) {
        RngStream r(25, static_cast<std::uint64_t>(mean * 10));
        const int n = 20000;
        const auto s = normal_draws(r, n, mean, 1.0);
        const double emp = pi_value_from_samples(s, 0.0, SampleMethod::empirical).p_or_pi;
        REQUIRE(emp > 50.0 / n);
        const double mix = pi_value_from_samples(s, 0.0, SampleMethod::mixture).p_or_pi;
        const double q = emp / 2.0;
        CAPTURE(mean);
        CHECK(std::abs(mix - emp) < 3.0 * 2.0 * std::sqrt(q * (1.0 - q) / n));
    }
}

TEST_CASE("direction estimates") {
    CHECK(direction_estimate(1.0, Direction::positive) == 0.0);
    CHECK(direction_estimate(0.05, Direction::positive) == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(direction_estimate(0.05, Direction::negative) == doctest::Approx(-0.95).epsilon(1e-15));
    CHECK_THROWS_AS(direction_estimate(0.0, Direction::positive), DomainError);
    for (double mean : {-2.0, -0.4, 0.1, 1.3}) {
        LaplacePosterior post;
        post.mean = Eigen::VectorXd::Constant(1, mean);
        post.cov = Eigen::MatrixXd::Constant(1, 1, 0.49);
        const auto rep = pi_value_analytic(post, 0);
        const double z = std::abs(mean) / 0.7;
        const double ref = (mean > 0 ? 1.0 : -1.0) * (phi_ref(z) - phi_ref(-z));
        CHECK(direction_estimate(rep.p_or_pi, rep.direction) == doctest::Approx(ref).epsilon(1e-13));
    }
}

TEST_CASE("tail comparison") {
    const auto big = tail_comparison(2.5, 1000000);
    CHECK(big.max_pairwise_gap() < 1e-6);
    const auto small = tail_comparison(2.0, 5);
    CHECK(small.p_t_jeffreys == doctest::Approx(2.0 * t_lower(-2.0, 5.0)).epsilon(1e-9));
    CHECK(small.p_t_jeffreys == doctest::Approx(0.1019).epsilon(1e-3));
    CHECK(small.p_t_uniform == doctest::Approx(2.0 * t_lower(-2.0 * std::sqrt(5.0 / 3.0), 3.0)).epsilon(1e-9));
    CHECK(small.p_normal == doctest::Approx(2.0 * phi_ref(-2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(tail_comparison(1.0, 2), DofError);
    // The gap shrinks with dof; the sub-5e-3 regime is reached by n-p = 100.
    double prev = INFINITY;
    for (long dof : {30L, 50L, 100L, 1000L}) {
        double gap = 0.0;
        for (double z = 0.0; z <= 4.0; z += 0.01) gap = std::max(gap, tail_comparison(z, dof).max_pairwise_gap());
        CHECK(gap < prev);
        prev = gap;
        if (dof >= 100) CHECK(gap < 5e-3);
    }
}

TEST_CASE("pi-value monotonicity") {
    for (long dof : {3L, 10L, 30L}) {
        double prev = 2.0;
        for (double z = 0.1; z <= 6.0; z += 0.1) {
            const auto t = tail_comparison(z, dof);
            CHECK(t.p_t_jeffreys < prev);
            prev = t.p_t_jeffreys;
        }
    }
    // Heavier tails at low dof: the t pi-value falls as dof grows.
    for (double z : {0.5, 1.96, 3.5}) {
        double prev = 2.0;
        for (long dof = 3; dof <= 200; ++dof) {
            const double p = tail_comparison(z, dof).p_t_jeffreys;
            CHECK(p < prev);
            prev = p;
        }
    }
}
