#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "pival/errors.hpp"
#include "pival/mixture.hpp"
#include "pival/numerics.hpp"
#include "pival/parallel.hpp"

using namespace pival;

TEST_CASE("normal cdf anchors") {
    CHECK(std_normal_cdf(0.0) == 0.5);
    CHECK(std_normal_cdf(-4.156) == doctest::Approx(1.615e-5).epsilon(2e-3));
    CHECK(2.0 * std_normal_cdf(-4.156) == doctest::Approx(3.23e-5).epsilon(2e-3));
    const double x = -1.959964;
    const double ref = oracle::simpson(oracle::normal_pdf, -40.0, x, 400000);
    CHECK(std::abs(std_normal_cdf(x) - ref) < 1e-13);
    CHECK(std_normal_cdf(x) == doctest::Approx(0.025).epsilon(1e-6));
}

TEST_CASE("normal cdf symmetry and absolute accuracy on |x| <= 8") {
    for (double x = -8.0; x <= 8.0; x += 0.25) {
        CHECK(std::abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) < 1e-15);
        // 80-bit erfc as the reference; double rounding of the result is the only error left.
        const auto ref = static_cast<double>(0.5L * std::erfc(-static_cast<long double>(x) / std::sqrt(2.0L)));
        CHECK(std::abs(std_normal_cdf(x) - ref) < 1e-15);
    }
}

TEST_CASE("normal cdf far tail keeps relative accuracy") {
    for (double x : {6.0, 10.0, 20.0, 30.0, 37.0}) {
        const double ref = oracle::normal_lower_tail_cf(x);
        CHECK(std::abs(std_normal_cdf(-x) / ref - 1.0) < 1e-10);
        CHECK(std::abs(std_normal_sf(x) / ref - 1.0) < 1e-10);
    }
}

TEST_CASE("normal cdf is monotone") {
    double prev = 0.0;
    for (double x = -38.0; x <= 9.0; x += 0.01) {
        const double v = std_normal_cdf(x);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("normal quantile") {
    CHECK(std_normal_quantile(0.5) == 0.0);
    const double ref = oracle::bisect([](double x) { return std_normal_cdf(x); }, -10.0, 10.0, 0.025);
    CHECK(std_normal_quantile(0.025) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(std_normal_quantile(0.025) == doctest::Approx(-1.959964).epsilon(1e-6));
    CHECK(std_normal_quantile(1.615e-5) == doctest::Approx(-4.156).epsilon(1e-3));
    CHECK_THROWS_AS(std_normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(std_normal_quantile(1.0), DomainError);
    CHECK_THROWS_AS(std_normal_cdf(std::nan("")), DomainError);
}

TEST_CASE("quantile round trip over decades") {
    for (int k = 1; k <= 12; ++k) {
        const double p = std::pow(10.0, -k);
        CHECK(std_normal_cdf(std_normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
        CHECK(std_normal_cdf(std_normal_quantile(1.0 - p)) == doctest::Approx(1.0 - p).epsilon(1e-10));
    }
}

TEST_CASE("student t cdf") {
    CHECK(student_t_cdf(0.0, 3.7) == 0.5);
    CHECK(student_t_cdf(1.0, 1.0) == doctest::Approx(0.5 + std::atan(1.0) / std::numbers::pi).epsilon(1e-14));
    const double tail = oracle::simpson([](double x) { return oracle::t_pdf(x, 10.0); }, 1.96, 400.0, 400000);
    CHECK(1.0 - student_t_cdf(1.96, 10.0) == doctest::Approx(tail).epsilon(1e-7));
    CHECK(student_t_cdf(1.96, 10.0) == doctest::Approx(0.960782).epsilon(1e-6));
    CHECK_THROWS_AS(student_t_cdf(1.0, 0.0), DomainError);
    for (double x = -6.0; x <= 6.0; x += 0.5) {
        CHECK(std::abs(student_t_cdf(x, 1e6) - std_normal_cdf(x)) < 1e-6);
        CHECK(std::abs(student_t_cdf(x, 4.5) + student_t_cdf(-x, 4.5) - 1.0) < 1e-14);
    }
}

TEST_CASE("exponential integral") {
    CHECK(exp_integral_gamma0(1.0) == doctest::Approx(oracle::e1(1.0)).epsilon(1e-12));
    CHECK(exp_integral_gamma0(1.0) == doctest::Approx(0.2193839).epsilon(1e-6));
    CHECK(exp_integral_gamma0(10.0) == doctest::Approx(oracle::e1(10.0)).epsilon(1e-12));
    CHECK(exp_integral_gamma0(10.0) == doctest::Approx(4.157e-6).epsilon(1e-3));
    CHECK(exp_integral_gamma0(800.0) == 0.0);
    CHECK_THROWS_AS(exp_integral_gamma0(0.0), DomainError);
    double prev = exp_integral_gamma0(1e-6);
    for (double x = 0.01; x < 50.0; x *= 1.3) {
        const double v = exp_integral_gamma0(x);
        CHECK(v < prev);
        CHECK(v == doctest::Approx(oracle::e1(x)).epsilon(1e-10));
        prev = v;
    }
}

TEST_CASE("erfc inverse") {
    CHECK(erfc_inverse(1.0) == 0.0);
    CHECK(erfc_inverse(0.05) == doctest::Approx(1.38590).epsilon(1e-5));
    for (double p = 1e-12; p < 2.0; p = p < 1e-3 ? p * 10 : p + 0.0625) {
        CHECK(std::erfc(erfc_inverse(p)) == doctest::Approx(p).epsilon(1e-10));
        CHECK(erfc_inverse(p) == doctest::Approx(-std_normal_quantile(p / 2.0) / std::numbers::sqrt2).epsilon(1e-10));
    }
    CHECK_THROWS_AS(erfc_inverse(0.0), DomainError);
    CHECK_THROWS_AS(erfc_inverse(2.0), DomainError);
}

TEST_CASE("rng streams are reproducible and independent") {
    RngStream a(42, 7), b(42, 7), other(42, 8);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream solo(9, 1), inter(9, 1), noise(9, 2);
    std::vector<double> x, y, z;
    for (int i = 0; i < 10000; ++i) {
        x.push_back(solo.normal());
        noise.uniform();
        noise.poisson(3.0);
        y.push_back(inter.normal());
        z.push_back(other.normal());
    }
    CHECK(x == y);
    double sxz = 0.0;
    for (int i = 0; i < 10000; ++i) sxz += x[i] * z[i];
    CHECK(std::abs(sxz / 10000.0) < 0.05);
    CHECK(RngStream(1, 0).next_u64() != RngStream(2, 0).next_u64());
}

TEST_CASE("rng distribution moments") {
    RngStream r(5, 0);
    const int n = 200000;
    double su = 0, sp = 0, sg = 0;
    for (int i = 0; i < n; ++i) {
        su += r.uniform();
        sp += static_cast<double>(r.poisson(4.0));
        sg += r.gamma(2.0, 3.0);
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(sp / n == doctest::Approx(4.0).epsilon(0.01));
    CHECK(sg / n == doctest::Approx(6.0).epsilon(0.01));
}

namespace {
std::vector<double> draw_mixture(std::uint64_t seed, int n, double w, double m1, double s1, double m2, double s2) {
    RngStream r(seed, 0);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (auto& v : x) v = r.uniform() < w ? r.normal(m1, s1) : r.normal(m2, s2);
    return x;
}
}  // namespace

TEST_CASE("mixture recovers a single normal") {
    const auto x = draw_mixture(11, 100000, 1.0, 2.0, 1.0, 0.0, 1.0);
    const auto m = fit_gaussian_mixture_1d(x, 5);
    REQUIRE(m.count() == 1);
    CHECK(std::abs(m.components[0].mean - 2.0) < 0.02);
    CHECK(std::abs(m.components[0].sd - 1.0) < 0.02);
    m.validate(5);
}

TEST_CASE("mixture recovers two separated components") {
    const auto x = draw_mixture(12, 100000, 0.5, -2.0, 1.0, 2.0, 1.0);
    const auto m = fit_gaussian_mixture_1d(x, 5);
    REQUIRE(m.count() == 2);
    for (const auto& c : m.components) {
        CHECK(std::abs(c.weight - 0.5) < 0.02);
        CHECK(std::abs(std::abs(c.mean) - 2.0) < 0.05);
    }
    double wsum = 0.0;
    for (const auto& c : m.components) wsum += c.weight;
    CHECK(std::abs(wsum - 1.0) < 1e-12);
}

TEST_CASE("EM log-likelihood never decreases") {
    const auto x = draw_mixture(13, 20000, 0.3, -1.0, 0.5, 1.5, 2.0);
    MixtureModel1D init;
    init.components = {{0.2, -3.0, 1.0}, {0.5, 0.0, 1.0}, {0.3, 3.0, 1.0}};
    MixtureOptions opts;
    opts.rel_tol = 0.0;
    opts.max_iter = 300;
    const auto run = run_em(x, init, opts);
    for (std::size_t i = 1; i < run.loglik_trace.size(); ++i)
        CHECK(run.loglik_trace[i] >= run.loglik_trace[i - 1] - 1e-9);
}

TEST_CASE("parallel EM matches the serial reference") {
    const auto x = draw_mixture(14, 50000, 0.4, -1.0, 1.0, 2.0, 0.7);
    MixtureModel1D init;
    init.components = {{0.5, -0.5, 1.0}, {0.5, 0.5, 1.0}};
    MixtureOptions opts;
    const auto par = run_em(x, init, opts);
    const auto ser = serial::run_em(x, init, opts);
    CHECK(par.iterations == ser.iterations);
    CHECK(par.model.loglik == doctest::Approx(ser.model.loglik).epsilon(1e-12));
    for (int k = 0; k < 2; ++k) {
        CHECK(par.model.components[k].mean == doctest::Approx(ser.model.components[k].mean).epsilon(1e-9));
        CHECK(par.model.components[k].sd == doctest::Approx(ser.model.components[k].sd).epsilon(1e-9));
    }
    // The blocked reduction has a fixed order, so the thread count cannot change a bit.
    set_threads(1);
    const auto one = run_em(x, init, opts);
    set_threads(max_threads() > 1 ? max_threads() : 4);
    const auto many = run_em(x, init, opts);
    CHECK(one.model.loglik == many.model.loglik);
    CHECK(one.model.components[0].mean == many.model.components[0].mean);
}

TEST_CASE("single-component tail area matches the normal tail") {
    const double m = 1.2, s = 0.8;
    const auto x = draw_mixture(15, 20000, 1.0, m, s, 0.0, 1.0);
    const auto fit = fit_gaussian_mixture_1d(x, 1);
    const double truth = 2.0 * std_normal_cdf(-std::abs(m) / s);
    // MC spread of the plug-in tail: delta method on (mean, sd) with n = 20000.
    const double z = m / s, n = 20000.0;
    const double mcse = 2.0 * std_normal_pdf(z) * std::sqrt((1.0 + z * z / 2.0) / n);
    CHECK(std::abs(fit.folded_tail_area() - truth) < 3.0 * mcse);
}

TEST_CASE("mixture input validation") {
    std::vector<double> few(49, 1.0);
    CHECK_THROWS_AS(fit_gaussian_mixture_1d(few, 3), DomainError);
    std::vector<double> same(100, 3.0);
    CHECK_THROWS_AS(fit_gaussian_mixture_1d(same, 3), DegeneracyError);
}
