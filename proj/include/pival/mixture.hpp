#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pival {

struct MixtureComponent {
    double weight = 1.0;
    double mean = 0.0;
    double sd = 1.0;
};

struct MixtureModel1D {
    std::vector<MixtureComponent> components;
    double loglik = 0.0;
    double bic = 0.0;

    int count() const { return static_cast<int>(components.size()); }
    double logpdf(double x) const;
    // sum_k w_k * 2 Phi(-|m_k| / s_k): the folded tail used for pi-values of centered samples.
    double folded_tail_area() const;
    void validate(int g_max) const;
};

struct MixtureOptions {
    int g_max = 5;
    int restarts = 10;          // quantile start plus restarts-1 random starts per G
    int screening_iter = 25;    // random starts are screened this long, the best is run to convergence
    double rel_tol = 1e-8;
    int max_iter = 500;
    double sd_floor_factor = 1e-6;
    std::uint64_t seed = 20240601;
};

struct EmRun {
    MixtureModel1D model;
    std::vector<double> loglik_trace;  // log-likelihood of each iterate, starting with the initial model
    int iterations = 0;
    bool converged = false;
};

EmRun run_em(std::span<const double> x, const MixtureModel1D& init, const MixtureOptions& opts);

MixtureModel1D fit_gaussian_mixture_1d(std::span<const double> samples, int g_max);
MixtureModel1D fit_gaussian_mixture_1d(std::span<const double> samples, const MixtureOptions& opts);

namespace serial {
// Plain single-accumulator EM, kept as the reference for the blocked parallel E-step.
EmRun run_em(std::span<const double> x, const MixtureModel1D& init, const MixtureOptions& opts);
}  // namespace serial

}  // namespace pival
