#include "pival/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "pival/errors.hpp"
#include "pival/numerics.hpp"

namespace pival {

namespace {

constexpr std::size_t kBlock = 4096;

struct Params {
    std::vector<double> c;  // log w - log s - log sqrt(2 pi)
    std::vector<double> h;  // 1 / (2 s^2)
    std::vector<double> m;
};

Params prepare(const MixtureModel1D& model) {
    Params p;
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    for (const auto& comp : model.components) {
        p.c.push_back(std::log(comp.weight) - std::log(comp.sd) - half_log_2pi);
        p.h.push_back(0.5 / (comp.sd * comp.sd));
        p.m.push_back(comp.mean);
    }
    return p;
}

// out layout: [loglik, (S0, S1, S2) per component], S1/S2 centred on the current component mean.
void accumulate(const double* x, std::size_t n, const Params& p, double* out) {
    const std::size_t g = p.m.size();
    double a[16];
    for (std::size_t i = 0; i < n; ++i) {
        double amax = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < g; ++k) {
            const double d = x[i] - p.m[k];
            a[k] = p.c[k] - d * d * p.h[k];
            amax = std::max(amax, a[k]);
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            a[k] = std::exp(a[k] - amax);
            sum += a[k];
        }
        out[0] += amax + std::log(sum);
        const double inv = 1.0 / sum;
        for (std::size_t k = 0; k < g; ++k) {
            const double r = a[k] * inv;
            const double d = x[i] - p.m[k];
            out[1 + 3 * k] += r;
            out[2 + 3 * k] += r * d;
            out[3 + 3 * k] += r * d * d;
        }
    }
}

std::vector<double> estep_blocked(std::span<const double> x, const Params& p) {
    const std::size_t stride = 1 + 3 * p.m.size();
    const std::size_t nblocks = (x.size() + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks * stride, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t len = std::min(kBlock, x.size() - lo);
        accumulate(x.data() + lo, len, p, partial.data() + static_cast<std::size_t>(b) * stride);
    }
    // Fixed-order reduction keeps results independent of the thread count.
    std::vector<double> total(stride, 0.0);
    for (std::size_t b = 0; b < nblocks; ++b)
        for (std::size_t j = 0; j < stride; ++j) total[j] += partial[b * stride + j];
    return total;
}

std::vector<double> estep_single(std::span<const double> x, const Params& p) {
    std::vector<double> total(1 + 3 * p.m.size(), 0.0);
    accumulate(x.data(), x.size(), p, total.data());
    return total;
}

MixtureModel1D mstep(const MixtureModel1D& cur, const std::vector<double>& s, double n, double sd_floor) {
    MixtureModel1D next = cur;
    for (std::size_t k = 0; k < cur.components.size(); ++k) {
        const double s0 = s[1 + 3 * k];
        auto& comp = next.components[k];
        if (!(s0 > 1e-300)) {
            comp.weight = 0.0;
            continue;
        }
        const double shift = s[2 + 3 * k] / s0;
        const double var = std::max(s[3 + 3 * k] / s0 - shift * shift, 0.0);
        comp.weight = s0 / n;
        comp.mean = cur.components[k].mean + shift;
        comp.sd = std::max(std::sqrt(var), sd_floor);
    }
    double wsum = 0.0;
    for (const auto& c : next.components) wsum += c.weight;
    for (auto& c : next.components) c.weight /= wsum;
    return next;
}

double sample_sd(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / n);
}

int free_parameters(int g) { return 3 * g - 1; }

template <class EStep>
EmRun em_loop(std::span<const double> x, const MixtureModel1D& init, const MixtureOptions& opts, int max_iter,
              EStep estep) {
    if (init.count() < 1 || init.count() > 16) throw DomainError("run_em: component count must be in [1,16]");
    const double n = static_cast<double>(x.size());
    const double sd_floor = opts.sd_floor_factor * sample_sd(x);
    EmRun run;
    MixtureModel1D cur = init;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iter; ++it) {
        const auto s = estep(x, prepare(cur));
        const double ll = s[0];
        run.loglik_trace.push_back(ll);
        cur.loglik = ll;
        run.model = cur;
        run.iterations = it;
        if (std::isfinite(prev) && std::abs(ll - prev) <= opts.rel_tol * std::abs(ll)) {
            run.converged = true;
            break;
        }
        prev = ll;
        cur = mstep(cur, s, n, sd_floor);
    }
    run.model.bic = -2.0 * run.model.loglik + free_parameters(run.model.count()) * std::log(n);
    return run;
}

MixtureModel1D quantile_start(std::span<const double> x, int g, double sd_floor) {
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    MixtureModel1D m;
    double ss = 0.0;
    for (int k = 0; k < g; ++k) {
        const std::size_t lo = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(g);
        const std::size_t hi = n * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(g);
        double mean = 0.0;
        for (std::size_t i = lo; i < hi; ++i) mean += sorted[i];
        mean /= static_cast<double>(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) ss += (sorted[i] - mean) * (sorted[i] - mean);
        m.components.push_back({1.0 / g, sorted[(lo + hi) / 2], 0.0});
    }
    const double pooled = std::max(std::sqrt(ss / static_cast<double>(n)), sd_floor);
    for (auto& c : m.components) c.sd = pooled;
    return m;
}

MixtureModel1D random_start(std::span<const double> x, int g, double sd, RngStream& rng) {
    MixtureModel1D m;
    for (int k = 0; k < g; ++k) m.components.push_back({1.0 / g, x[rng.index(x.size())], sd});
    return m;
}

}  // namespace

double MixtureModel1D::logpdf(double x) const {
    double amax = -std::numeric_limits<double>::infinity();
    std::vector<double> a;
    for (const auto& c : components) {
        const double z = (x - c.mean) / c.sd;
        a.push_back(std::log(c.weight) - std::log(c.sd) + std_normal_logpdf(z));
        amax = std::max(amax, a.back());
    }
    double s = 0.0;
    for (double v : a) s += std::exp(v - amax);
    return amax + std::log(s);
}

double MixtureModel1D::folded_tail_area() const {
    double t = 0.0;
    for (const auto& c : components) t += c.weight * 2.0 * std_normal_cdf(-std::abs(c.mean) / c.sd);
    return t;
}

void MixtureModel1D::validate(int g_max) const {
    if (count() < 1 || count() > g_max) throw DomainError("mixture: component count out of range");
    double w = 0.0;
    for (const auto& c : components) {
        if (!(c.sd > 0.0)) throw DomainError("mixture: non-positive sd");
        w += c.weight;
    }
    if (std::abs(w - 1.0) > 1e-12) throw DomainError("mixture: weights do not sum to 1");
}

EmRun run_em(std::span<const double> x, const MixtureModel1D& init, const MixtureOptions& opts) {
    return em_loop(x, init, opts, opts.max_iter, estep_blocked);
}

namespace serial {
EmRun run_em(std::span<const double> x, const MixtureModel1D& init, const MixtureOptions& opts) {
    return em_loop(x, init, opts, opts.max_iter, estep_single);
}
}  // namespace serial

MixtureModel1D fit_gaussian_mixture_1d(std::span<const double> samples, int g_max) {
    MixtureOptions opts;
    opts.g_max = g_max;
    return fit_gaussian_mixture_1d(samples, opts);
}

MixtureModel1D fit_gaussian_mixture_1d(std::span<const double> x, const MixtureOptions& opts) {
    if (x.size() < 50) throw DomainError("fit_gaussian_mixture_1d: need at least 50 samples");
    if (opts.g_max < 1 || opts.g_max > 16) throw DomainError("fit_gaussian_mixture_1d: g_max must be in [1,16]");
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("fit_gaussian_mixture_1d: non-finite sample");
    const double sd = sample_sd(x);
    if (!(sd > 0.0)) throw DegeneracyError("fit_gaussian_mixture_1d: all samples identical");
    const double n = static_cast<double>(x.size());
    const double sd_floor = opts.sd_floor_factor * sd;

    MixtureModel1D best;
    best.bic = std::numeric_limits<double>::infinity();
    for (int g = 1; g <= opts.g_max; ++g) {
        EmRun winner;
        if (g == 1) {
            MixtureModel1D one;
            one.components.push_back({1.0, std::accumulate(x.begin(), x.end(), 0.0) / n, sd});
            winner = run_em(x, one, opts);
        } else {
            RngStream rng(opts.seed, static_cast<std::uint64_t>(g));
            std::vector<MixtureModel1D> starts{quantile_start(x, g, sd_floor)};
            for (int r = 1; r < opts.restarts; ++r) starts.push_back(random_start(x, g, sd, rng));
            double best_ll = -std::numeric_limits<double>::infinity();
            MixtureModel1D chosen = starts.front();
            for (const auto& s : starts) {
                auto screen = em_loop(x, s, opts, opts.screening_iter, estep_blocked);
                if (screen.model.loglik > best_ll) {
                    best_ll = screen.model.loglik;
                    chosen = screen.model;
                }
            }
            winner = run_em(x, chosen, opts);
        }
        if (winner.model.bic < best.bic) best = winner.model;
    }
    // Components that lost all responsibility carry no information.
    std::erase_if(best.components, [](const MixtureComponent& c) { return !(c.weight > 0.0); });
    double w = 0.0;
    for (const auto& c : best.components) w += c.weight;
    for (auto& c : best.components) c.weight /= w;
    return best;
}

}  // namespace pival
