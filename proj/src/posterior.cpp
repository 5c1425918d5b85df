#include "pival/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pival/errors.hpp"
#include "pival/quadrature.hpp"

namespace pival {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const std::vector<double>& v) {
    double m = kNegInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

std::vector<double> trapezoid_weights(const std::vector<double>& axis) {
    std::vector<double> w(axis.size(), 0.0);
    for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
        const double h = 0.5 * (axis[i + 1] - axis[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    return w;
}

// Decomposes a flat row-major index into per-axis indices (last axis fastest).
void unravel(std::size_t idx, std::size_t r, std::size_t dim, std::size_t* out) {
    for (std::size_t j = dim; j-- > 0;) {
        out[j] = idx % r;
        idx /= r;
    }
}

double safe_eval(const LogDensityFn& f, const Eigen::VectorXd& b) {
    try {
        const double v = f(b);
        return std::isnan(v) ? kNegInf : v;
    } catch (const DomainError&) {
        return kNegInf;
    }
}

template <bool Parallel>
GridPosterior grid_impl(const LogDensityFn& loglik, const std::vector<PriorSpec>& priors,
                        const std::vector<std::pair<double, double>>& bounds, int resolution, const GridOptions& opts) {
    const std::size_t dim = bounds.size();
    if (dim < 1 || dim > 3) throw DimensionError("grid_posterior: supports 1 to 3 parameters");
    if (!priors.empty() && priors.size() != dim) throw DimensionError("grid_posterior: one prior per parameter");
    if (resolution < 3) throw DomainError("grid_posterior: resolution must be at least 3");
    for (const auto& [lo, hi] : bounds)
        if (!(std::isfinite(lo) && std::isfinite(hi) && lo < hi))
            throw DomainError("grid_posterior: bounds must be finite and ordered");

    const std::size_t r = static_cast<std::size_t>(resolution);
    GridPosterior g;
    std::vector<std::vector<double>> prior_terms(dim), weights(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        std::vector<double> axis(r);
        for (std::size_t k = 0; k < r; ++k)
            axis[k] = bounds[j].first + (bounds[j].second - bounds[j].first) * static_cast<double>(k) / (r - 1);
        prior_terms[j].resize(r, 0.0);
        if (!priors.empty())
            for (std::size_t k = 0; k < r; ++k) prior_terms[j][k] = prior_logpdf(priors[j], axis[k]);
        weights[j] = trapezoid_weights(axis);
        g.axes.push_back(std::move(axis));
    }
    std::size_t total = 1;
    for (std::size_t j = 0; j < dim; ++j) total *= r;
    g.log_density.assign(total, kNegInf);

    auto eval_node = [&](std::size_t idx, Eigen::VectorXd& b) {
        std::size_t ix[3];
        unravel(idx, r, dim, ix);
        double lp = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            b[static_cast<Eigen::Index>(j)] = g.axes[j][ix[j]];
            lp += prior_terms[j][ix[j]];
        }
        g.log_density[idx] = std::isfinite(lp) ? lp + safe_eval(loglik, b) : kNegInf;
    };
    if constexpr (Parallel) {
#pragma omp parallel
        {
            Eigen::VectorXd b(static_cast<Eigen::Index>(dim));
#pragma omp for schedule(static)
            for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(total); ++idx)
                eval_node(static_cast<std::size_t>(idx), b);
        }
    } else {
        Eigen::VectorXd b(static_cast<Eigen::Index>(dim));
        for (std::size_t idx = 0; idx < total; ++idx) eval_node(idx, b);
    }

    const double mx = *std::max_element(g.log_density.begin(), g.log_density.end());
    if (!std::isfinite(mx)) throw SupportError("grid_posterior: log posterior is -inf on the whole grid");

    std::vector<double> mass(total);
    double z = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t ix[3];
        unravel(idx, r, dim, ix);
        double w = 1.0;
        for (std::size_t j = 0; j < dim; ++j) w *= weights[j][ix[j]];
        mass[idx] = w * std::exp(g.log_density[idx] - mx);
        z += mass[idx];
    }
    g.node_cdf.resize(total);
    double acc = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        acc += mass[idx];
        g.node_cdf[idx] = acc / z;
    }

    g.marginals.assign(dim, std::vector<double>(r, 0.0));
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t ix[3];
        unravel(idx, r, dim, ix);
        for (std::size_t j = 0; j < dim; ++j) {
            // mass already carries this axis's weight; divide it back out for a density on the axis
            g.marginals[j][ix[j]] += mass[idx] / weights[j][ix[j]];
        }
    }
    for (auto& m : g.marginals)
        for (double& v : m) v /= z;

    if (opts.check_impropriety) {
        for (std::size_t j = 0; j < dim; ++j) {
            auto marginal = [&](double t) {
                std::vector<double> terms;
                const double pj = priors.empty() ? 0.0 : prior_logpdf(priors[j], t);
                if (!std::isfinite(pj)) return kNegInf;
                const std::size_t others = total / r;
                Eigen::VectorXd b(static_cast<Eigen::Index>(dim));
                terms.reserve(others);
                for (std::size_t o = 0; o < others; ++o) {
                    // enumerate the remaining axes in order
                    std::size_t rem = o;
                    double lw = pj;
                    for (std::size_t k = dim; k-- > 0;) {
                        if (k == j) {
                            b[static_cast<Eigen::Index>(k)] = t;
                            continue;
                        }
                        const std::size_t ik = rem % r;
                        rem /= r;
                        b[static_cast<Eigen::Index>(k)] = g.axes[k][ik];
                        lw += prior_terms[k][ik] + std::log(weights[k][ik]);
                    }
                    terms.push_back(std::isfinite(lw) ? lw + safe_eval(loglik, b) : kNegInf);
                }
                return log_sum_exp(terms);
            };
            g.impropriety.push_back(detect_impropriety(marginal, TailDirection::both));
            if (g.impropriety.back().improper) g.proper = false;
        }
    }

    if (g.proper) {
        g.log_normalizer = mx + std::log(z);
        for (double& v : g.log_density) v -= g.log_normalizer;
    } else {
        g.log_normalizer = std::numeric_limits<double>::quiet_NaN();
    }
    return g;
}

}  // namespace

double LaplacePosterior::marginal_scale(Eigen::Index i) const {
    if (kind == PosteriorKind::mvt) return std::sqrt(scale_matrix(i, i));
    return std::sqrt(cov(i, i));
}

void LaplacePosterior::validate() const {
    Eigen::LLT<Eigen::MatrixXd> llt(kind == PosteriorKind::mvt ? scale_matrix : cov);
    if (llt.info() != Eigen::Success) throw DomainError("posterior covariance is not positive definite");
    if (kind == PosteriorKind::mvt && dof < 1) throw DofError("mvt posterior needs dof >= 1");
}

LaplaceResult laplace_posterior(const FitResult& fit, const ScalePriorSpec& scale_prior, const Family& family) {
    if (fit.boundary) throw NotApplicableError("laplace_posterior: boundary fit");
    if (!fit.converged) throw ConvergenceError("laplace_posterior: fit did not converge");
    scale_prior.validate();
    LaplaceResult out;
    auto& post = out.beta_posterior;
    post.mean = fit.beta_hat;
    if (family.known_scale()) {
        // Step 1 only: phi is fixed at 1, the posterior is the Eq. 16 normal.
        post.kind = PosteriorKind::normal_known_phi;
        post.cov = fit.cov_unscaled;
        out.plug_in = post;
        return out;
    }
    const long n_minus_p = static_cast<long>(fit.n - fit.p);
    // Steps 2-3: integrating beta out leaves a scaled-inverse-chi2 in phi whose dof depends on the scale prior.
    const long dof = scale_prior.kind == ScalePriorKind::jeffreys ? n_minus_p : n_minus_p - 2;
    if (dof <= 0) throw DofError("laplace_posterior: scale marginal has non-positive dof");
    ScaleMarginal sm;
    sm.dof = static_cast<int>(dof);
    sm.scale = fit.deviance / static_cast<double>(dof);
    sm.mode = sm.dof * sm.scale / (sm.dof + 2.0);
    out.scale_marginal = sm;
    const double phi_map = fit.deviance / static_cast<double>(n_minus_p);
    post.kind = PosteriorKind::mvt;
    post.dof = sm.dof;
    post.scale_matrix = sm.scale * fit.cov_unscaled;
    post.cov = phi_map * fit.cov_unscaled;
    // Step 4: empirical Bayes collapses the scale marginal onto phi_MAP.
    out.plug_in.mean = fit.beta_hat;
    out.plug_in.kind = PosteriorKind::normal_known_phi;
    out.plug_in.cov = phi_map * fit.cov_unscaled;
    return out;
}

ImproprietyReport detect_impropriety(const ScalarLogFn& f, TailDirection direction) {
    ImproprietyReport rep;
    auto eval = [&](double t) {
        const double v = f(t);
        return std::isnan(v) ? kNegInf : v;
    };
    rep.peak_log = kNegInf;
    for (int i = 0; i <= 160; ++i) rep.peak_log = std::max(rep.peak_log, eval(-40.0 + 0.5 * i));
    if (!std::isfinite(rep.peak_log)) {
        rep.evidence = "function is -inf on [-40, 40]";
        return rep;
    }
    constexpr double kTail = 30.0, kH = 0.5, kRatio = 1e-10, kSlope = 0.05;
    auto side = [&](double at, double& ratio, double& slope) {
        const double v = eval(at);
        ratio = v - rep.peak_log;
        const double lo = eval(at - kH), hi = eval(at + kH);
        slope = (std::isfinite(lo) && std::isfinite(hi)) ? (hi - lo) / (2.0 * kH) : kNegInf;
        return std::isfinite(v) && ratio > std::log(kRatio) && std::abs(slope) < kSlope;
    };
    std::ostringstream ev;
    bool left = false, right = false;
    if (direction != TailDirection::right) {
        left = side(-kTail, rep.left_log_ratio, rep.left_slope);
        ev << "left: log ratio " << rep.left_log_ratio << ", slope " << rep.left_slope << (left ? " (flat)" : "");
    }
    if (direction != TailDirection::left) {
        right = side(kTail, rep.right_log_ratio, rep.right_slope);
        if (direction == TailDirection::both) ev << "; ";
        ev << "right: log ratio " << rep.right_log_ratio << ", slope " << rep.right_slope
           << (right ? " (flat)" : "");
    }
    rep.improper = left || right;
    rep.evidence = ev.str();
    return rep;
}

double GridPosterior::marginal_mean(std::size_t axis) const {
    const auto& a = axes.at(axis);
    std::vector<double> y(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) y[k] = a[k] * marginals[axis][k];
    return trapezoid(a, y) / trapezoid(a, marginals[axis]);
}

double GridPosterior::marginal_sd(std::size_t axis) const {
    const auto& a = axes.at(axis);
    const double m = marginal_mean(axis);
    std::vector<double> y(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) y[k] = (a[k] - m) * (a[k] - m) * marginals[axis][k];
    return std::sqrt(trapezoid(a, y) / trapezoid(a, marginals[axis]));
}

namespace {

// Integral over [a[k], a[k] + t h] of the cubic through four neighbouring nodes (shifted inward at the ends).
// Exact for cubics, so the cdf converges at O(h^4) where the plain trapezoid stalls at O(h^2).
double cubic_piece(const std::vector<double>& a, const std::vector<double>& m, std::size_t k, double t) {
    const std::size_t n = a.size();
    if (n < 4) return 0.5 * t * (a[k + 1] - a[k]) * (m[k] + (m[k] + t * (m[k + 1] - m[k])));
    const std::size_t s0 = std::min(k > 0 ? k - 1 : 0, n - 4);
    const double h = a[k + 1] - a[k];
    auto interp = [&](double u) {  // u in units of h from a[k]
        double v = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            const double uj = static_cast<double>(s0 + j) - static_cast<double>(k);
            double l = 1.0;
            for (std::size_t i = 0; i < 4; ++i) {
                if (i == j) continue;
                const double ui = static_cast<double>(s0 + i) - static_cast<double>(k);
                l *= (u - ui) / (uj - ui);
            }
            v += l * m[s0 + j];
        }
        return v;
    };
    // Two-point Gauss-Legendre is exact for cubics.
    const double g = 0.5 / std::sqrt(3.0);
    return 0.5 * t * h * (interp(t * (0.5 - g)) + interp(t * (0.5 + g)));
}

}  // namespace

double GridPosterior::marginal_cdf(std::size_t axis, double b) const {
    const auto& a = axes.at(axis);
    const auto& m = marginals[axis];
    if (b <= a.front()) return 0.0;
    if (b >= a.back()) return 1.0;
    double total = 0.0, acc = 0.0;
    for (std::size_t k = 0; k + 1 < a.size(); ++k) {
        const double piece = cubic_piece(a, m, k, 1.0);
        total += piece;
        if (b >= a[k + 1]) {
            acc += piece;
        } else if (b > a[k]) {
            acc += cubic_piece(a, m, k, (b - a[k]) / (a[k + 1] - a[k]));
        }
    }
    return std::clamp(acc / total, 0.0, 1.0);
}

Eigen::VectorXd GridPosterior::sample(RngStream& rng) const {
    const double u = rng.uniform();
    const auto it = std::lower_bound(node_cdf.begin(), node_cdf.end(), u);
    std::size_t idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - node_cdf.begin(), node_cdf.size() - 1));
    const std::size_t r = axes.front().size();
    std::size_t ix[3];
    unravel(idx, r, dim(), ix);
    Eigen::VectorXd b(static_cast<Eigen::Index>(dim()));
    for (std::size_t j = 0; j < dim(); ++j) {
        const auto& a = axes[j];
        const double h = a[1] - a[0];
        const double v = a[ix[j]] + (rng.uniform() - 0.5) * h;
        b[static_cast<Eigen::Index>(j)] = std::clamp(v, a.front(), a.back());
    }
    return b;
}

GridPosterior grid_posterior(const LogDensityFn& loglik, const std::vector<PriorSpec>& priors,
                             const std::vector<std::pair<double, double>>& bounds, int resolution,
                             const GridOptions& opts) {
    return grid_impl<true>(loglik, priors, bounds, resolution, opts);
}

namespace serial {
GridPosterior grid_posterior(const LogDensityFn& loglik, const std::vector<PriorSpec>& priors,
                             const std::vector<std::pair<double, double>>& bounds, int resolution,
                             const GridOptions& opts) {
    return grid_impl<false>(loglik, priors, bounds, resolution, opts);
}
}  // namespace serial

PFormula p_formula_density(const FitResult& fit, const Family& family, const Link& link, const ModelData& data,
                           const std::vector<double>& axis0, const std::vector<double>& axis1, double phi) {
    if (fit.boundary) throw NotApplicableError("p_formula_density: boundary fit");
    if (!fit.converged) throw ConvergenceError("p_formula_density: fit did not converge");
    if (fit.p != 2) throw DimensionError("p_formula_density: p must equal 2");
    const Eigen::MatrixXd info = expected_information(family, link, fit.beta_hat, phi, data);
    // (n/2pi)^{p/2} |I/n|^{1/2} = (2pi)^{-p/2} |I|^{1/2}
    const double log_front = -std::log(2.0 * std::numbers::pi) + 0.5 * std::log(info.determinant());
    const double ll_hat = log_likelihood(family, link, fit.beta_hat, phi, data);
    PFormula out;
    out.axis0 = axis0;
    out.axis1 = axis1;
    out.raw.resize(axis0.size() * axis1.size());
    for (std::size_t i = 0; i < axis0.size(); ++i)
        for (std::size_t j = 0; j < axis1.size(); ++j) {
            double ll;
            try {
                ll = log_likelihood(family, link, Eigen::Vector2d(axis0[i], axis1[j]), phi, data);
            } catch (const DomainError&) {
                ll = kNegInf;
            }
            out.raw[i * axis1.size() + j] = std::exp(log_front + ll - ll_hat);
        }
    const auto w0 = trapezoid_weights(axis0), w1 = trapezoid_weights(axis1);
    double z = 0.0;
    for (std::size_t i = 0; i < axis0.size(); ++i)
        for (std::size_t j = 0; j < axis1.size(); ++j) z += w0[i] * w1[j] * out.raw[i * axis1.size() + j];
    out.renormalized.resize(out.raw.size());
    for (std::size_t k = 0; k < out.raw.size(); ++k) out.renormalized[k] = out.raw[k] / z;
    return out;
}

LogDensityFn glm_log_posterior(const Family& family, const Link& link, const ModelData& data, double phi,
                               const std::vector<PriorSpec>& priors) {
    if (!priors.empty() && static_cast<Eigen::Index>(priors.size()) != data.p())
        throw DimensionError("glm_log_posterior: one prior per coefficient");
    const ModelData d = data.with_defaults();
    return [family, link, d, phi, priors](const Eigen::VectorXd& b) {
        double lp = 0.0;
        for (std::size_t j = 0; j < priors.size(); ++j) {
            lp += prior_logpdf(priors[j], b[static_cast<Eigen::Index>(j)]);
            if (!std::isfinite(lp)) return kNegInf;
        }
        try {
            return lp + log_likelihood(family, link, b, phi, d);
        } catch (const DomainError&) {
            return kNegInf;
        }
    };
}

}  // namespace pival
