#include "pival/surface.hpp"

#include <cmath>
#include <limits>

#include "pival/errors.hpp"

namespace pival {

LikelihoodSurface likelihood_surface(const Family& family, const Link& link, const ModelData& data,
                                     const FitResult& fit, const SurfaceGrid& grid) {
    if (data.p() != 2 || fit.beta_hat.size() != 2) throw DimensionError("likelihood_surface: p must equal 2");
    if (grid.resolution < 2) throw DomainError("likelihood_surface: resolution must be at least 2");
    if (fit.boundary && !grid.anchor)
        throw NotApplicableError("likelihood_surface: boundary fit needs a user anchor");

    const double phi = fit.inferential_phi();
    const Eigen::Matrix2d sigma = phi * fit.cov_unscaled;
    const Eigen::Matrix2d prec = sigma.inverse();
    const double ll_hat = log_likelihood(family, link, fit.beta_hat, phi, data);

    LikelihoodSurface s;
    s.boundary = fit.boundary;
    s.centre = grid.anchor ? *grid.anchor : Eigen::Vector2d(fit.beta_hat);
    Eigen::Vector2d half;
    if (grid.absolute_half_widths)
        half = *grid.absolute_half_widths;
    else if (fit.boundary)
        half = Eigen::Vector2d(5.0, 5.0);
    else
        half = grid.half_width_se * sigma.diagonal().cwiseSqrt();

    const int r = grid.resolution;
    for (int k = 0; k < r; ++k) {
        const double t = -1.0 + 2.0 * k / (r - 1);
        s.axis0.push_back(s.centre[0] + t * half[0]);
        s.axis1.push_back(s.centre[1] + t * half[1]);
    }
    s.nodes.resize(static_cast<std::size_t>(r) * r);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            SurfaceNode& node = s.nodes[static_cast<std::size_t>(i) * r + j];
            node.beta0 = s.axis0[i];
            node.beta1 = s.axis1[j];
            const Eigen::Vector2d b(node.beta0, node.beta1);
            try {
                node.loglik = log_likelihood(family, link, b, phi, data);
            } catch (const DomainError&) {
                node.loglik = -std::numeric_limits<double>::infinity();
            }
            const Eigen::Vector2d d = b - fit.beta_hat;
            const double q = d.dot(prec * d);
            node.loglik_quad = ll_hat - 0.5 * q;
            node.mahalanobis = std::sqrt(q);
        }
    }
    return s;
}

Quadraticity quadraticity_diagnostic(const LikelihoodSurface& surface, double threshold) {
    if (surface.boundary) throw NotApplicableError("quadraticity_diagnostic: boundary fit");
    Quadraticity q;
    for (const auto& node : surface.nodes)
        if (node.mahalanobis <= 2.0) q.score = std::max(q.score, std::abs(node.loglik - node.loglik_quad));
    q.pass = q.score < threshold;
    return q;
}

}  // namespace pival
