#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pival/glm.hpp"

namespace pival {

struct SurfaceGrid {
    double half_width_se = 4.0;  // half-width of each axis in SE units
    int resolution = 81;         // nodes per axis
    std::optional<Eigen::Vector2d> anchor;            // centre override; required for boundary fits
    std::optional<Eigen::Vector2d> absolute_half_widths;  // overrides the SE-based widths
};

struct SurfaceNode {
    double beta0 = 0.0;
    double beta1 = 0.0;
    double loglik = 0.0;
    double loglik_quad = 0.0;
    double mahalanobis = 0.0;
};

struct LikelihoodSurface {
    std::vector<double> axis0, axis1;
    std::vector<SurfaceNode> nodes;  // row-major: axis0 outer, axis1 inner
    Eigen::Vector2d centre;
    bool boundary = false;
};

LikelihoodSurface likelihood_surface(const Family& family, const Link& link, const ModelData& data,
                                     const FitResult& fit, const SurfaceGrid& grid = {});

struct Quadraticity {
    double score = 0.0;
    bool pass = false;
};

Quadraticity quadraticity_diagnostic(const LikelihoodSurface& surface, double threshold = 0.1);

}  // namespace pival
