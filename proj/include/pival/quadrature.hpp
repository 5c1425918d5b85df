#pragma once

#include <functional>
#include <vector>

namespace pival {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

struct QuadOptions {
    double rel_tol = 1e-12;
    unsigned max_depth = 20;
};

// Adaptive Gauss-Kronrod (15/31). Infinite limits allowed.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadOptions& opts = {});

// Sum of adaptive pieces between consecutive breakpoints (sorted, at least two).
QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& breaks,
                            const QuadOptions& opts = {});

// Double-exponential rule; tolerates integrable endpoint singularities.
QuadResult integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                       double rel_tol = 1e-12);

// Composite trapezoid on a tabulated grid.
double trapezoid(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pival
