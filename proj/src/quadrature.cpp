#include "pival/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "pival/errors.hpp"

namespace pival {

QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadOptions& opts) {
    if (a == b) return {};
    if (a > b) {
        auto r = integrate(f, b, a, opts);
        return {-r.value, r.error};
    }
    QuadResult r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, opts.max_depth, opts.rel_tol,
                                                                             &r.error);
    return r;
}

QuadResult integrate_pieces(const std::function<double(double)>& f, const std::vector<double>& breaks,
                            const QuadOptions& opts) {
    if (breaks.size() < 2) throw DomainError("integrate_pieces: need at least two breakpoints");
    QuadResult total;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        auto r = integrate(f, breaks[i], breaks[i + 1], opts);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

QuadResult integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b, double rel_tol) {
    if (a == b) return {};
    boost::math::quadrature::tanh_sinh<double> rule;
    QuadResult r;
    double l1 = 0.0;
    r.value = rule.integrate(f, a, b, rel_tol, &r.error, &l1);
    return r;
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("trapezoid: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) s += 0.5 * (x[i + 1] - x[i]) * (y[i] + y[i + 1]);
    return s;
}

}  // namespace pival
