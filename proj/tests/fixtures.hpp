#pragma once

#include <cmath>

#include "pival/glm.hpp"
#include "pival/numerics.hpp"

namespace fixture {

// Two-arm rate data, treated arm first; exposures in thousands of person-years.
inline pival::ModelData two_arm(double y_t, double y_c, double t_t, double t_c) {
    pival::ModelData d;
    d.y = Eigen::Vector2d(y_t, y_c);
    d.X.resize(2, 2);
    d.X << 1, 1, 1, 0;
    d.offset = Eigen::Vector2d(std::log(t_t), std::log(t_c));
    d.weights = Eigen::Vector2d::Ones();
    d.coef_names = {"(Intercept)", "treat"};
    return d;
}

inline pival::ModelData credence_primary() { return two_arm(245, 340, 5.671296, 5.555556); }
inline pival::ModelData credence_dka() { return two_arm(11, 1, 5.000, 5.005); }
inline pival::ModelData dapa_primary() { return two_arm(197, 312, 4.282609, 4.160); }
inline pival::ModelData dapa_dka() { return two_arm(0, 2, 2.149, 2.149); }

// Random design with an intercept and p-1 standard-normal covariates.
inline Eigen::MatrixXd random_design(pival::RngStream& r, int n, int p) {
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < p; ++j) X(i, j) = r.normal();
    }
    return X;
}

inline pival::Link default_link(pival::FamilyKind kind) {
    using namespace pival;
    switch (kind) {
        case FamilyKind::gaussian: return Link(LinkKind::identity);
        case FamilyKind::poisson: return Link(LinkKind::log);
        case FamilyKind::binomial: return Link(LinkKind::logit);
        case FamilyKind::gamma: return Link(LinkKind::log);
    }
    return Link(LinkKind::identity);
}

// y drawn from the family at the given coefficients; binomial gets 20 trials per row.
inline pival::ModelData random_data(pival::FamilyKind kind, pival::RngStream& r, int n, const Eigen::VectorXd& beta,
                                    double phi = 0.5) {
    using namespace pival;
    const Link link = default_link(kind);
    ModelData d;
    d.X = random_design(r, n, static_cast<int>(beta.size()));
    d.y.resize(n);
    if (kind == FamilyKind::binomial) d.trials = Eigen::VectorXd::Constant(n, 20.0);
    for (int i = 0; i < n; ++i) {
        const double mu = link.ginv(d.X.row(i).dot(beta));
        switch (kind) {
            case FamilyKind::gaussian: d.y[i] = r.normal(mu, std::sqrt(phi)); break;
            case FamilyKind::poisson: d.y[i] = static_cast<double>(r.poisson(mu)); break;
            case FamilyKind::binomial: d.y[i] = static_cast<double>(r.binomial(20, mu)) / 20.0; break;
            case FamilyKind::gamma: d.y[i] = r.gamma(1.0 / phi, mu * phi); break;
        }
    }
    return d.with_defaults();
}

}  // namespace fixture
