#include "pival/family.hpp"

#include <cmath>
#include <limits>

#include "pival/errors.hpp"

namespace pival {

namespace {

double xlogy_ratio(double y, double mu) { return y > 0.0 ? y * std::log(y / mu) : 0.0; }

}  // namespace

Family Family::from_name(const std::string& name) {
    if (name == "gaussian") return Family(FamilyKind::gaussian);
    if (name == "poisson") return Family(FamilyKind::poisson);
    if (name == "binomial") return Family(FamilyKind::binomial);
    if (name == "gamma") return Family(FamilyKind::gamma);
    throw DomainError("unknown family '" + name + "'");
}

std::string Family::name() const {
    switch (kind_) {
        case FamilyKind::gaussian: return "gaussian";
        case FamilyKind::poisson: return "poisson";
        case FamilyKind::binomial: return "binomial";
        case FamilyKind::gamma: return "gamma";
    }
    return "?";
}

LinkKind Family::canonical_link() const {
    switch (kind_) {
        case FamilyKind::gaussian: return LinkKind::identity;
        case FamilyKind::poisson: return LinkKind::log;
        case FamilyKind::binomial: return LinkKind::logit;
        case FamilyKind::gamma: return LinkKind::log;  // inverse link is out of scope; log is the working default
    }
    return LinkKind::identity;
}

double Family::cumulant(double t) const {
    switch (kind_) {
        case FamilyKind::gaussian: return 0.5 * t * t;
        case FamilyKind::poisson: return std::exp(t);
        case FamilyKind::binomial: return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        case FamilyKind::gamma:
            if (!(t < 0.0)) throw DomainError("gamma cumulant: theta must be negative");
            return -std::log(-t);
    }
    return 0.0;
}

double Family::theta(double mu) const {
    if (!mean_in_domain(mu)) throw DomainError("theta: mean outside family domain");
    switch (kind_) {
        case FamilyKind::gaussian: return mu;
        case FamilyKind::poisson: return std::log(mu);
        case FamilyKind::binomial: return std::log(mu / (1.0 - mu));
        case FamilyKind::gamma: return -1.0 / mu;
    }
    return 0.0;
}

double Family::mean_of_theta(double t) const {
    switch (kind_) {
        case FamilyKind::gaussian: return t;
        case FamilyKind::poisson: return std::exp(t);
        case FamilyKind::binomial: return 1.0 / (1.0 + std::exp(-t));
        case FamilyKind::gamma: return -1.0 / t;
    }
    return 0.0;
}

double Family::variance(double mu) const {
    switch (kind_) {
        case FamilyKind::gaussian: return 1.0;
        case FamilyKind::poisson: return mu;
        case FamilyKind::binomial: return mu * (1.0 - mu);
        case FamilyKind::gamma: return mu * mu;
    }
    return 0.0;
}

bool Family::mean_in_domain(double mu) const {
    if (!std::isfinite(mu)) return false;
    switch (kind_) {
        case FamilyKind::gaussian: return true;
        case FamilyKind::poisson:
        case FamilyKind::gamma: return mu > 0.0;
        case FamilyKind::binomial: return mu > 0.0 && mu < 1.0;
    }
    return false;
}

bool Family::response_in_domain(double y) const {
    if (!std::isfinite(y)) return false;
    switch (kind_) {
        case FamilyKind::gaussian: return true;
        case FamilyKind::poisson: return y >= 0.0 && y == std::floor(y);
        case FamilyKind::binomial: return y >= 0.0 && y <= 1.0;
        case FamilyKind::gamma: return y > 0.0;
    }
    return false;
}

double Family::unit_deviance(double y, double mu) const {
    if (!mean_in_domain(mu)) throw DomainError("deviance: fitted mean outside family domain");
    switch (kind_) {
        case FamilyKind::gaussian: return (y - mu) * (y - mu);
        case FamilyKind::poisson: return 2.0 * (xlogy_ratio(y, mu) - (y - mu));
        case FamilyKind::binomial: return 2.0 * (xlogy_ratio(y, mu) + xlogy_ratio(1.0 - y, 1.0 - mu));
        case FamilyKind::gamma: return 2.0 * (-std::log(y / mu) + (y - mu) / mu);
    }
    return 0.0;
}

Link Link::from_name(const std::string& name) {
    if (name == "identity") return Link(LinkKind::identity);
    if (name == "log") return Link(LinkKind::log);
    if (name == "logit") return Link(LinkKind::logit);
    throw DomainError("unknown link '" + name + "'");
}

std::string Link::name() const {
    switch (kind_) {
        case LinkKind::identity: return "identity";
        case LinkKind::log: return "log";
        case LinkKind::logit: return "logit";
    }
    return "?";
}

std::optional<FamilyKind> Link::canonical_for() const {
    switch (kind_) {
        case LinkKind::identity: return FamilyKind::gaussian;
        case LinkKind::log: return FamilyKind::poisson;
        case LinkKind::logit: return FamilyKind::binomial;
    }
    return std::nullopt;
}

double Link::g(double mu) const {
    switch (kind_) {
        case LinkKind::identity: return mu;
        case LinkKind::log: return std::log(mu);
        case LinkKind::logit: return std::log(mu / (1.0 - mu));
    }
    return 0.0;
}

double Link::ginv(double eta) const {
    switch (kind_) {
        case LinkKind::identity: return eta;
        case LinkKind::log: return std::exp(eta);
        case LinkKind::logit:
            return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
    }
    return 0.0;
}

double Link::dg(double mu) const {
    switch (kind_) {
        case LinkKind::identity: return 1.0;
        case LinkKind::log: return 1.0 / mu;
        case LinkKind::logit: return 1.0 / (mu * (1.0 - mu));
    }
    return 0.0;
}

double Link::d2g(double mu) const {
    switch (kind_) {
        case LinkKind::identity: return 0.0;
        case LinkKind::log: return -1.0 / (mu * mu);
        case LinkKind::logit: return (2.0 * mu - 1.0) / (mu * mu * (1.0 - mu) * (1.0 - mu));
    }
    return 0.0;
}

bool Link::mu_in_range(double mu) const {
    switch (kind_) {
        case LinkKind::identity: return std::isfinite(mu);
        case LinkKind::log: return mu > 0.0;
        case LinkKind::logit: return mu > 0.0 && mu < 1.0;
    }
    return false;
}

}  // namespace pival
