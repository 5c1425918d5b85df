#pragma once

#include <optional>
#include <string>

namespace pival {

enum class FamilyKind { gaussian, poisson, binomial, gamma };
enum class LinkKind { identity, log, logit };

class Family {
public:
    explicit Family(FamilyKind kind) : kind_(kind) {}
    static Family from_name(const std::string& name);

    FamilyKind kind() const { return kind_; }
    std::string name() const;
    bool known_scale() const { return kind_ == FamilyKind::poisson || kind_ == FamilyKind::binomial; }
    LinkKind canonical_link() const;

    double cumulant(double theta) const;     // b(theta)
    double theta(double mu) const;           // (b')^-1(mu)
    double mean_of_theta(double theta) const;  // b'(theta)
    double variance(double mu) const;        // V(mu)
    bool mean_in_domain(double mu) const;
    bool response_in_domain(double y) const;
    // Unit deviance d(y, mu) with 0 log 0 = 0.
    double unit_deviance(double y, double mu) const;

private:
    FamilyKind kind_;
};

class Link {
public:
    explicit Link(LinkKind kind) : kind_(kind) {}
    static Link from_name(const std::string& name);

    LinkKind kind() const { return kind_; }
    std::string name() const;
    std::optional<FamilyKind> canonical_for() const;

    double g(double mu) const;
    double ginv(double eta) const;
    double dg(double mu) const;    // g'(mu) = d eta / d mu
    double d2g(double mu) const;   // g''(mu)
    bool mu_in_range(double mu) const;

private:
    LinkKind kind_;
};

}  // namespace pival
