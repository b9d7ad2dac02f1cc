#pragma once
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sba/linalg.hpp"

namespace sba {

struct invalid_parameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class FamilyKind { Exponential, Poisson, NormalMoment };

// A parametric input distribution in moment parametrization: the moment map D
// satisfies E[D(zeta)] = theta, so the sample average of D is the parameter
// estimator. Exponential/Poisson carry theta = mean (D identity); NormalMoment
// carries theta = (m1, m2) = (E zeta, E zeta^2) with D(zeta) = (zeta, zeta^2).
class ParametricFamily {
  public:
    explicit ParametricFamily(FamilyKind kind) : kind_(kind) {}

    FamilyKind kind() const { return kind_; }
    int param_dim() const { return kind_ == FamilyKind::NormalMoment ? 2 : 1; }

    bool valid(const Vec& theta) const;
    void require_valid(const Vec& theta) const;

    // Nearest valid parameter, at distance kBoundaryMargin inside the boundary.
    Vec project(Vec theta) const;

    double sample(const Vec& theta, std::mt19937_64& rng) const;
    Vec moment_map(double realization) const;

    // log f_theta(x) of a single realization
    double log_density(const Vec& theta, double realization) const;

    // d/d_theta log q_theta of the joint density of the draws: sum of
    // per-draw scores. Dimension = param_dim.
    Vec score(const Vec& theta, std::span<const double> draws) const;

    static constexpr double kBoundaryMargin = 1e-6;

  private:
    FamilyKind kind_;
};

ParametricFamily family_from_name(std::string_view name);
std::string family_name(FamilyKind kind);

}  // namespace sba
