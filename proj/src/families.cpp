#include "sba/families.hpp"

#include <cmath>

namespace sba {

bool ParametricFamily::valid(const Vec& theta) const {
    if (static_cast<int>(theta.size()) != param_dim()) return false;
    switch (kind_) {
        case FamilyKind::Exponential:
        case FamilyKind::Poisson:
            return theta[0] > 0.0;
        case FamilyKind::NormalMoment:
            return theta[1] > theta[0] * theta[0];
    }
    return false;
}

void ParametricFamily::require_valid(const Vec& theta) const {
    if (!valid(theta)) throw invalid_parameter("parameter outside the family's valid set");
}

Vec ParametricFamily::project(Vec theta) const {
    theta.resize(param_dim(), 0.0);
    switch (kind_) {
        case FamilyKind::Exponential:
        case FamilyKind::Poisson:
            if (theta[0] < kBoundaryMargin) theta[0] = kBoundaryMargin;
            break;
        case FamilyKind::NormalMoment:
            if (theta[1] < theta[0] * theta[0] + kBoundaryMargin)
                theta[1] = theta[0] * theta[0] + kBoundaryMargin;
            break;
    }
    return theta;
}

double ParametricFamily::sample(const Vec& theta, std::mt19937_64& rng) const {
    require_valid(theta);
    switch (kind_) {
        case FamilyKind::Exponential: {
            std::exponential_distribution<double> d(1.0 / theta[0]);
            return d(rng);
        }
        case FamilyKind::Poisson: {
            std::poisson_distribution<long> d(theta[0]);
            return static_cast<double>(d(rng));
        }
        case FamilyKind::NormalMoment: {
            const double mean = theta[0];
            const double var = theta[1] - theta[0] * theta[0];
            std::normal_distribution<double> d(mean, std::sqrt(var));
            return d(rng);
        }
    }
    return 0.0;
}

Vec ParametricFamily::moment_map(double realization) const {
    if (kind_ == FamilyKind::NormalMoment) return {realization, realization * realization};
    return {realization};
}

double ParametricFamily::log_density(const Vec& theta, double x) const {
    require_valid(theta);
    switch (kind_) {
        case FamilyKind::Exponential:
            return -std::log(theta[0]) - x / theta[0];
        case FamilyKind::Poisson:
            return x * std::log(theta[0]) - theta[0] - std::lgamma(x + 1.0);
        case FamilyKind::NormalMoment: {
            const double mean = theta[0];
            const double var = theta[1] - theta[0] * theta[0];
            const double z = x - mean;
            return -0.5 * std::log(2.0 * M_PI * var) - z * z / (2.0 * var);
        }
    }
    return 0.0;
}

Vec ParametricFamily::score(const Vec& theta, std::span<const double> draws) const {
    require_valid(theta);
    Vec out(param_dim(), 0.0);
    switch (kind_) {
        case FamilyKind::Exponential:
            for (double x : draws) out[0] += (x - theta[0]) / (theta[0] * theta[0]);
            break;
        case FamilyKind::Poisson:
            for (double x : draws) out[0] += x / theta[0] - 1.0;
            break;
        case FamilyKind::NormalMoment: {
            // Chain rule from (mean, variance) = (m1, m2 - m1^2):
            //   d/dm1 = d/dmu - 2 m1 d/dvar,  d/dm2 = d/dvar.
            const double mean = theta[0];
            const double var = theta[1] - theta[0] * theta[0];
            for (double x : draws) {
                const double z = x - mean;
                const double dmu = z / var;
                const double dvar = -0.5 / var + z * z / (2.0 * var * var);
                out[0] += dmu - 2.0 * theta[0] * dvar;
                out[1] += dvar;
            }
            break;
        }
    }
    return out;
}

ParametricFamily family_from_name(std::string_view name) {
    if (name == "exponential") return ParametricFamily(FamilyKind::Exponential);
    if (name == "poisson") return ParametricFamily(FamilyKind::Poisson);
    if (name == "normal_moment") return ParametricFamily(FamilyKind::NormalMoment);
    throw std::invalid_argument("unknown input family: " + std::string(name));
}

std::string family_name(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::Exponential: return "exponential";
        case FamilyKind::Poisson: return "poisson";
        case FamilyKind::NormalMoment: return "normal_moment";
    }
    return "?";
}

}  // namespace sba
