#pragma once
#include <cassert>
#include <cstddef>
#include <vector>

namespace sba {

using Vec = std::vector<double>;

// Tiny dense symmetric matrix, row-major. Input-parameter dimensions are 1 or 2
// for the supported families, so no linear-algebra library is needed.
struct SmallMat {
    int dim = 0;
    std::vector<double> a;  // dim*dim

    SmallMat() = default;
    explicit SmallMat(int d) : dim(d), a(static_cast<std::size_t>(d) * d, 0.0) {}

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(r) * dim + c]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(r) * dim + c]; }

    void add_ridge(double eps) {
        for (int k = 0; k < dim; ++k) (*this)(k, k) += eps;
    }
};

// v^T A v
inline double quad_form(const Vec& v, const SmallMat& m) {
    assert(static_cast<int>(v.size()) == m.dim);
    double out = 0.0;
    for (int r = 0; r < m.dim; ++r)
        for (int c = 0; c < m.dim; ++c) out += v[r] * m(r, c) * v[c];
    return out;
}

inline double dot(const Vec& x, const Vec& y) {
    assert(x.size() == y.size());
    double out = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) out += x[k] * y[k];
    return out;
}

}  // namespace sba
