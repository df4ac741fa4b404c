#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bayescg {

using Vector = std::vector<double>;

// Matrix-free linear operator on R^d.
using LinearOperatorFn = std::function<Vector(const Vector&)>;

inline Vector zeros(std::size_t n) { return Vector(n, 0.0); }

inline void require_same_size(const Vector& x, const Vector& y, const char* where) {
    if (x.size() != y.size())
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                    std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
}

inline double dot(const Vector& x, const Vector& y) {
    require_same_size(x, y, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const Vector& x) { return std::sqrt(dot(x, x)); }

// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
    require_same_size(x, y, "axpy");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vector scaled(const Vector& x, double alpha) {
    Vector r(x);
    for (double& v : r) v *= alpha;
    return r;
}

inline Vector add(const Vector& x, const Vector& y) {
    require_same_size(x, y, "add");
    Vector r(x);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] += y[i];
    return r;
}

inline Vector subtract(const Vector& x, const Vector& y) {
    require_same_size(x, y, "subtract");
    Vector r(x);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] -= y[i];
    return r;
}

inline bool all_finite(const Vector& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// x' M y for a symmetric operator given by its apply function.
inline double weighted_inner(const LinearOperatorFn& m_apply, const Vector& x, const Vector& y) {
    return dot(x, m_apply(y));
}

}  // namespace bayescg
