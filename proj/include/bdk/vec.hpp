#ifndef BDK_VEC_HPP
#define BDK_VEC_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "bdk/errors.hpp"

namespace bdk {

using Vec = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double squared_norm(std::span<const double> a) {
    double acc = 0.0;
    for (double v : a) acc += v * v;
    return acc;
}

inline double norm(std::span<const double> a) {
    return std::sqrt(squared_norm(a));
}

inline Vec scaled(std::span<const double> a, double s) {
    Vec out(a.begin(), a.end());
    for (double& v : out) v *= s;
    return out;
}

/// y += s * x
inline void axpy(double s, std::span<const double> x, Vec& y) {
    require(x.size() == y.size(), "axpy: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

inline Vec unit(std::span<const double> a) {
    const double n = norm(a);
    require(n > 0.0, "unit: zero vector");
    return scaled(a, 1.0 / n);
}

/// Root-mean-square of the elementwise difference.
inline double rmse(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "rmse: dimension mismatch");
    require(!a.empty(), "rmse: empty vectors");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

inline double mean(std::span<const double> a) {
    require(!a.empty(), "mean: empty input");
    double acc = 0.0;
    for (double v : a) acc += v;
    return acc / static_cast<double>(a.size());
}

/// Unbiased sample variance.
inline double variance(std::span<const double> a) {
    require(a.size() >= 2, "variance: need at least 2 values");
    const double m = mean(a);
    double acc = 0.0;
    for (double v : a) acc += (v - m) * (v - m);
    return acc / static_cast<double>(a.size() - 1);
}

} // namespace bdk

#endif // BDK_VEC_HPP
