#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pedflow {

/// Spatial point / vector with compile-time dimension.
template <std::size_t D>
using Vec = std::array<double, D>;

/// Multi-index of a grid node, one integer per axis.
template <std::size_t D>
using NodeIndex = std::array<int, D>;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct InternalError : std::logic_error {
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

template <std::size_t D>
constexpr Vec<D> zero_vec() {
    Vec<D> v{};
    return v;
}

template <std::size_t D>
inline Vec<D> operator+(Vec<D> a, const Vec<D>& b) {
    for (int k = 0; k < D; ++k) a[k] += b[k];
    return a;
}

template <std::size_t D>
inline Vec<D> operator-(Vec<D> a, const Vec<D>& b) {
    for (int k = 0; k < D; ++k) a[k] -= b[k];
    return a;
}

template <std::size_t D>
inline Vec<D> operator*(double s, Vec<D> a) {
    for (int k = 0; k < D; ++k) a[k] *= s;
    return a;
}

template <std::size_t D>
inline double dot(const Vec<D>& a, const Vec<D>& b) {
    double s = 0.0;
    for (int k = 0; k < D; ++k) s += a[k] * b[k];
    return s;
}

template <std::size_t D>
inline double norm2(const Vec<D>& a) {
    return std::sqrt(dot(a, a));
}

template <std::size_t D>
inline Vec<D> axis_vec(int axis, double length) {
    Vec<D> v{};
    v[axis] = length;
    return v;
}

inline bool nearly_equal(double a, double b, double tol) {
    return std::abs(a - b) <= tol;
}

}  // namespace pedflow
