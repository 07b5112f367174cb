#pragma once

// Test-only reference implementations, kept independent of the solver paths
// they check: dense elimination for small linear systems, bisection root
// finding, and an RK4 shooting integrator for the slab boundary-value
// problem.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace testsupport {

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
    const std::size_t n = A.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        std::swap(A[col], A[piv]);
        std::swap(b[col], b[piv]);
        if (std::abs(A[col][col]) < 1e-300) throw std::runtime_error("dense_solve: singular");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = A[r][col] / A[col][col];
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t r = n; r-- > 0;) {
        double s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

/// Bisection on [lo, hi]; f(lo) and f(hi) must bracket a root.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iters = 200) {
    double flo = f(lo);
    if (flo == 0.0) return lo;
    for (int i = 0; i < iters; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if ((flo < 0.0) == (fm < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

/// RK4 integration of u'' = (u'^2/2 - F)/eps from x=0 with u(0)=0, u'(0)=s.
inline double shoot_slab(double eps, double F, double slope0, double x_end, int steps) {
    double u = 0.0, up = slope0;
    const double h = x_end / steps;
    auto acc = [&](double up_) { return (0.5 * up_ * up_ - F) / eps; };
    for (int i = 0; i < steps; ++i) {
        const double k1u = up, k1p = acc(up);
        const double k2u = up + 0.5 * h * k1p, k2p = acc(up + 0.5 * h * k1p);
        const double k3u = up + 0.5 * h * k2p, k3p = acc(up + 0.5 * h * k2p);
        const double k4u = up + h * k3p, k4p = acc(up + h * k3p);
        u += h * (k1u + 2 * k2u + 2 * k3u + k4u) / 6.0;
        up += h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0;
    }
    return u;
}

/// Deterministic 64-bit mixer for reproducible pseudo-random test data.
inline double lcg_uniform(std::uint64_t& state) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

}  // namespace testsupport
