#pragma once

#include <cmath>
#include <vector>

#include "pedflow/core.hpp"

namespace pedflow {

/**
 * Finite discretization of the control set: the zero control exactly once,
 * then a polar grid rho*(cos theta, sin theta) ordered rho-ascending,
 * theta-ascending.  The radial step defaults to 1 (the published integer
 * radii); validation problems may refine it.
 */
template <std::size_t D>
class ControlSet {
public:
    static ControlSet polar(int n_theta, int n_rho, double rho_step = 1.0) {
        static_assert(D == 2, "polar control grids are two-dimensional");
        if (n_theta < 1 || n_rho < 0) throw ConfigError("controls: n_theta >= 1, n_rho >= 0 required");
        if (rho_step <= 0.0) throw ConfigError("controls: rho_step must be positive");
        ControlSet cs;
        cs.n_theta_ = n_theta;
        cs.n_rho_ = n_rho;
        cs.rho_step_ = rho_step;
        cs.controls_.push_back(zero_vec<D>());
        for (int r = 1; r <= n_rho; ++r) {
            const double rho = rho_step * r;
            for (int i = 0; i < n_theta; ++i) {
                const double theta = 2.0 * M_PI * static_cast<double>(i) / n_theta;
                cs.controls_.push_back(Vec<D>{rho * std::cos(theta), rho * std::sin(theta)});
            }
        }
        cs.alpha_max_ = rho_step * n_rho;
        return cs;
    }

    /// Axis-signed radial grid for one-dimensional instances.
    static ControlSet line(int n_rho, double rho_step = 1.0) {
        static_assert(D == 1, "line control grids are one-dimensional");
        ControlSet cs;
        cs.n_rho_ = n_rho;
        cs.rho_step_ = rho_step;
        cs.controls_.push_back(zero_vec<D>());
        for (int r = 1; r <= n_rho; ++r) {
            cs.controls_.push_back(Vec<D>{rho_step * r});
            cs.controls_.push_back(Vec<D>{-rho_step * r});
        }
        cs.alpha_max_ = rho_step * n_rho;
        return cs;
    }

    static ControlSet from_list(std::vector<Vec<D>> list) {
        ControlSet cs;
        int zeros = 0;
        double amax = 0.0;
        for (const auto& a : list) {
            const double n = norm2(a);
            if (n == 0.0) ++zeros;
            amax = std::max(amax, n);
        }
        if (zeros != 1) throw ConfigError("controls: list must contain the zero control exactly once");
        cs.controls_ = std::move(list);
        cs.alpha_max_ = amax;
        return cs;
    }

    const std::vector<Vec<D>>& list() const { return controls_; }
    std::size_t size() const { return controls_.size(); }
    const Vec<D>& operator[](std::size_t i) const { return controls_[i]; }
    double alpha_max() const { return alpha_max_; }
    int n_theta() const { return n_theta_; }
    int n_rho() const { return n_rho_; }
    double rho_step() const { return rho_step_; }

private:
    ControlSet() = default;
    std::vector<Vec<D>> controls_;
    double alpha_max_ = 0.0;
    int n_theta_ = 0;
    int n_rho_ = 0;
    double rho_step_ = 1.0;
};

}  // namespace pedflow
