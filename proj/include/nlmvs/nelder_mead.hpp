#pragma once

#include <functional>
#include <vector>

namespace nlmvs {

struct NelderMeadOptions {
    int max_evals = 500;
    double initial_step_rel = 0.15; // relative to the box extent per dimension
    double xtol = 1e-6;
    double ftol = 1e-10;
    int max_restarts = 2;
};

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0;
    int evals = 0;
};

/// Derivative-free simplex minimization with box bounds (clamping) and restart
/// on stagnation. Never returns a point worse than the best evaluated one.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const std::vector<double>& lower,
                             const std::vector<double>& upper, const NelderMeadOptions& opts);

} // namespace nlmvs
