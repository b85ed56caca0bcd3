#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

namespace aloha {

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double error_estimate)
        : std::runtime_error(what), error_estimate_(error_estimate) {}

    double error_estimate() const { return error_estimate_; }

private:
    double error_estimate_;
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;  // absolute error estimate, including any truncated tail
};

/// Adaptive Gauss-Kronrod integral of f over [a, b]. Throws QuadratureError
/// when the estimated absolute error exceeds `abs_tol`.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol);

/// Integral over [a, inf) of f(x) * exp(-x) for |f| <= 1. The range is split at
/// `breakpoints` (those above `a`) and cut at X where exp(-X) falls below a
/// fraction of `abs_tol`; the neglected tail is bounded by exp(-X).
QuadratureResult integrate_exp_weighted(const std::function<double(double)>& f, double a,
                                        std::span<const double> breakpoints, double abs_tol);

}  // namespace aloha
