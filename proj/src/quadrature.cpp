#include "aloha/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/core.h>

namespace aloha {

namespace {

constexpr unsigned kMaxDepth = 20;

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (!(b > a)) return {};
    using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
    double error = 0.0;
    double l1 = 0.0;
    double value = Rule::integrate(f, a, b, kMaxDepth, abs_tol, &error, &l1);
    // The rule's tolerance is relative to the L1 norm; tighten once if the
    // norm exceeds one.
    if (!(error <= abs_tol) && l1 > 1.0) value = Rule::integrate(f, a, b, kMaxDepth, abs_tol / l1, &error, &l1);
    if (!(error <= abs_tol))
        throw QuadratureError(
            fmt::format("quadrature on [{}, {}] did not reach tolerance {} (estimate {})", a, b, abs_tol, error), error);
    return {value, error};
}

QuadratureResult integrate_exp_weighted(const std::function<double(double)>& f, double a,
                                        std::span<const double> breakpoints, double abs_tol) {
    // exp(-cutoff) <= abs_tol / 10
    const double cutoff = std::max(a, 0.0) + std::log(10.0 / abs_tol);
    std::vector<double> edges{a};
    for (double x : breakpoints)
        if (x > a && x < cutoff) edges.push_back(x);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges.push_back(cutoff);

    auto weighted = [&f](double x) { return f(x) * std::exp(-x); };
    const double segment_tol = 0.5 * abs_tol / static_cast<double>(edges.size());
    QuadratureResult total{0.0, std::exp(-cutoff)};
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const auto piece = integrate(weighted, edges[s], edges[s + 1], segment_tol);
        total.value += piece.value;
        total.error += piece.error;
    }
    if (!(total.error <= abs_tol))
        throw QuadratureError(fmt::format("exp-weighted quadrature error {} exceeds {}", total.error, abs_tol),
                              total.error);
    return total;
}

}  // namespace aloha
