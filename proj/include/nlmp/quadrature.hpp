#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "nlmp/error.hpp"

namespace nlmp::quad {

/// Gauss-Legendre rule mapped to the reference interval [0, 1].
struct Rule {
    std::vector<double> points;
    std::vector<double> weights;

    [[nodiscard]] int size() const noexcept { return static_cast<int>(points.size()); }
};

inline constexpr int kMaxOrder = 32;

namespace detail {

inline Rule compute_gauss_legendre(int n) {
    Rule rule;
    rule.points.resize(n);
    rule.weights.resize(n);
    // Newton iteration on P_n starting from the Chebyshev-like initial guess.
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        rule.points[i] = 0.5 * (1.0 - x);
        rule.points[n - 1 - i] = 0.5 * (1.0 + x);
        rule.weights[i] = 0.5 * w;
        rule.weights[n - 1 - i] = 0.5 * w;
    }
    if (n % 2 == 1) rule.points[n / 2] = 0.5;
    return rule;
}

} // namespace detail

/// Cached Gauss-Legendre rule with `order` points on [0, 1].
inline const Rule& gauss_legendre(int order) {
    static const std::array<Rule, kMaxOrder + 1> rules = [] {
        std::array<Rule, kMaxOrder + 1> r{};
        for (int n = 1; n <= kMaxOrder; ++n) r[n] = detail::compute_gauss_legendre(n);
        return r;
    }();
    if (order < 1 || order > kMaxOrder)
        throw InvalidParameter("Gauss-Legendre order must lie in [1, 32]");
    return rules[order];
}

/// Integrate f over [a, b] with the given rule.
template <class F>
double integrate(const Rule& rule, double a, double b, F&& f) {
    const double len = b - a;
    double sum = 0.0;
    for (int q = 0; q < rule.size(); ++q) sum += rule.weights[q] * f(a + len * rule.points[q]);
    return sum * len;
}

} // namespace nlmp::quad
