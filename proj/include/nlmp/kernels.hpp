#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <variant>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nlmp/error.hpp"

namespace nlmp {

// Radial convolution kernels on the real line. Each variant is evaluated at
// r = |x - y| only, so every kernel is even by construction.

/// gamma(r) = exp(-r / scale) / (2 scale), unit mass.
struct Exponential {
    double scale = 1.0;
};

/// gamma(r) = exp(-r^2 / scale^2) / (scale sqrt(pi)), unit mass.
struct Gaussian {
    double scale = 1.0;
};

/// gamma(r) = (B exp(-r^2/b^2) - A exp(-r^2/a^2)) / pi.
///
/// The 1/pi prefactor is fixed; the kernel is not renormalized to unit mass.
/// With a = 1, b = 2, A = B = 1 this is (exp(-r^2/4) - exp(-r^2)) / pi.
struct InvertedMexicanHat {
    double a = 1.0;
    double b = 2.0;
    double A = 1.0;
    double B = 1.0;
};

/// gamma(r) = (1 + (r/a)^b)^{-1} / Gamma, unit mass.
struct Logistic {
    double a = 1.0;
    double b = 4.0;
};

/// gamma(r) = (1 + r/a)^{-p} / Gamma, unit mass.
struct PowerLaw {
    double a = 1.0;
    double p = 4.0;
};

struct KernelDiagnostics {
    double total_mass = 0.0;
    double second_moment = 0.0;
    double min_value_sampled = 0.0;
    bool is_sign_changing = false;
    double truncation_radius = 0.0;
};

class Kernel {
public:
    using Variant = std::variant<Exponential, Gaussian, InvertedMexicanHat, Logistic, PowerLaw>;

    Kernel() : Kernel(Exponential{}) {}

    template <class V>
        requires std::is_constructible_v<Variant, V>
    Kernel(V v) : variant_(std::move(v)) {  // NOLINT(google-explicit-constructor)
        validate();
        normalization_ = std::visit([](const auto& k) { return normalization(k); }, variant_);
    }

    [[nodiscard]] const Variant& variant() const noexcept { return variant_; }

    [[nodiscard]] std::string name() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Exponential>) return "exponential";
                else if constexpr (std::is_same_v<T, Gaussian>) return "gaussian";
                else if constexpr (std::is_same_v<T, InvertedMexicanHat>) return "mexican_hat";
                else if constexpr (std::is_same_v<T, Logistic>) return "logistic";
                else return "power_law";
            },
            variant_);
    }

    /// gamma(r) for r >= 0.
    [[nodiscard]] double operator()(double r) const {
        return std::visit([this, r](const auto& k) { return eval(k, r); }, variant_);
    }

    /// Closed-form integral of gamma over the real line.
    [[nodiscard]] double mass() const {
        return std::visit(
            [](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, InvertedMexicanHat>)
                    return (k.B * k.b - k.A * k.a) / std::sqrt(std::numbers::pi);
                else return 1.0;
            },
            variant_);
    }

    /// False when gamma has a kink at the origin (|x| enters non-smoothly).
    [[nodiscard]] bool smooth_at_origin() const {
        return std::holds_alternative<Gaussian>(variant_) ||
               std::holds_alternative<InvertedMexicanHat>(variant_);
    }

    /// Characteristic width used to size sampling grids.
    [[nodiscard]] double width() const {
        return std::visit(
            [](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Exponential> || std::is_same_v<T, Gaussian>)
                    return k.scale;
                else if constexpr (std::is_same_v<T, InvertedMexicanHat>) return k.b;
                else return k.a;
            },
            variant_);
    }

    /// Upper bound on 2 * int_R^inf |x|^moment |gamma(x)| dx for moment in {0, 2}.
    [[nodiscard]] double tail_bound(double R, int moment) const {
        return std::visit([R, moment, this](const auto& k) { return tail(k, R, moment); }, variant_);
    }

    /// Mass truncation radius: omitted mass beyond R_cut is below tol.
    [[nodiscard]] double truncation_radius(double tol) const {
        if (!(tol > 0.0)) throw InvalidParameter("truncation tolerance must be positive");
        return std::visit([tol, this](const auto& k) { return radius(k, tol); }, variant_);
    }

    /// Radius beyond which both the omitted mass and second moment are below tol.
    [[nodiscard]] double moment_truncation_radius(double tol) const {
        return std::visit(
            [tol, this](const auto& k) {
                return std::max(radius(k, tol), std::max(solve_tail(k, tol, 0), solve_tail(k, tol, 2)));
            },
            variant_);
    }

private:
    static void check(bool ok, const char* msg) {
        if (!ok) throw InvalidParameter(msg);
    }

    void validate() const {
        std::visit(
            [](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Exponential> || std::is_same_v<T, Gaussian>) {
                    check(k.scale > 0.0 && std::isfinite(k.scale), "kernel scale must be positive");
                } else if constexpr (std::is_same_v<T, InvertedMexicanHat>) {
                    check(k.a > 0.0 && k.b > k.a, "mexican hat requires 0 < a < b");
                    check(k.A > 0.0 && k.B > 0.0, "mexican hat requires A, B > 0");
                    check(k.A * k.a * k.a - k.B * k.b * k.b < 0.0, "mexican hat requires A a^2 - B b^2 < 0");
                } else if constexpr (std::is_same_v<T, Logistic>) {
                    check(k.a > 0.0, "logistic kernel requires a > 0");
                    check(k.b > 3.0, "logistic kernel requires b > 3 (finite second moment)");
                } else {
                    check(k.a > 0.0, "power-law kernel requires a > 0");
                    check(k.p > 3.0, "power-law kernel requires p > 3 (finite second moment)");
                }
            },
            variant_);
    }

    // Multiplicative prefactor applied in eval().
    static double normalization(const Exponential& k) { return 0.5 / k.scale; }
    static double normalization(const Gaussian& k) { return 1.0 / (k.scale * std::sqrt(std::numbers::pi)); }
    static double normalization(const InvertedMexicanHat&) { return 1.0 / std::numbers::pi; }
    static double normalization(const Logistic& k) {
        const double s = std::numbers::pi / k.b;
        return 1.0 / (2.0 * k.a * s / std::sin(s));
    }
    static double normalization(const PowerLaw& k) { return (k.p - 1.0) / (2.0 * k.a); }

    [[nodiscard]] double eval(const Exponential& k, double r) const { return normalization_ * std::exp(-r / k.scale); }
    [[nodiscard]] double eval(const Gaussian& k, double r) const {
        const double z = r / k.scale;
        return normalization_ * std::exp(-z * z);
    }
    [[nodiscard]] double eval(const InvertedMexicanHat& k, double r) const {
        const double r2 = r * r;
        return normalization_ * (k.B * std::exp(-r2 / (k.b * k.b)) - k.A * std::exp(-r2 / (k.a * k.a)));
    }
    [[nodiscard]] double eval(const Logistic& k, double r) const {
        return normalization_ / (1.0 + std::pow(r / k.a, k.b));
    }
    [[nodiscard]] double eval(const PowerLaw& k, double r) const {
        return normalization_ * std::pow(1.0 + r / k.a, -k.p);
    }

    [[nodiscard]] double tail(const Exponential& k, double R, int moment) const {
        const double s = k.scale;
        const double e = std::exp(-R / s);
        return moment == 0 ? e : e * (R * R + 2.0 * R * s + 2.0 * s * s);
    }
    static double gaussian_tail(double amplitude, double s, double R, int moment) {
        // amplitude * 2 int_R^inf x^m exp(-x^2/s^2) dx
        const double sp = std::sqrt(std::numbers::pi);
        const double m0 = s * sp * std::erfc(R / s);
        if (moment == 0) return amplitude * m0;
        return amplitude * (0.5 * s * s * m0 + s * s * R * std::exp(-R * R / (s * s)));
    }
    [[nodiscard]] double tail(const Gaussian& k, double R, int moment) const {
        return gaussian_tail(normalization_, k.scale, R, moment);
    }
    [[nodiscard]] double tail(const InvertedMexicanHat& k, double R, int moment) const {
        return gaussian_tail(normalization_ * k.B, k.b, R, moment) + gaussian_tail(normalization_ * k.A, k.a, R, moment);
    }
    [[nodiscard]] double tail(const Logistic& k, double R, int moment) const {
        // (1 + (x/a)^b)^{-1} <= (x/a)^{-b}
        const double ab = std::pow(k.a, k.b);
        if (moment == 0) return normalization_ * 2.0 * ab * std::pow(R, 1.0 - k.b) / (k.b - 1.0);
        return normalization_ * 2.0 * ab * std::pow(R, 3.0 - k.b) / (k.b - 3.0);
    }
    [[nodiscard]] double tail(const PowerLaw& k, double R, int moment) const {
        const double z = 1.0 + R / k.a;
        if (moment == 0) return normalization_ * 2.0 * k.a * std::pow(z, 1.0 - k.p) / (k.p - 1.0);
        // x^2 <= a^2 (1 + x/a)^2
        return normalization_ * 2.0 * k.a * k.a * k.a * std::pow(z, 3.0 - k.p) / (k.p - 3.0);
    }

    [[nodiscard]] double radius(const Exponential& k, double tol) const { return k.scale * std::log(1.0 / tol); }
    [[nodiscard]] double radius(const Gaussian& k, double tol) const {
        return k.scale * std::sqrt(std::log(1.0 / tol)) + 2.0;
    }
    template <class K>
    [[nodiscard]] double radius(const K& k, double tol) const {
        return solve_tail(k, tol, 0);
    }

    template <class K>
    [[nodiscard]] double solve_tail(const K& k, double tol, int moment) const {
        double hi = width();
        while (tail(k, hi, moment) > tol) {
            hi *= 2.0;
            if (!std::isfinite(hi)) throw TailBoundUnavailable("kernel tail bound does not reach tolerance");
        }
        double lo = 0.0;
        for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
            const double mid = 0.5 * (lo + hi);
            (tail(k, mid, moment) > tol ? lo : hi) = mid;
        }
        return hi;
    }

    Variant variant_;
    double normalization_ = 1.0;
};

/// Quadrature-based mass, second moment and sign information for a kernel.
inline KernelDiagnostics diagnostics(const Kernel& kernel, double quad_tol) {
    if (!(quad_tol > 0.0)) throw InvalidParameter("quad_tol must be positive");
    KernelDiagnostics d;
    // Each tail contributes at most quad_tol / 4; quadrature error gets the rest.
    const double R = kernel.moment_truncation_radius(0.25 * quad_tol);
    d.truncation_radius = R;

    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double split = std::min(R, 20.0 * kernel.width());
    const double rel = 1e-13;
    auto half_integral = [&](auto&& weight) {
        double s = GK::integrate([&](double x) { return weight(x) * kernel(x); }, 0.0, split, 20, rel);
        if (R > split) {
            // log-mapped far field for slowly decaying tails
            const double l0 = std::log(split);
            const double l1 = std::log(R);
            s += GK::integrate(
                [&](double t) {
                    const double x = std::exp(t);
                    return weight(x) * kernel(x) * x;
                },
                l0, l1, 20, rel);
        }
        return 2.0 * s;
    };
    d.total_mass = half_integral([](double) { return 1.0; });
    d.second_moment = half_integral([](double x) { return x * x; });

    constexpr int kSamples = 4000;
    const double sample_end = 20.0 * kernel.width();
    double min_v = std::numeric_limits<double>::infinity();
    bool pos = false;
    bool neg = false;
    for (int i = 0; i <= kSamples; ++i) {
        const double v = kernel(sample_end * i / kSamples);
        min_v = std::min(min_v, v);
        pos = pos || v > 0.0;
        neg = neg || v < 0.0;
    }
    d.min_value_sampled = min_v;
    d.is_sign_changing = pos && neg;
    return d;
}

} // namespace nlmp
