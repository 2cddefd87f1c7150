#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlmp/assembly.hpp"
#include "nlmp/error.hpp"
#include "nlmp/quadrature.hpp"

namespace nlmp {

enum class NonlinearityKind { cubic, quintic, cubic_minus_linear, allen_cahn };

/// Growth/limit constants of a nonlinearity and which standing hypotheses hold:
/// A2 |f| <= a1 + a2 |t|^alpha, A3 f(t)/t -> 0 at 0, A4 the scaling condition
/// with mu in (mu_min, mu_max) and theta, A5 f(t)/t -> +-inf at infinity.
struct HypothesisMeta {
    double a1 = 0.0;  // any positive value works when a1_any
    bool a1_any = false;
    double a2 = 0.0;
    double alpha = 0.0;
    double mu_min = 0.0;
    double mu_max = 0.0;
    double theta = 1.0;
    bool growth = false;         // A2
    bool vanishing_slope = false;// A3
    bool scaling = false;        // A4
    bool superlinear = false;    // A5
};

/// Polynomial nonlinearity f(t) = sum_k c_k t^k (x-independent).
class Nonlinearity {
public:
    static constexpr int kMaxDegree = 5;

    explicit Nonlinearity(NonlinearityKind kind = NonlinearityKind::cubic) : kind_(kind) {
        coeffs_.fill(0.0);
        switch (kind) {
        case NonlinearityKind::cubic: coeffs_[3] = 1.0; break;
        case NonlinearityKind::quintic: coeffs_[5] = 1.0; break;
        case NonlinearityKind::cubic_minus_linear:
            coeffs_[3] = 1.0;
            coeffs_[1] = -1.0;
            break;
        case NonlinearityKind::allen_cahn:
            coeffs_[1] = -0.5;
            coeffs_[2] = -1.5;
            coeffs_[3] = 2.0;
            break;
        }
    }

    static Nonlinearity from_name(const std::string& name) {
        if (name == "cubic") return Nonlinearity(NonlinearityKind::cubic);
        if (name == "quintic") return Nonlinearity(NonlinearityKind::quintic);
        if (name == "cubic_minus_linear") return Nonlinearity(NonlinearityKind::cubic_minus_linear);
        if (name == "allen_cahn") return Nonlinearity(NonlinearityKind::allen_cahn);
        throw InvalidParameter("unknown nonlinearity '" + name + "'");
    }

    [[nodiscard]] NonlinearityKind kind() const noexcept { return kind_; }

    [[nodiscard]] std::string name() const {
        switch (kind_) {
        case NonlinearityKind::cubic: return "cubic";
        case NonlinearityKind::quintic: return "quintic";
        case NonlinearityKind::cubic_minus_linear: return "cubic_minus_linear";
        case NonlinearityKind::allen_cahn: return "allen_cahn";
        }
        return {};
    }

    /// Coefficient of t^k in f.
    [[nodiscard]] double coefficient(int k) const { return coeffs_.at(k); }

    [[nodiscard]] double f(double t) const {
        double r = 0.0;
        for (int k = kMaxDegree; k >= 0; --k) r = r * t + coeffs_[k];
        return r;
    }

    /// Antiderivative with F(0) = 0.
    [[nodiscard]] double F(double t) const {
        double r = 0.0;
        for (int k = kMaxDegree; k >= 0; --k) r = r * t + coeffs_[k] / (k + 1);
        return r * t;
    }

    [[nodiscard]] HypothesisMeta meta() const {
        HypothesisMeta m;
        switch (kind_) {
        case NonlinearityKind::cubic:
            m = {.a1 = 1.0, .a1_any = true, .a2 = 1.0, .alpha = 3.0, .mu_min = 2.0, .mu_max = 4.0, .theta = 1.0,
                 .growth = true, .vanishing_slope = true, .scaling = true, .superlinear = true};
            break;
        case NonlinearityKind::quintic:
            m = {.a1 = 1.0, .a1_any = false, .a2 = 1.0, .alpha = 5.0, .mu_min = 2.0, .mu_max = 6.0, .theta = 1.0,
                 .growth = true, .vanishing_slope = true, .scaling = true, .superlinear = true};
            break;
        case NonlinearityKind::cubic_minus_linear:
            m = {.a1 = 1.0, .a1_any = false, .a2 = 2.0, .alpha = 3.0, .mu_min = 2.0, .mu_max = 4.0, .theta = 1.0,
                 .growth = true, .vanishing_slope = false, .scaling = true, .superlinear = true};
            break;
        case NonlinearityKind::allen_cahn:
            // growth holds with a1 = 1, a2 = 4, alpha = 3 since |f| <= 1 + 4|t|^3
            m = {.a1 = 1.0, .a1_any = false, .a2 = 4.0, .alpha = 3.0, .mu_min = 0.0, .mu_max = 0.0, .theta = 1.0,
                 .growth = true, .vanishing_slope = false, .scaling = false, .superlinear = true};
            break;
        }
        return m;
    }

private:
    NonlinearityKind kind_;
    std::array<double, kMaxDegree + 1> coeffs_{};
};

// Integrals over Omega use 4-point Gauss per element applied to the P1
// interpolant; exact for the polynomial degrees that occur here.
inline constexpr int kElementQuadOrder = 4;

/// Calls visit(e, weight, xi, value) at each Gauss point of each Omega element.
template <class Visit>
void for_each_omega_point(const NonlocalForm& form, const Eigen::VectorXd& u, Visit&& visit) {
    const quad::Rule& rule = quad::gauss_legendre(kElementQuadOrder);
    const Mesh& m = form.mesh;
    for (int e = m.omega_first; e < m.omega_last; ++e) {
        const auto& d = form.element_dofs[e];
        const double ua = d[0] < 0 ? 0.0 : u[d[0]];
        const double ub = d[1] < 0 ? 0.0 : u[d[1]];
        for (int q = 0; q < rule.size(); ++q) {
            const double xi = rule.points[q];
            visit(e, rule.weights[q] * m.h, xi, ua * (1.0 - xi) + ub * xi);
        }
    }
}

/// int_Omega u_h^k.
inline double omega_power_integral(const NonlocalForm& form, const Eigen::VectorXd& u, int k) {
    double s = 0.0;
    for_each_omega_point(form, u, [&](int, double w, double, double v) { s += w * std::pow(v, k); });
    return s;
}

/// I[u] = 1/2 B[u,u] - int_Omega F(u).
inline double energy(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& u) {
    double nonlinear = 0.0;
    for_each_omega_point(form, u, [&](int, double w, double, double v) { nonlinear += w * nl.F(v); });
    return 0.5 * u.dot(form.B * u) - nonlinear;
}

/// load_i = int_Omega f(w_h) phi_i.
inline Eigen::VectorXd load_vector(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& w) {
    Eigen::VectorXd load = Eigen::VectorXd::Zero(form.n_unknowns);
    for_each_omega_point(form, w, [&](int e, double wt, double xi, double v) {
        const double fv = wt * nl.f(v);
        const auto& d = form.element_dofs[e];
        if (d[0] >= 0) load[d[0]] += fv * (1.0 - xi);
        if (d[1] >= 0) load[d[1]] += fv * xi;
    });
    return load;
}

/// Coefficients g with I'[w] v = g^T v for every discrete v.
inline Eigen::VectorXd gradient(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& w) {
    return form.B * w - load_vector(form, nl, w);
}

/// I[t u] as a polynomial in t (degree <= kMaxDegree + 1).
struct RayPolynomial {
    std::array<double, Nonlinearity::kMaxDegree + 2> c{};

    [[nodiscard]] double operator()(double t) const {
        double r = 0.0;
        for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) r = r * t + c[k];
        return r;
    }

    [[nodiscard]] double derivative(double t) const {
        double r = 0.0;
        for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) r = r * t + k * c[k];
        return r;
    }
};

inline RayPolynomial ray_polynomial(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& u) {
    RayPolynomial p;
    p.c[2] = 0.5 * u.dot(form.B * u);
    std::array<double, Nonlinearity::kMaxDegree + 2> powers{};
    for_each_omega_point(form, u, [&](int, double w, double, double v) {
        double vk = v;
        for (int k = 1; k <= Nonlinearity::kMaxDegree + 1; ++k) {
            powers[k] += w * vk;
            vk *= v;
        }
    });
    for (int k = 0; k <= Nonlinearity::kMaxDegree; ++k)
        p.c[k + 1] -= nl.coefficient(k) / (k + 1) * powers[k + 1];
    return p;
}

namespace detail {

// Dense grid search for the maximizer of g on (0, t_max], refined by golden section.
inline double grid_argmax(const RayPolynomial& g, double t_max, int samples = 20000) {
    double best_t = t_max / samples;
    double best = g(best_t);
    for (int i = 2; i <= samples; ++i) {
        const double t = t_max * i / samples;
        if (const double v = g(t); v >= best) {
            best = v;
            best_t = t;
        }
    }
    double lo = std::max(best_t - t_max / samples, 0.0);
    double hi = std::min(best_t + t_max / samples, t_max);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double a = hi - phi * (hi - lo);
        const double b = lo + phi * (hi - lo);
        (g(a) < g(b) ? lo : hi) = (g(a) < g(b) ? a : b);
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Positive maximizer of t -> I[t u].
inline double t_star(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& u) {
    const double Buu = u.dot(form.B * u);
    if (!(Buu > 0.0) || u.size() == 0) throw ZeroDirection("B[u,u] must be positive for the ray maximizer");
    auto positive = [](double d) {
        if (!(d > 0.0) || !std::isfinite(d)) throw ZeroDirection("ray maximizer denominator vanishes");
        return d;
    };
    switch (nl.kind()) {
    case NonlinearityKind::cubic: return std::sqrt(Buu / positive(omega_power_integral(form, u, 4)));
    case NonlinearityKind::quintic: return std::pow(Buu / positive(omega_power_integral(form, u, 6)), 0.25);
    case NonlinearityKind::cubic_minus_linear:
        return std::sqrt((Buu + omega_power_integral(form, u, 2)) / positive(omega_power_integral(form, u, 4)));
    case NonlinearityKind::allen_cahn: break;
    }

    // g(t) = c2 t^2 + c3 t^3 + c4 t^4, g'(t) = t (2 c2 + 3 c3 t + 4 c4 t^2).
    const RayPolynomial g = ray_polynomial(form, nl, u);
    const double c2 = g.c[2];
    const double c3 = g.c[3];
    const double c4 = g.c[4];
    if (!(c4 < 0.0)) throw ZeroDirection("quartic term of the ray energy must be negative");
    std::vector<double> roots;
    const double qa = 4.0 * c4;
    const double qb = 3.0 * c3;
    const double qc = 2.0 * c2;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
        // numerically stable quadratic roots
        const double s = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
        if (s != 0.0) {
            roots.push_back(s / qa);
            roots.push_back(qc / s);
        } else {
            roots.push_back(0.0);
        }
    }
    double best_t = -1.0;
    double best = 0.0;
    for (double t : roots) {
        if (!(t > 0.0)) continue;
        // one Newton polish on the quadratic factor
        if (const double dp = 2.0 * qa * t + qb; dp != 0.0) t -= (qa * t * t + qb * t + qc) / dp;
        const double v = g(t);
        if (v > 0.0 && (v > best || (v == best && t > best_t))) {
            best = v;
            best_t = t;
        }
    }
    if (best_t > 0.0) return best_t;

    // No positive critical point with positive energy: dense search up to where g turns negative.
    double t_max = 1.0;
    while (g(t_max) > 0.0 || g.derivative(t_max) > 0.0) {
        t_max *= 2.0;
        if (t_max > 1e12) throw ZeroDirection("ray energy has no maximizer");
    }
    return detail::grid_argmax(g, t_max);
}

} // namespace nlmp
