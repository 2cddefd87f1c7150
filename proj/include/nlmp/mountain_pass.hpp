#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlmp/assembly.hpp"
#include "nlmp/energy.hpp"
#include "nlmp/error.hpp"

namespace nlmp {

/// Inner product defining the descent direction b: B[b, v] = I'[w] v.
/// `nonlocal` uses the energy form itself; `h1` uses (b, v)_{H1(Omega)}.
enum class DescentMetric { nonlocal, h1 };

inline const char* to_string(DescentMetric m) { return m == DescentMetric::nonlocal ? "nonlocal" : "h1"; }

struct SolverConfig {
    double epsilon = 1e-3;   // stop when ||b||_{H1(Omega)} <= epsilon
    double delta = 1.0;      // initial step length of each backtracking
    int max_iterations = 10000;
    int max_halvings = 60;
    /// Relative shift eta = grounding * trace(B) / n added as eta * M for Neumann forms.
    double grounding = 1e-10;
    /// Verify descent, energy decrease and ray stationarity at every iteration.
    bool check_invariants = false;
    DescentMetric metric = DescentMetric::nonlocal;
};

struct IterationRecord {
    int iteration = 0;
    double energy = 0.0;        // I[w] after the update
    double grad_norm_h1 = 0.0;  // ||b||_{H1(Omega)} of the direction used
    double t_star = 0.0;
    int halvings_used = 0;
    double descent_slope = 0.0; // I'[w] v1 before the step
};

struct SolveResult {
    Eigen::VectorXd solution;
    Eigen::VectorXd initial;  // t*(u1) u1
    bool converged = false;
    double final_grad_norm_h1 = 0.0;
    std::vector<IterationRecord> records;
    std::chrono::duration<double> wall_time{0.0};

    [[nodiscard]] int iterations() const noexcept { return static_cast<int>(records.size()); }
};

/// Raised when backtracking exhausts max_halvings without decreasing the energy.
class StallError : public Error {
public:
    StallError(const std::string& what, SolveResult partial) : Error(what), partial_(std::move(partial)) {}
    [[nodiscard]] const SolveResult& partial() const noexcept { return partial_; }

private:
    SolveResult partial_;
};

class MaxIterations : public Error {
public:
    MaxIterations(const std::string& what, SolveResult partial) : Error(what), partial_(std::move(partial)) {}
    [[nodiscard]] const SolveResult& partial() const noexcept { return partial_; }

private:
    SolveResult partial_;
};

struct DescentDirection {
    Eigen::VectorXd g;   // gradient coefficients
    Eigen::VectorXd b;   // B b = g
    Eigen::VectorXd v1;  // -b / ||b||_{H1}
    double b_h1 = 0.0;
};

/// Cholesky factorization of the (grounded) descent system, reused across iterations.
class DescentSystem {
public:
    DescentSystem(const NonlocalForm& form, double grounding, DescentMetric metric = DescentMetric::nonlocal)
        : form_(&form) {
        h1_ = form.omega_mass + form.omega_stiffness;
        Eigen::MatrixXd A = metric == DescentMetric::nonlocal ? form.B : h1_;
        if (metric == DescentMetric::nonlocal && form.constraint == Constraint::neumann && grounding > 0.0) {
            eta_ = grounding * form.B.trace() / static_cast<double>(form.B.rows());
            A += eta_ * form.omega_mass;
        }
        llt_.compute(A);
        if (llt_.info() != Eigen::Success) throw SingularSystem("descent system is not positive definite");
    }

    [[nodiscard]] double shift() const noexcept { return eta_; }

    [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }

    [[nodiscard]] double h1_norm(const Eigen::VectorXd& v) const { return std::sqrt(std::max(v.dot(h1_ * v), 0.0)); }

    [[nodiscard]] DescentDirection direction(const Nonlinearity& nl, const Eigen::VectorXd& w) const {
        DescentDirection d;
        d.g = gradient(*form_, nl, w);
        if (d.g.lpNorm<Eigen::Infinity>() == 0.0) throw ZeroGradient("energy gradient vanishes; iterate is critical");
        d.b = solve(d.g);
        d.b_h1 = h1_norm(d.b);
        d.v1 = -d.b / d.b_h1;
        return d;
    }

private:
    const NonlocalForm* form_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::MatrixXd h1_;
    double eta_ = 0.0;
};

/// Solves B b = I'[w] and normalizes v1 = -b / ||b||_{H1(Omega)}.
inline DescentDirection descent_direction(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& w,
                                          double grounding = SolverConfig{}.grounding) {
    return DescentSystem(form, grounding).direction(nl, w);
}

using IterationObserver = std::function<void(const IterationRecord&)>;

/// Mountain-pass descent: rescale onto the ray maximum, then repeat
/// { stop if ||b||_H1 <= eps; step along v1 with halving until the ray-maximal
///   energy decreases; rescale } until converged.
inline SolveResult solve(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& u1,
                         const SolverConfig& cfg, const IterationObserver& observer = {}) {
    if (!(cfg.epsilon > 0.0) || !(cfg.delta > 0.0)) throw InvalidParameter("epsilon and delta must be positive");
    if (u1.size() != form.n_unknowns) throw InvalidParameter("initial guess does not match the unknowns");
    if (u1.lpNorm<Eigen::Infinity>() == 0.0) throw InvalidParameter("initial guess must be nonzero");
    const auto start = std::chrono::steady_clock::now();

    const DescentSystem system(form, cfg.grounding, cfg.metric);
    SolveResult result;
    Eigen::VectorXd w = t_star(form, nl, u1) * u1;
    result.initial = w;
    double energy_w = energy(form, nl, w);

    auto ray_stationarity = [&](const Eigen::VectorXd& v) {
        // d/dt I[t v] at t = 1 relative to B[v, v]
        const double Bvv = v.dot(form.B * v);
        return std::abs(gradient(form, nl, v).dot(v)) / std::max(Bvv, std::numeric_limits<double>::min());
    };
    auto finish = [&](bool converged) {
        result.solution = w;
        result.converged = converged;
        result.wall_time = std::chrono::steady_clock::now() - start;
    };

    for (int it = 1;; ++it) {
        DescentDirection d;
        try {
            d = system.direction(nl, w);
        } catch (const ZeroGradient&) {
            result.final_grad_norm_h1 = 0.0;
            finish(true);
            return result;
        }
        result.final_grad_norm_h1 = d.b_h1;
        if (d.b_h1 <= cfg.epsilon) {
            finish(true);
            return result;
        }
        if (it > cfg.max_iterations) {
            finish(false);
            throw MaxIterations("iteration budget exhausted", result);
        }
        const double slope = d.g.dot(d.v1);
        if (cfg.check_invariants && !(slope < 0.0))
            throw InvariantViolation("descent direction is not a descent direction");

        double step = cfg.delta;
        int halvings = 0;
        Eigen::VectorXd trial;
        double t = 0.0;
        double trial_energy = 0.0;
        for (;;) {
            trial = w + step * d.v1;
            bool accepted = false;
            try {
                t = t_star(form, nl, trial);
                trial_energy = energy(form, nl, t * trial);
                accepted = trial_energy < energy_w;
            } catch (const ZeroDirection&) {
                accepted = false;
            }
            if (accepted) break;
            if (++halvings > cfg.max_halvings) {
                finish(false);
                throw StallError("backtracking exhausted " + std::to_string(cfg.max_halvings) +
                                     " halvings without energy decrease",
                                 result);
            }
            step *= 0.5;
        }

        w = t * trial;
        if (cfg.check_invariants) {
            if (!(trial_energy < energy_w)) throw InvariantViolation("energy did not decrease");
            if (ray_stationarity(w) > 1e-6) throw InvariantViolation("iterate is not at its ray maximum");
        }
        energy_w = trial_energy;
        IterationRecord rec{it, energy_w, d.b_h1, t, halvings, slope};
        result.records.push_back(rec);
        if (observer) observer(rec);
    }
}

} // namespace nlmp
