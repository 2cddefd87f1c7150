#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "nlmp/assembly.hpp"
#include "nlmp/energy.hpp"
#include "nlmp/mountain_pass.hpp"

namespace nlmp {

struct ResidualNorms {
    double l1 = 0.0;
    double l2 = 0.0;
};

/// L1/L2 norms over Omega of r = -L u - f(u), sampled at 4 Gauss points per element.
inline ResidualNorms residual_norms(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& u) {
    const Eigen::VectorXd all = form.all_dofs(u);
    ResidualNorms r;
    double l2sq = 0.0;
    const Mesh& m = form.mesh;
    for_each_omega_point(form, u, [&](int e, double w, double xi, double v) {
        const double x = m.nodes[e] + xi * m.h;
        const double res = apply_operator(form, all, x) - nl.f(v);
        r.l1 += w * std::abs(res);
        l2sq += w * res * res;
    });
    r.l2 = std::sqrt(l2sq);
    return r;
}

namespace detail {

// Exact integral of |a (1 - s) + b s| over s in [0, 1].
inline double abs_linear_integral(double a, double b) {
    if (a * b >= 0.0) return 0.5 * std::abs(a + b);
    return 0.5 * (a * a + b * b) / std::abs(a - b);
}

} // namespace detail

struct ReferenceErrors {
    double l1 = 0.0;
    double l2 = 0.0;
    Eigen::VectorXd u_bar;        // coefficients in the reference space
    double solve_residual = 0.0;  // ||B u_bar - load|| / ||load||
};

/// Solves the linear problem -L u_bar = f(u_star) in the space of `reference`
/// and measures u_star - u_bar over Omega. `reference` may equal `form` or be a
/// broken-at-boundary space on the same mesh and kernel.
inline ReferenceErrors reference_errors(const NonlocalForm& form, const NonlocalForm& reference, const Nonlinearity& nl,
                                        const Eigen::VectorXd& u_star, double grounding = SolverConfig{}.grounding) {
    const Mesh& m = form.mesh;
    if (reference.mesh.n_elements != m.n_elements || reference.mesh.omega_first != m.omega_first ||
        reference.mesh.omega_last != m.omega_last)
        throw InvalidParameter("reference space must share the mesh of the solve");

    // load against the reference test functions, f(u_star) from the solve space
    Eigen::VectorXd load = Eigen::VectorXd::Zero(reference.n_unknowns);
    for_each_omega_point(form, u_star, [&](int e, double w, double xi, double v) {
        const double fv = w * nl.f(v);
        const auto& d = reference.element_dofs[e];
        if (d[0] >= 0) load[d[0]] += fv * (1.0 - xi);
        if (d[1] >= 0) load[d[1]] += fv * xi;
    });

    const DescentSystem system(reference, grounding);
    ReferenceErrors out;
    out.u_bar = system.solve(load);
    const double ln = load.norm();
    out.solve_residual = ln > 0.0 ? (reference.B * out.u_bar - load).norm() / ln : (reference.B * out.u_bar).norm();

    const quad::Rule& rule = quad::gauss_legendre(kElementQuadOrder);
    double l2sq = 0.0;
    for (int e = m.omega_first; e < m.omega_last; ++e) {
        const auto& ds = form.element_dofs[e];
        const auto& dr = reference.element_dofs[e];
        const double a = (ds[0] < 0 ? 0.0 : u_star[ds[0]]) - (dr[0] < 0 ? 0.0 : out.u_bar[dr[0]]);
        const double b = (ds[1] < 0 ? 0.0 : u_star[ds[1]]) - (dr[1] < 0 ? 0.0 : out.u_bar[dr[1]]);
        out.l1 += m.h * detail::abs_linear_integral(a, b);
        for (int q = 0; q < rule.size(); ++q) {
            const double v = a * (1.0 - rule.points[q]) + b * rule.points[q];
            l2sq += m.h * rule.weights[q] * v * v;
        }
    }
    out.l2 = std::sqrt(l2sq);
    return out;
}

/// How the reference solution of the linear problem is discretized.
/// `same`: the solve space itself (u_star - u_bar is then the discrete descent solve b);
/// `broken`: the solve mesh with values at the ends of Omega decoupled from the exterior;
/// `refined`: continuous P1 on a mesh `refinement` times finer, approximating the exact u_bar.
enum class ReferenceMode { same, broken, refined };

inline std::string to_string(ReferenceMode m) {
    switch (m) {
    case ReferenceMode::same: return "same";
    case ReferenceMode::broken: return "broken";
    case ReferenceMode::refined: return "refined";
    }
    return "?";
}

inline ReferenceMode reference_mode_from_name(const std::string& s) {
    if (s == "same") return ReferenceMode::same;
    if (s == "broken") return ReferenceMode::broken;
    if (s == "refined") return ReferenceMode::refined;
    throw InvalidParameter("unknown reference mode '" + s + "'");
}

/// Same constraint, kernel and quadrature as `form` on a mesh with `factor` times the elements.
inline NonlocalForm refined_form(const NonlocalForm& form, int factor) {
    if (factor < 1) throw InvalidParameter("refinement factor must be at least 1");
    const Mesh& m = form.mesh;
    Mesh fine = with_omega(build_mesh_n(m.x_left, m.x_right, m.n_elements * factor), m.omega_left(), m.omega_right());
    if (form.constraint == Constraint::dirichlet) return assemble_dirichlet(fine, form.kernel, form.quad_order);
    return assemble_neumann(fine, form.kernel, form.quad_order, form.far_field);
}

/// u_bar on a refined mesh, with the load f(u_star) integrated on the fine elements.
inline ReferenceErrors reference_errors_refined(const NonlocalForm& form, const Nonlinearity& nl,
                                                const Eigen::VectorXd& u_star, int factor,
                                                double grounding = SolverConfig{}.grounding) {
    const NonlocalForm fine = refined_form(form, factor);
    const FeFunction coarse = form.to_fe_function(u_star);
    const Mesh& fm = fine.mesh;
    const quad::Rule& rule = quad::gauss_legendre(kElementQuadOrder);
    Eigen::VectorXd load = Eigen::VectorXd::Zero(fine.n_unknowns);
    for (int e = fm.omega_first; e < fm.omega_last; ++e) {
        const auto& d = fine.element_dofs[e];
        for (int q = 0; q < rule.size(); ++q) {
            const double xi = rule.points[q];
            const double fv = fm.h * rule.weights[q] * nl.f(coarse(fm.nodes[e] + xi * fm.h));
            if (d[0] >= 0) load[d[0]] += fv * (1.0 - xi);
            if (d[1] >= 0) load[d[1]] += fv * xi;
        }
    }
    const DescentSystem system(fine, grounding);
    ReferenceErrors out;
    out.u_bar = system.solve(load);
    const double ln = load.norm();
    out.solve_residual = ln > 0.0 ? (fine.B * out.u_bar - load).norm() / ln : (fine.B * out.u_bar).norm();

    // u_star is linear on every fine element, so the difference is too
    const Eigen::VectorXd all = fine.all_dofs(out.u_bar);
    double l2sq = 0.0;
    for (int e = fm.omega_first; e < fm.omega_last; ++e) {
        const auto ub = fine.element_values(e, all);
        const double a = coarse(fm.nodes[e]) - ub[0];
        const double b = coarse(fm.nodes[e + 1]) - ub[1];
        out.l1 += fm.h * detail::abs_linear_integral(a, b);
        l2sq += fm.h * (a * a + a * b + b * b) / 3.0;
    }
    out.l2 = std::sqrt(l2sq);
    return out;
}

struct ReferenceOptions {
    ReferenceMode mode = ReferenceMode::refined;
    int refinement = 4;
    double grounding = SolverConfig{}.grounding;
};

inline ReferenceErrors reference_errors(const NonlocalForm& form, const Nonlinearity& nl, const Eigen::VectorXd& u_star,
                                        const ReferenceOptions& opt) {
    switch (opt.mode) {
    case ReferenceMode::same: return reference_errors(form, form, nl, u_star, opt.grounding);
    case ReferenceMode::broken: {
        const NonlocalForm broken =
            form.constraint == Constraint::dirichlet
                ? assemble_dirichlet(form.mesh, form.kernel, form.quad_order, Coupling::broken)
                : assemble_neumann(form.mesh, form.kernel, form.quad_order, form.far_field, Coupling::broken);
        return reference_errors(form, broken, nl, u_star, opt.grounding);
    }
    case ReferenceMode::refined: return reference_errors_refined(form, nl, u_star, opt.refinement, opt.grounding);
    }
    throw InvalidParameter("unknown reference mode");
}

/// L2(Omega) norm of a coefficient vector of `form`.
inline double omega_l2(const NonlocalForm& form, const Eigen::VectorXd& u) {
    return std::sqrt(std::max(u.dot(form.omega_mass * u), 0.0));
}

// ---------------------------------------------------------------------------
// Case pipeline

enum class InitialGuessKind { sine, step, csv };

struct InitialGuess {
    InitialGuessKind kind = InitialGuessKind::sine;
    double step_left = 1.0;   // step: 1 on [step_left, step_right), 0 elsewhere
    double step_right = 2.0;
    std::string csv_path;

    [[nodiscard]] std::function<double(double)> function() const {
        switch (kind) {
        case InitialGuessKind::sine: return [](double x) { return std::sin(x); };
        case InitialGuessKind::step: {
            const double a = step_left;
            const double b = step_right;
            // nodes sit on a, b up to rounding
            const double tol = 1e-9 * std::max(1.0, std::abs(b - a));
            return [a, b, tol](double x) { return (x >= a - tol && x < b - tol) ? 1.0 : 0.0; };
        }
        case InitialGuessKind::csv: {
            auto pts = read_csv(csv_path);
            return [pts = std::move(pts)](double x) { return interpolate_samples(pts, x); };
        }
        }
        return {};
    }
};

/// Everything needed to run one configuration at any mesh size.
struct CaseSpec {
    std::string name = "custom";
    Constraint constraint = Constraint::dirichlet;
    double omega_left = -std::numbers::pi;
    double omega_right = std::numbers::pi;
    double extension = 1.5;  // Neumann margin on each side of Omega
    FarField far_field = FarField::zero;
    ReferenceOptions reference;
    Kernel kernel = Exponential{1.0};
    Nonlinearity nonlinearity{NonlinearityKind::cubic};
    InitialGuess initial_guess;
    SolverConfig solver;
    int quad_order = 4;
    double trivial_ratio = 1e-2;
};

/// Mesh resolution: either a target spacing or an exact element count of the computational mesh.
struct Resolution {
    double h = 0.0;
    int n_elements = 0;
};

struct CaseReport {
    double h = 0.0;      // actual mesh spacing
    int n_dof = 0;       // elements of the computational mesh
    int n_unknowns = 0;
    double R_L1 = 0.0;
    double R_L2 = 0.0;
    double E_L1 = 0.0;
    double E_L2 = 0.0;
    int iterations = 0;
    double wall_time_s = 0.0;
    bool converged = false;
    bool trivial = false;
    bool failed = false;
    std::string error;
    double initial_l2 = 0.0;   // ||t*(u1) u1||_{L2(Omega)}
    double solution_l2 = 0.0;  // ||u*||_{L2(Omega)}
    double exterior_residual = 0.0;
    double reference_solve_residual = 0.0;
};

inline Mesh case_mesh(const CaseSpec& spec, const Resolution& res) {
    double lo = spec.omega_left;
    double hi = spec.omega_right;
    if (spec.constraint == Constraint::neumann) {
        lo -= spec.extension;
        hi += spec.extension;
    }
    Mesh m = res.n_elements > 0 ? build_mesh_n(lo, hi, res.n_elements) : build_mesh(lo, hi, res.h);
    return with_omega(std::move(m), spec.omega_left, spec.omega_right);
}

inline NonlocalForm case_form(const CaseSpec& spec, const Mesh& mesh) {
    if (spec.constraint == Constraint::dirichlet) return assemble_dirichlet(mesh, spec.kernel, spec.quad_order);
    return assemble_neumann(mesh, spec.kernel, spec.quad_order, spec.far_field);
}

/// Output of one pipeline run: the report row plus the artifacts behind it.
struct CaseRun {
    CaseReport report;
    std::optional<NonlocalForm> form;
    std::optional<SolveResult> solve;
};

/// Assemble, solve, and verify one configuration at one resolution.
inline CaseRun run_case(const CaseSpec& spec, const Resolution& res, const IterationObserver& observer = {}) {
    CaseRun run;
    CaseReport& rep = run.report;
    const auto start = std::chrono::steady_clock::now();
    const Mesh mesh = case_mesh(spec, res);
    rep.h = mesh.h;
    rep.n_dof = mesh.n_elements;
    run.form = case_form(spec, mesh);
    const NonlocalForm& form = *run.form;
    rep.n_unknowns = form.n_unknowns;
    const Eigen::VectorXd u1 = form.sample(spec.initial_guess.function());
    try {
        run.solve = solve(form, spec.nonlinearity, u1, spec.solver, observer);
    } catch (const StallError& e) {
        rep.failed = true;
        rep.error = e.what();
        rep.iterations = e.partial().iterations();
    } catch (const MaxIterations& e) {
        rep.failed = true;
        rep.error = e.what();
        rep.iterations = e.partial().iterations();
    } catch (const Error& e) {
        rep.failed = true;
        rep.error = e.what();
    }
    if (run.solve) {
        const SolveResult& s = *run.solve;
        rep.converged = s.converged;
        rep.iterations = s.iterations();
        const ResidualNorms r = residual_norms(form, spec.nonlinearity, s.solution);
        rep.R_L1 = r.l1;
        rep.R_L2 = r.l2;
        ReferenceOptions ref = spec.reference;
        ref.grounding = spec.solver.grounding;
        const ReferenceErrors err = reference_errors(form, spec.nonlinearity, s.solution, ref);
        rep.E_L1 = err.l1;
        rep.E_L2 = err.l2;
        rep.reference_solve_residual = err.solve_residual;
        rep.initial_l2 = omega_l2(form, s.initial);
        rep.solution_l2 = omega_l2(form, s.solution);
        rep.trivial = rep.solution_l2 < spec.trivial_ratio * rep.initial_l2;
        rep.exterior_residual = exterior_constraint_residual(form, s.solution);
    }
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

struct OrderFit {
    double slope = 0.0;
    int rows_used = 0;
    bool valid = false;
};

/// Least-squares slope of log(value) against log(h).
inline OrderFit fit_order(const std::vector<double>& h, const std::vector<double>& values) {
    OrderFit fit;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(values[i] > 0.0)) continue;
        const double x = std::log(h[i]);
        const double y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    fit.rows_used = n;
    const double den = n * sxx - sx * sx;
    if (n >= 2 && den > 0.0) {
        fit.slope = (n * sxy - sx * sy) / den;
        fit.valid = n >= 3;
    }
    return fit;
}

struct StudyResult {
    std::vector<CaseReport> rows;
    OrderFit R_L1, R_L2, E_L1, E_L2;
    std::vector<int> excluded;  // failed or trivial rows left out of the fits
};

inline void fit_study(StudyResult& study) {
    std::vector<double> h, r1, r2, e1, e2;
    study.excluded.clear();
    for (std::size_t i = 0; i < study.rows.size(); ++i) {
        const CaseReport& r = study.rows[i];
        if (r.failed || r.trivial || !r.converged) {
            study.excluded.push_back(static_cast<int>(i));
            continue;
        }
        h.push_back(r.h);
        r1.push_back(r.R_L1);
        r2.push_back(r.R_L2);
        e1.push_back(r.E_L1);
        e2.push_back(r.E_L2);
    }
    study.R_L1 = fit_order(h, r1);
    study.R_L2 = fit_order(h, r2);
    study.E_L1 = fit_order(h, e1);
    study.E_L2 = fit_order(h, e2);
}

/// Runs every resolution (rows in parallel when jobs > 1) and fits convergence orders.
inline StudyResult convergence_study(const CaseSpec& spec, const std::vector<Resolution>& resolutions, int jobs = 1,
                                     const std::function<void(std::size_t, const CaseRun&)>& on_row = {}) {
    if (resolutions.size() < 3) throw InvalidParameter("a convergence study needs at least three resolutions");
    StudyResult study;
    study.rows.resize(resolutions.size());
    std::vector<std::optional<CaseRun>> runs(resolutions.size());
    auto work = [&](std::size_t i) {
        try {
            runs[i] = run_case(spec, resolutions[i]);
        } catch (const Error& e) {
            CaseRun failed;
            failed.report.failed = true;
            failed.report.error = e.what();
            failed.report.h = resolutions[i].h;
            runs[i] = std::move(failed);
        }
    };
    jobs = std::max(1, jobs);
    if (jobs == 1) {
        for (std::size_t i = 0; i < resolutions.size(); ++i) work(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < resolutions.size(); i = next++) work(i);
            });
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        study.rows[i] = runs[i]->report;
        if (on_row) on_row(i, *runs[i]);
    }
    fit_study(study);
    return study;
}

inline constexpr const char* kReportHeader = "h,n_dof,R_L1,R_L2,E_L1,E_L2,iterations,wall_time_s";

inline void write_report_csv(std::ostream& out, const std::vector<CaseReport>& rows) {
    out << kReportHeader << '\n';
    const auto old = out.precision(10);
    for (const CaseReport& r : rows)
        out << r.h << ',' << r.n_dof << ',' << r.R_L1 << ',' << r.R_L2 << ',' << r.E_L1 << ',' << r.E_L2 << ','
            << r.iterations << ',' << r.wall_time_s << '\n';
    out.precision(old);
}

inline void write_report_csv(const std::string& path, const std::vector<CaseReport>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_report_csv(out, rows);
}

/// gnuplot blocks, one per norm: "log10(h) log10(value)" lines separated by blank lines.
inline void write_plot_data(const std::string& path, const std::vector<CaseReport>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.precision(10);
    const std::pair<const char*, double CaseReport::*> cols[] = {
        {"R_L1", &CaseReport::R_L1}, {"R_L2", &CaseReport::R_L2}, {"E_L1", &CaseReport::E_L1}, {"E_L2", &CaseReport::E_L2}};
    for (const auto& [name, member] : cols) {
        out << "# " << name << "\n";
        for (const CaseReport& r : rows)
            if (!r.failed && r.*member > 0.0) out << std::log10(r.h) << ' ' << std::log10(r.*member) << '\n';
        out << "\n\n";
    }
}

} // namespace nlmp
