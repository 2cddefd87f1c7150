#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "nlmp/config.hpp"
#include "nlmp/verify.hpp"

using namespace nlmp;

namespace {

constexpr double kPi = std::numbers::pi;

struct Solved {
    NonlocalForm form;
    SolveResult result;
};

Solved solve_case1(double epsilon = 1e-3) {
    Solved s{assemble_dirichlet(build_mesh(-kPi, kPi, 0.314), Exponential{1.0}), {}};
    SolverConfig cfg;
    cfg.epsilon = epsilon;
    s.result = solve(s.form, Nonlinearity(), s.form.sample([](double x) { return std::sin(x); }), cfg);
    return s;
}

} // namespace

TEST(Residual, ZeroFunction) {
    const NonlocalForm f = assemble_dirichlet(build_mesh(-kPi, kPi, 0.314), Exponential{1.0});
    const ResidualNorms r = residual_norms(f, Nonlinearity(), Eigen::VectorXd::Zero(f.n_unknowns));
    EXPECT_EQ(r.l1, 0.0);
    EXPECT_EQ(r.l2, 0.0);
}

TEST(Residual, MatchesPointwiseOracle) {
    // -L u - u^3 for u = const 1 on a broken space is e^{-dist} terms minus 1
    const NonlocalForm f = assemble_dirichlet(build_mesh(0.0, 3.0, 0.15), Exponential{1.0}, 4, Coupling::broken);
    const ResidualNorms r = residual_norms(f, Nonlinearity(), Eigen::VectorXd::Ones(f.n_unknowns));
    // int_0^3 |0.5 (e^{-x} + e^{-(3-x)}) - 1| dx = 3 - (1 - e^{-3})
    EXPECT_NEAR(r.l1, 3.0 - (1.0 - std::exp(-3.0)), 1e-9);
}

TEST(Reference, SameSpaceMeasuresDescentStep) {
    const Solved s = solve_case1();
    const ReferenceErrors e = reference_errors(s.form, Nonlinearity(), s.result.solution, {ReferenceMode::same, 1});
    EXPECT_LE(e.l2, s.result.final_grad_norm_h1 * (1 + 1e-8));
    EXPECT_LE(e.solve_residual, 1e-10);
}

TEST(Reference, RefinementOneIsSameSpace) {
    const Solved s = solve_case1();
    const ReferenceErrors same = reference_errors(s.form, Nonlinearity(), s.result.solution, {ReferenceMode::same, 1});
    const ReferenceErrors ref1 = reference_errors(s.form, Nonlinearity(), s.result.solution, {ReferenceMode::refined, 1});
    EXPECT_NEAR(ref1.l1, same.l1, 1e-10);
    EXPECT_NEAR(ref1.l2, same.l2, 1e-10);
}

TEST(Reference, RefinedSolveCertificate) {
    const Solved s = solve_case1();
    for (int k : {2, 4}) {
        const ReferenceErrors e = reference_errors(s.form, Nonlinearity(), s.result.solution, {ReferenceMode::refined, k});
        EXPECT_LE(e.solve_residual, 1e-10);
        EXPECT_GT(e.l1, 0.0);
    }
    EXPECT_THROW(refined_form(s.form, 0), InvalidParameter);
}

TEST(Reference, BrokenSpaceShape) {
    const Solved s = solve_case1();
    const ReferenceErrors e = reference_errors(s.form, Nonlinearity(), s.result.solution, {ReferenceMode::broken, 1});
    EXPECT_EQ(e.u_bar.size(), s.form.n_unknowns + 2);
    EXPECT_LE(e.solve_residual, 1e-10);
}

TEST(Reference, ModeNames) {
    for (ReferenceMode m : {ReferenceMode::same, ReferenceMode::broken, ReferenceMode::refined})
        EXPECT_EQ(reference_mode_from_name(to_string(m)), m);
}

TEST(Abs, LinearIntegral) {
    EXPECT_DOUBLE_EQ(detail::abs_linear_integral(1.0, 3.0), 2.0);
    EXPECT_DOUBLE_EQ(detail::abs_linear_integral(-1.0, 1.0), 0.5);
    EXPECT_DOUBLE_EQ(detail::abs_linear_integral(-2.0, 0.0), 1.0);
}

TEST(Fit, ExactPowerLaw) {
    const std::vector<double> h{0.4, 0.2, 0.1, 0.05};
    std::vector<double> v;
    for (double x : h) v.push_back(3.0 * std::pow(x, 1.5));
    const OrderFit f = fit_order(h, v);
    EXPECT_TRUE(f.valid);
    EXPECT_EQ(f.rows_used, 4);
    EXPECT_NEAR(f.slope, 1.5, 1e-12);
}

TEST(Fit, SkipsNonPositiveAndNeedsThreeRows) {
    const OrderFit f = fit_order({0.4, 0.2, 0.1}, {1.0, 0.0, 0.25});
    EXPECT_EQ(f.rows_used, 2);
    EXPECT_FALSE(f.valid);
    EXPECT_NEAR(f.slope, 1.0, 1e-12);
}

TEST(Study, ExcludesTrivialAndFailedRows) {
    StudyResult s;
    for (int i = 0; i < 5; ++i) {
        CaseReport r;
        r.h = 0.4 / (1 << i);
        r.R_L1 = r.R_L2 = r.E_L1 = r.E_L2 = r.h;
        r.converged = true;
        s.rows.push_back(r);
    }
    s.rows[3].trivial = true;
    s.rows[3].R_L1 = 100.0;
    s.rows[4].failed = true;
    s.rows[4].converged = false;
    fit_study(s);
    EXPECT_EQ(s.excluded, (std::vector<int>{3, 4}));
    EXPECT_NEAR(s.R_L1.slope, 1.0, 1e-12);
    EXPECT_EQ(s.R_L1.rows_used, 3);
}

TEST(Study, NeedsThreeResolutions) {
    EXPECT_THROW(convergence_study(CaseSpec{}, {{0.314, 0}, {0.157, 0}}), InvalidParameter);
}

TEST(Study, ParallelMatchesSerial) {
    const std::vector<Resolution> res{{0.0, 20}, {0.0, 24}, {0.0, 28}};
    const StudyResult a = convergence_study(CaseSpec{}, res, 1);
    const StudyResult b = convergence_study(CaseSpec{}, res, 3);
    for (std::size_t i = 0; i < res.size(); ++i) {
        EXPECT_EQ(a.rows[i].n_dof, b.rows[i].n_dof);
        EXPECT_EQ(a.rows[i].R_L1, b.rows[i].R_L1);
        EXPECT_EQ(a.rows[i].iterations, b.rows[i].iterations);
    }
}

TEST(Study, MonotoneRefinementForCasesOneAndFive) {
    for (const char* name : {"case1", "case5"}) {
        const RunConfig cfg = preset_config(name);
        const StudyResult study = convergence_study(cfg.spec, cfg.resolutions);
        ASSERT_TRUE(study.excluded.empty()) << name;
        for (std::size_t i = 1; i < study.rows.size(); ++i) {
            EXPECT_LT(study.rows[i].R_L1, study.rows[i - 1].R_L1) << name << " row " << i;
            EXPECT_LT(study.rows[i].E_L1, study.rows[i - 1].E_L1) << name << " row " << i;
        }
    }
}

TEST(Pipeline, CaseOneRow) {
    const CaseRun run = run_case(CaseSpec{}, {0.314, 0});
    const CaseReport& r = run.report;
    EXPECT_EQ(r.n_dof, 20);
    EXPECT_EQ(r.n_unknowns, 19);
    EXPECT_TRUE(r.converged);
    EXPECT_FALSE(r.trivial);
    EXPECT_FALSE(r.failed);
    EXPECT_GT(r.R_L1, 0.0);
    EXPECT_GT(r.E_L1, 0.0);
    EXPECT_LE(r.reference_solve_residual, 1e-10);
    EXPECT_EQ(r.exterior_residual, 0.0);
}

TEST(Pipeline, TrivialFlagFollowsRatio) {
    CaseSpec spec;
    spec.trivial_ratio = 1e6;
    EXPECT_TRUE(run_case(spec, {0.314, 0}).report.trivial);
}

TEST(Pipeline, FailureIsReported) {
    CaseSpec spec;
    spec.solver.max_iterations = 2;
    const CaseReport r = run_case(spec, {0.314, 0}).report;
    EXPECT_TRUE(r.failed);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 2);
}

TEST(Pipeline, StepInitialGuess) {
    InitialGuess g;
    g.kind = InitialGuessKind::step;
    const auto f = g.function();
    EXPECT_EQ(f(0.99), 0.0);
    EXPECT_EQ(f(1.0), 1.0);
    EXPECT_EQ(f(1.95), 1.0);
    EXPECT_EQ(f(2.0), 0.0);
}

TEST(Pipeline, NeumannMeshExtension) {
    CaseSpec spec;
    spec.constraint = Constraint::neumann;
    spec.omega_left = 0.0;
    spec.omega_right = 3.0;
    const Mesh m = case_mesh(spec, {0.15, 0});
    EXPECT_DOUBLE_EQ(m.x_left, -1.5);
    EXPECT_DOUBLE_EQ(m.x_right, 4.5);
    EXPECT_EQ(m.n_elements, 40);
    EXPECT_NEAR(m.omega_left(), 0.0, 1e-12);
}

TEST(Output, ReportCsv) {
    CaseReport r;
    r.h = 0.314;
    r.n_dof = 20;
    r.R_L1 = 0.5;
    r.iterations = 13;
    std::ostringstream out;
    write_report_csv(out, {r});
    std::istringstream in(out.str());
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "h,n_dof,R_L1,R_L2,E_L1,E_L2,iterations,wall_time_s");
    EXPECT_EQ(row, "0.314,20,0.5,0,0,0,13,0");
}

TEST(Output, PlotData) {
    std::vector<CaseReport> rows(2);
    rows[0].h = 0.1;
    rows[0].R_L1 = rows[0].R_L2 = rows[0].E_L1 = rows[0].E_L2 = 0.01;
    rows[1].h = 0.01;
    rows[1].R_L1 = rows[1].R_L2 = rows[1].E_L1 = rows[1].E_L2 = 0.001;
    const std::string path = ::testing::TempDir() + "nlmp_plot.dat";
    write_plot_data(path, rows);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# R_L1");
    double x = 0, y = 0;
    in >> x >> y;
    EXPECT_NEAR(x, -1.0, 1e-12);
    EXPECT_NEAR(y, -2.0, 1e-12);
    std::remove(path.c_str());
}
