// Command-line driver: runs a bundled case or a config file, either as a single
// solve or as a convergence study over a mesh family.
//
// Exit codes: 0 converged, 2 trivial solution captured, 3 solver error, 4 config error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nlmp/nlmp.hpp"

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitTrivial = 2;
constexpr int kExitSolverError = 3;
constexpr int kExitConfigError = 4;

std::string with_suffix(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

void print_header(std::ostream& out, const nlmp::RunConfig& cfg) {
    std::istringstream text(nlmp::to_text(cfg));
    for (std::string line; std::getline(text, line);) out << "# " << line << '\n';
}

void write_log_row(std::ostream& out, const nlmp::IterationRecord& r) {
    out << r.iteration << ',' << r.energy << ',' << r.grad_norm_h1 << ',' << r.t_star << ',' << r.halvings_used << '\n';
}

constexpr const char* kLogHeader = "iteration,energy,grad_norm_h1,t_star,halvings";

void print_row(const nlmp::CaseReport& r) {
    std::printf("%-10.6g %6d %12.6g %12.6g %12.6g %12.6g %6d %9.3f  %s\n", r.h, r.n_dof, r.R_L1, r.R_L2, r.E_L1, r.E_L2,
                r.iterations, r.wall_time_s,
                r.failed ? ("failed: " + r.error).c_str() : (r.trivial ? "trivial" : (r.converged ? "ok" : "")));
}

void warn_extension(const nlmp::CaseSpec& s) {
    if (s.constraint != nlmp::Constraint::neumann) return;
    const double r = s.kernel.truncation_radius(1e-6);
    if (r > s.extension)
        std::cerr << "warning: neumann.extension " << s.extension << " is below the kernel truncation radius " << r
                  << " at tolerance 1e-6\n";
}

int exit_code(const std::vector<nlmp::CaseReport>& rows) {
    bool trivial = false;
    for (const auto& r : rows) {
        if (r.failed || !r.converged) return kExitSolverError;
        trivial = trivial || r.trivial;
    }
    return trivial ? kExitTrivial : kExitConverged;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mountain-pass solver for nonlocal semilinear problems on an interval"};
    std::string config_path;
    std::string case_name;
    std::string dump_path;
    std::string log_path;
    std::string out_path;
    int jobs = 1;
    bool list = false;
    double h_override = 0.0;
    int n_override = 0;
    auto* cfg_opt = app.add_option("--config", config_path, "configuration file (key = value lines)");
    auto* case_opt = app.add_option("--case", case_name, "bundled case (see --list-cases)");
    cfg_opt->excludes(case_opt);
    app.add_option("--dump-matrix", dump_path, "write the assembled matrix B as 'row col value' lines");
    app.add_option("--log", log_path, "iteration log CSV (default: stdout for single solves)");
    app.add_option("--out", out_path, "report CSV (overrides output.report)");
    app.add_option("--jobs", jobs, "rows of a convergence study run concurrently")->check(CLI::PositiveNumber);
    app.add_flag("--list-cases", list, "list the bundled cases and exit");
    auto* h_opt = app.add_option("--spacing", h_override, "run a single solve at this target mesh spacing")->check(CLI::PositiveNumber);
    app.add_option("--n-elements", n_override, "run a single solve with this many elements")
        ->check(CLI::Range(2, 1000000))
        ->excludes(h_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfigError;
    }

    if (list) {
        for (const auto& p : nlmp::presets()) std::printf("%-6s  %s\n", p.name, p.summary);
        return 0;
    }

    nlmp::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = nlmp::load_config(config_path);
        else if (!case_name.empty()) cfg = nlmp::preset_config(case_name);
        else {
            std::cerr << "error: give --config PATH or --case NAME (or --list-cases)\n";
            return kExitConfigError;
        }
    } catch (const nlmp::ConfigError& e) {
        std::cerr << "error: " << (config_path.empty() ? "" : config_path + ": ") << e.what() << '\n';
        return kExitConfigError;
    }
    if (h_override > 0.0) cfg.resolutions = {{h_override, 0}};
    if (n_override > 0) cfg.resolutions = {{0.0, n_override}};
    if (!out_path.empty()) cfg.report_path = out_path;
    if (!log_path.empty()) cfg.log_path = log_path;

    print_header(std::cout, cfg);
    const nlmp::CaseSpec& spec = cfg.spec;
    warn_extension(spec);

    try {
        if (!dump_path.empty()) {
            const nlmp::Mesh mesh = nlmp::case_mesh(spec, cfg.resolutions.front());
            nlmp::dump_matrix(dump_path, nlmp::case_form(spec, mesh).B);
        }

        std::unique_ptr<std::ofstream> log_file;
        if (!cfg.log_path.empty()) {
            log_file = std::make_unique<std::ofstream>(cfg.log_path);
            if (!*log_file) throw nlmp::Error("cannot open '" + cfg.log_path + "' for writing");
            *log_file << kLogHeader << '\n';
        }

        std::vector<nlmp::CaseReport> rows;
        if (cfg.resolutions.size() == 1) {
            std::ostream& log = log_file ? static_cast<std::ostream&>(*log_file) : std::cout;
            if (!log_file) log << kLogHeader << '\n';
            const nlmp::CaseRun run =
                nlmp::run_case(spec, cfg.resolutions.front(), [&](const nlmp::IterationRecord& r) { write_log_row(log, r); });
            rows.push_back(run.report);
            if (!cfg.solution_path.empty() && run.solve)
                nlmp::write_csv(cfg.solution_path, run.form->to_fe_function(run.solve->solution));
            std::printf("# h          n_dof        R_L1         R_L2         E_L1         E_L2     it    time_s\n");
            print_row(run.report);
            if (run.report.trivial) std::printf("# trivial solution captured: ||u*|| = %.3g, ||t* u1|| = %.3g\n",
                                                run.report.solution_l2, run.report.initial_l2);
        } else {
            const nlmp::StudyResult study =
                nlmp::convergence_study(spec, cfg.resolutions, jobs, [&](std::size_t, const nlmp::CaseRun& run) {
                    if (log_file && run.solve) {
                        *log_file << "# n_dof = " << run.report.n_dof << '\n';
                        for (const auto& r : run.solve->records) write_log_row(*log_file, r);
                    }
                    if (!cfg.solution_path.empty() && run.solve)
                        nlmp::write_csv(with_suffix(cfg.solution_path, "_n" + std::to_string(run.report.n_dof)),
                                        run.form->to_fe_function(run.solve->solution));
                });
            rows = study.rows;
            std::printf("# h          n_dof        R_L1         R_L2         E_L1         E_L2     it    time_s\n");
            for (const auto& r : rows) print_row(r);
            auto order = [](const char* name, const nlmp::OrderFit& f) {
                if (f.rows_used >= 2) std::printf("# order %s = %.3f (%d rows)\n", name, f.slope, f.rows_used);
                else std::printf("# order %s unavailable\n", name);
            };
            order("R_L1", study.R_L1);
            order("R_L2", study.R_L2);
            order("E_L1", study.E_L1);
            order("E_L2", study.E_L2);
            for (int i : study.excluded) std::printf("# row %d excluded from fits\n", i);
            if (!cfg.plot_path.empty()) nlmp::write_plot_data(cfg.plot_path, rows);
        }
        if (!cfg.report_path.empty()) nlmp::write_report_csv(cfg.report_path, rows);
        for (const auto& r : rows)
            if (r.failed) std::cerr << "error: n_dof " << r.n_dof << ": " << r.error << '\n';
        return exit_code(rows);
    } catch (const nlmp::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolverError;
    }
}
