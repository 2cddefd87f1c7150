#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlmp/error.hpp"
#include "nlmp/kernels.hpp"
#include "nlmp/verify.hpp"

namespace nlmp {

/// A parsed run: one case plus the mesh family and output paths.
struct RunConfig {
    CaseSpec spec;
    std::vector<Resolution> resolutions;  // one entry: single solve; several: convergence study
    std::string solution_path;
    std::string log_path;
    std::string report_path;
    std::string plot_path;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string tok; in >> tok;) out.push_back(tok);
    return out;
}

// Plain number, or k*pi, pi/d, k*pi/d, -pi.
inline std::optional<double> parse_number(std::string tok) {
    double sign = 1.0;
    if (!tok.empty() && (tok[0] == '-' || tok[0] == '+')) {
        if (tok[0] == '-') sign = -1.0;
        tok = tok.substr(1);
    }
    auto plain = [](const std::string& s) -> std::optional<double> {
        if (s.empty()) return std::nullopt;
        std::size_t used = 0;
        try {
            const double v = std::stod(s, &used);
            if (used != s.size() || !std::isfinite(v)) return std::nullopt;
            return v;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    const auto p = tok.find("pi");
    if (p == std::string::npos) {
        const auto v = plain(tok);
        return v ? std::optional<double>(sign * *v) : std::nullopt;
    }
    double value = std::numbers::pi;
    const std::string before = tok.substr(0, p);
    const std::string after = tok.substr(p + 2);
    if (!before.empty()) {
        if (before.back() != '*') return std::nullopt;
        const auto k = plain(before.substr(0, before.size() - 1));
        if (!k) return std::nullopt;
        value *= *k;
    }
    if (!after.empty()) {
        if (after[0] != '/') return std::nullopt;
        const auto d = plain(after.substr(1));
        if (!d || *d == 0.0) return std::nullopt;
        value /= *d;
    }
    return sign * value;
}

// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
    for (int prec = 6; prec <= 17; ++prec) {
        std::ostringstream out;
        out.precision(prec);
        out << v;
        if (std::stod(out.str()) == v) return out.str();
    }
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

struct KernelParams {
    std::string type = "exponential";
    std::map<std::string, double> values;
    std::map<std::string, int> lines;  // config line of each parameter
};

inline Kernel make_kernel(const KernelParams& p, int line) {
    auto get = [&](const char* key, double fallback) {
        const auto it = p.values.find(key);
        return it == p.values.end() ? fallback : it->second;
    };
    auto allow = [&](std::initializer_list<const char*> keys) {
        for (const auto& [k, v] : p.values) {
            bool ok = false;
            for (const char* a : keys) ok = ok || k == a;
            if (!ok) throw ConfigError("kernel." + k, p.lines.at(k), "parameter not used by kernel '" + p.type + "'");
        }
    };
    try {
        if (p.type == "exponential") {
            allow({"scale"});
            return Exponential{get("scale", 1.0)};
        }
        if (p.type == "gaussian") {
            allow({"scale"});
            return Gaussian{get("scale", 1.0)};
        }
        if (p.type == "mexican_hat") {
            allow({"a", "b", "A", "B"});
            return InvertedMexicanHat{get("a", 1.0), get("b", 2.0), get("A", 1.0), get("B", 1.0)};
        }
        if (p.type == "logistic") {
            allow({"a", "b"});
            return Logistic{get("a", 1.0), get("b", 4.0)};
        }
        if (p.type == "power_law") {
            allow({"a", "p"});
            return PowerLaw{get("a", 1.0), get("p", 4.0)};
        }
    } catch (const InvalidParameter& e) {
        throw ConfigError("kernel", line, e.what());
    }
    throw ConfigError("kernel", line, "unknown kernel '" + p.type + "'");
}

inline void append_kernel(std::ostringstream& out, const Kernel& k) {
    out << "kernel = " << k.name() << '\n';
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Exponential> || std::is_same_v<T, Gaussian>) {
                out << "kernel.scale = " << format_number(v.scale) << '\n';
            } else if constexpr (std::is_same_v<T, InvertedMexicanHat>) {
                out << "kernel.a = " << format_number(v.a) << "\nkernel.b = " << format_number(v.b)
                    << "\nkernel.A = " << format_number(v.A) << "\nkernel.B = " << format_number(v.B) << '\n';
            } else if constexpr (std::is_same_v<T, Logistic>) {
                out << "kernel.a = " << format_number(v.a) << "\nkernel.b = " << format_number(v.b) << '\n';
            } else {
                out << "kernel.a = " << format_number(v.a) << "\nkernel.p = " << format_number(v.p) << '\n';
            }
        },
        k.variant());
}

} // namespace detail

/// Parses flat `key = value` lines; `#` starts a comment. Unknown keys, repeated
/// keys and malformed values raise ConfigError with the offending line.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    CaseSpec& s = cfg.spec;
    detail::KernelParams kernel;
    int kernel_line = 0;
    std::map<std::string, int> seen;
    std::optional<double> h;
    std::vector<double> h_list;
    std::vector<int> n_list;
    int n_single = 0;
    std::string guess = "sine";
    int guess_line = 0;

    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = detail::trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("", lineno, "expected 'key = value'");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("", lineno, "missing key");
        if (value.empty()) throw ConfigError(key, lineno, "missing value");
        if (seen.count(key)) throw ConfigError(key, lineno, "key repeated (first on line " + std::to_string(seen[key]) + ")");
        seen[key] = lineno;

        auto number = [&]() {
            const auto v = detail::parse_number(value);
            if (!v) throw ConfigError(key, lineno, "expected a number, got '" + value + "'");
            return *v;
        };
        auto positive = [&]() {
            const double v = number();
            if (!(v > 0.0)) throw ConfigError(key, lineno, "must be positive");
            return v;
        };
        auto integer = [&](int min) {
            const double v = number();
            if (v != std::floor(v) || v < min || v > 1e9)
                throw ConfigError(key, lineno, "expected an integer >= " + std::to_string(min));
            return static_cast<int>(v);
        };
        auto numbers = [&]() {
            std::vector<double> out;
            for (const auto& tok : detail::split_ws(value)) {
                const auto v = detail::parse_number(tok);
                if (!v || !(*v > 0.0)) throw ConfigError(key, lineno, "expected positive numbers, got '" + tok + "'");
                out.push_back(*v);
            }
            return out;
        };

        if (key == "name") s.name = value;
        else if (key == "domain.left") s.omega_left = number();
        else if (key == "domain.right") s.omega_right = number();
        else if (key == "constraint") {
            if (value == "dirichlet") s.constraint = Constraint::dirichlet;
            else if (value == "neumann") s.constraint = Constraint::neumann;
            else throw ConfigError(key, lineno, "expected dirichlet or neumann");
        } else if (key == "neumann.extension") s.extension = positive();
        else if (key == "neumann.far_field") {
            if (value == "zero") s.far_field = FarField::zero;
            else if (value == "free") s.far_field = FarField::free;
            else throw ConfigError(key, lineno, "expected zero or free");
        } else if (key == "kernel") {
            kernel.type = value;
            kernel_line = lineno;
        } else if (key == "kernel.scale" || key == "kernel.a" || key == "kernel.b" || key == "kernel.A" ||
                   key == "kernel.B" || key == "kernel.p") {
            kernel.values[key.substr(7)] = number();
            kernel.lines[key.substr(7)] = lineno;
            if (!kernel_line) kernel_line = lineno;
        } else if (key == "nonlinearity") {
            try {
                s.nonlinearity = Nonlinearity::from_name(value);
            } catch (const InvalidParameter& e) {
                throw ConfigError(key, lineno, e.what());
            }
        } else if (key == "h") h = positive();
        else if (key == "h_list") h_list = numbers();
        else if (key == "n_elements") n_single = integer(2);
        else if (key == "n_elements_list") {
            for (double v : numbers()) {
                if (v != std::floor(v) || v < 2) throw ConfigError(key, lineno, "element counts must be integers >= 2");
                n_list.push_back(static_cast<int>(v));
            }
        } else if (key == "epsilon") s.solver.epsilon = positive();
        else if (key == "delta") s.solver.delta = positive();
        else if (key == "max_iterations") s.solver.max_iterations = integer(1);
        else if (key == "max_halvings") s.solver.max_halvings = integer(0);
        else if (key == "grounding") {
            const double v = number();
            if (v < 0.0) throw ConfigError(key, lineno, "must be nonnegative");
            s.solver.grounding = v;
        } else if (key == "quad_order") {
            s.quad_order = integer(2);
            if (s.quad_order > quad::kMaxOrder) throw ConfigError(key, lineno, "at most " + std::to_string(quad::kMaxOrder));
        } else if (key == "descent.metric") {
            if (value == "nonlocal") s.solver.metric = DescentMetric::nonlocal;
            else if (value == "h1") s.solver.metric = DescentMetric::h1;
            else throw ConfigError(key, lineno, "expected nonlocal or h1");
        } else if (key == "reference") {
            try {
                s.reference.mode = reference_mode_from_name(value);
            } catch (const InvalidParameter& e) {
                throw ConfigError(key, lineno, e.what());
            }
        } else if (key == "reference.refinement") s.reference.refinement = integer(1);
        else if (key == "trivial_ratio") s.trivial_ratio = positive();
        else if (key == "initial_guess") {
            guess = value;
            guess_line = lineno;
        } else if (key == "initial_guess.a") s.initial_guess.step_left = number();
        else if (key == "initial_guess.b") s.initial_guess.step_right = number();
        else if (key == "initial_guess.path") s.initial_guess.csv_path = value;
        else if (key == "output.solution") cfg.solution_path = value;
        else if (key == "output.log") cfg.log_path = value;
        else if (key == "output.report") cfg.report_path = value;
        else if (key == "output.plot") cfg.plot_path = value;
        else throw ConfigError(key, lineno, "unknown key");
    }

    if (!(s.omega_right > s.omega_left))
        throw ConfigError("domain.right", seen.count("domain.right") ? seen["domain.right"] : 0, "domain.right must exceed domain.left");
    s.kernel = detail::make_kernel(kernel, kernel_line);

    if (guess == "sine") s.initial_guess.kind = InitialGuessKind::sine;
    else if (guess == "step") {
        s.initial_guess.kind = InitialGuessKind::step;
        if (!(s.initial_guess.step_right > s.initial_guess.step_left))
            throw ConfigError("initial_guess.b", guess_line, "step needs initial_guess.a < initial_guess.b");
    } else if (guess == "csv") {
        s.initial_guess.kind = InitialGuessKind::csv;
        if (s.initial_guess.csv_path.empty()) throw ConfigError("initial_guess.path", guess_line, "csv guess needs a path");
    } else {
        throw ConfigError("initial_guess", guess_line, "expected sine, step or csv");
    }

    std::vector<std::pair<int, std::string>> mesh_keys;
    for (const char* k : {"h", "h_list", "n_elements", "n_elements_list"})
        if (seen.count(k)) mesh_keys.emplace_back(seen[k], k);
    if (mesh_keys.size() > 1) {
        std::sort(mesh_keys.begin(), mesh_keys.end());
        throw ConfigError(mesh_keys[1].second, mesh_keys[1].first,
                          "give only one of h, h_list, n_elements, n_elements_list");
    }
    if (h) cfg.resolutions.push_back({*h, 0});
    for (double v : h_list) cfg.resolutions.push_back({v, 0});
    if (n_single) cfg.resolutions.push_back({0.0, n_single});
    for (int n : n_list) cfg.resolutions.push_back({0.0, n});
    if (cfg.resolutions.empty()) cfg.resolutions.push_back({0.314, 0});
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// Canonical text of a configuration; parse_config(to_text(c)) reproduces c.
inline std::string to_text(const RunConfig& cfg) {
    const CaseSpec& s = cfg.spec;
    using detail::format_number;
    std::ostringstream out;
    out << "name = " << s.name << '\n';
    out << "domain.left = " << format_number(s.omega_left) << '\n';
    out << "domain.right = " << format_number(s.omega_right) << '\n';
    out << "constraint = " << to_string(s.constraint) << '\n';
    if (s.constraint == Constraint::neumann) {
        out << "neumann.extension = " << format_number(s.extension) << '\n';
        out << "neumann.far_field = " << to_string(s.far_field) << '\n';
    }
    detail::append_kernel(out, s.kernel);
    out << "nonlinearity = " << s.nonlinearity.name() << '\n';
    bool by_count = !cfg.resolutions.empty() && cfg.resolutions.front().n_elements > 0;
    out << (by_count ? "n_elements_list =" : "h_list =");
    for (const Resolution& r : cfg.resolutions)
        out << ' ' << (by_count ? std::to_string(r.n_elements) : format_number(r.h));
    out << '\n';
    out << "epsilon = " << format_number(s.solver.epsilon) << '\n';
    out << "delta = " << format_number(s.solver.delta) << '\n';
    out << "max_iterations = " << s.solver.max_iterations << '\n';
    out << "max_halvings = " << s.solver.max_halvings << '\n';
    out << "grounding = " << format_number(s.solver.grounding) << '\n';
    out << "quad_order = " << s.quad_order << '\n';
    out << "descent.metric = " << to_string(s.solver.metric) << '\n';
    out << "reference = " << to_string(s.reference.mode) << '\n';
    out << "reference.refinement = " << s.reference.refinement << '\n';
    out << "trivial_ratio = " << format_number(s.trivial_ratio) << '\n';
    switch (s.initial_guess.kind) {
    case InitialGuessKind::sine: out << "initial_guess = sine\n"; break;
    case InitialGuessKind::step:
        out << "initial_guess = step\ninitial_guess.a = " << format_number(s.initial_guess.step_left)
            << "\ninitial_guess.b = " << format_number(s.initial_guess.step_right) << '\n';
        break;
    case InitialGuessKind::csv: out << "initial_guess = csv\ninitial_guess.path = " << s.initial_guess.csv_path << '\n'; break;
    }
    if (!cfg.solution_path.empty()) out << "output.solution = " << cfg.solution_path << '\n';
    if (!cfg.log_path.empty()) out << "output.log = " << cfg.log_path << '\n';
    if (!cfg.report_path.empty()) out << "output.report = " << cfg.report_path << '\n';
    if (!cfg.plot_path.empty()) out << "output.plot = " << cfg.plot_path << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Bundled presets

struct Preset {
    const char* name;
    const char* summary;
    const char* text;
};

inline const std::array<Preset, 5>& presets() {
    static const std::array<Preset, 5> list{{
        {"case1", "Table 1: Dirichlet on (-pi,pi), exponential kernel, f = u^3, sine guess",
         R"(# Dirichlet problem on (-pi, pi) with an exponential kernel and f(u) = u^3.
name = case1
domain.left = -pi
domain.right = pi
constraint = dirichlet
kernel = exponential
kernel.scale = 1
nonlinearity = cubic
n_elements_list = 20 40 80 160 320
epsilon = 1e-3
delta = 1
initial_guess = sine
)"},
        {"case2", "Table 2: Dirichlet on (-pi,pi), inverted Mexican hat kernel, f = u^3, sine guess",
         R"(# Sign-changing kernel (1/pi)(exp(-x^2/4) - exp(-x^2)) with f(u) = u^3.
name = case2
domain.left = -pi
domain.right = pi
constraint = dirichlet
kernel = mexican_hat
kernel.a = 1
kernel.b = 2
kernel.A = 1
kernel.B = 1
nonlinearity = cubic
n_elements_list = 20 40 80 160 320
epsilon = 1e-3
delta = 1
initial_guess = sine
)"},
        {"case3", "Table 3: Dirichlet on (-pi,pi), Gaussian kernel, f = u^5, sine guess",
         R"(# Gaussian kernel exp(-x^2)/sqrt(pi) with f(u) = u^5.
name = case3
domain.left = -pi
domain.right = pi
constraint = dirichlet
kernel = gaussian
kernel.scale = 1
nonlinearity = quintic
n_elements_list = 20 40 80 160 320
epsilon = 1e-3
delta = 1
initial_guess = sine
)"},
        {"case4", "Table 4: Dirichlet on (-pi,pi), Gaussian kernel, f = u^3 - u, sine guess",
         R"(# Gaussian kernel with f(u) = u^3 - u.
name = case4
domain.left = -pi
domain.right = pi
constraint = dirichlet
kernel = gaussian
kernel.scale = 1
nonlinearity = cubic_minus_linear
n_elements_list = 20 40 80 160 320
epsilon = 1e-3
delta = 1
initial_guess = sine
)"},
        {"case5", "Table 5: Neumann on (0,3), extended domain (-1.5,4.5), exponential kernel, Allen-Cahn f, step guess",
         R"(# Neumann problem on (0, 3), computed on (-1.5, 4.5), with
# f(u) = 0.5 (-u - 3u^2 + 4u^3) and a unit step on [1, 2) as first guess.
name = case5
domain.left = 0
domain.right = 3
constraint = neumann
neumann.extension = 1.5
neumann.far_field = zero
kernel = exponential
kernel.scale = 1
nonlinearity = allen_cahn
h_list = 0.15 0.075 0.0375 0.01875 0.009375
epsilon = 1e-3
delta = 1
initial_guess = step
initial_guess.a = 1
initial_guess.b = 2
)"},
    }};
    return list;
}

inline const Preset* find_preset(const std::string& name) {
    for (const Preset& p : presets())
        if (name == p.name) return &p;
    return nullptr;
}

inline RunConfig preset_config(const std::string& name) {
    const Preset* p = find_preset(name);
    if (!p) throw ConfigError("case", 0, "no bundled case named '" + name + "'");
    return parse_config(p->text);
}

} // namespace nlmp
