#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlmp/error.hpp"

namespace nlmp {

/// Uniform 1D P1 mesh. The computational interval [x_left, x_right] may be
/// larger than the physical domain Omega, whose endpoints are mesh nodes
/// `omega_first` and `omega_last`.
struct Mesh {
    double x_left = 0.0;
    double x_right = 1.0;
    double h = 1.0;  // actual spacing
    std::vector<double> nodes;
    int n_elements = 0;
    int omega_first = 0;
    int omega_last = 0;

    [[nodiscard]] int node_count() const noexcept { return n_elements + 1; }
    [[nodiscard]] double omega_left() const { return nodes[omega_first]; }
    [[nodiscard]] double omega_right() const { return nodes[omega_last]; }
    /// Elements [omega_first, omega_last) tile Omega; element e spans nodes e and e + 1.
    [[nodiscard]] int omega_element_count() const noexcept { return omega_last - omega_first; }
    [[nodiscard]] bool element_in_omega(int e) const noexcept { return e >= omega_first && e < omega_last; }
    /// Number of nodes strictly inside Omega.
    [[nodiscard]] int interior_node_count() const noexcept { return omega_last - omega_first - 1; }
};

namespace detail {

inline int snap_to_node(const Mesh& m, double x, const char* which) {
    const double s = (x - m.x_left) / m.h;
    const int i = static_cast<int>(std::lround(s));
    if (i < 0 || i > m.n_elements || std::abs(s - i) > 1e-8)
        throw InvalidParameter(std::string("domain ") + which + " endpoint does not coincide with a mesh node");
    return i;
}

} // namespace detail

/// Mesh with exactly n_elements elements; Omega is the whole interval.
inline Mesh build_mesh_n(double x_left, double x_right, int n_elements) {
    if (!(x_right > x_left) || n_elements < 2)
        throw DegenerateInterval("mesh needs x_left < x_right and at least two elements");
    Mesh m;
    m.x_left = x_left;
    m.x_right = x_right;
    m.n_elements = n_elements;
    m.h = (x_right - x_left) / n_elements;
    m.nodes.resize(n_elements + 1);
    for (int i = 0; i <= n_elements; ++i) m.nodes[i] = x_left + i * m.h;
    m.nodes.back() = x_right;
    m.omega_first = 0;
    m.omega_last = n_elements;
    return m;
}

/// Mesh with n_elements = round((x_right - x_left) / h).
inline Mesh build_mesh(double x_left, double x_right, double h) {
    if (!(h > 0.0) || !(x_right - x_left >= 2.0 * h * (1.0 - 1e-12)))
        throw DegenerateInterval("mesh interval must be at least two target spacings long");
    const int n = static_cast<int>(std::lround((x_right - x_left) / h));
    return build_mesh_n(x_left, x_right, n);
}

/// Restrict Omega to [omega_left, omega_right]; both endpoints must be nodes.
inline Mesh with_omega(Mesh m, double omega_left, double omega_right) {
    if (!(omega_right > omega_left)) throw DegenerateInterval("empty physical domain");
    m.omega_first = detail::snap_to_node(m, omega_left, "left");
    m.omega_last = detail::snap_to_node(m, omega_right, "right");
    if (m.omega_last - m.omega_first < 2) throw DegenerateInterval("physical domain needs at least two elements");
    return m;
}

/// Piecewise-linear function given by its nodal values. The mesh must outlive it.
struct FeFunction {
    const Mesh* mesh = nullptr;
    std::vector<double> values;

    /// Evaluate the interpolant at x in [x_left, x_right].
    [[nodiscard]] double operator()(double x) const {
        const Mesh& m = *mesh;
        double s = (x - m.x_left) / m.h;
        int e = static_cast<int>(std::floor(s));
        e = std::clamp(e, 0, m.n_elements - 1);
        const double xi = s - e;
        return values[e] * (1.0 - xi) + values[e + 1] * xi;
    }
};

// Local P1 element matrices on an element of length h.
inline Eigen::Matrix2d local_mass(double h) {
    Eigen::Matrix2d m;
    m << h / 3.0, h / 6.0, h / 6.0, h / 3.0;
    return m;
}

inline Eigen::Matrix2d local_stiffness(double h) {
    Eigen::Matrix2d s;
    s << 1.0 / h, -1.0 / h, -1.0 / h, 1.0 / h;
    return s;
}

namespace detail {

inline Eigen::MatrixXd assemble_nodal(const Mesh& mesh, bool omega_only, const Eigen::Matrix2d& local) {
    const int n = mesh.node_count();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int e = 0; e < mesh.n_elements; ++e) {
        if (omega_only && !mesh.element_in_omega(e)) continue;
        A.block<2, 2>(e, e) += local;
    }
    return A;
}

} // namespace detail

/// P1 mass matrix over all mesh nodes; with omega_only only Omega elements contribute.
inline Eigen::MatrixXd mass_matrix(const Mesh& mesh, bool omega_only = false) {
    return detail::assemble_nodal(mesh, omega_only, local_mass(mesh.h));
}

/// P1 stiffness matrix (int u' v') over all mesh nodes.
inline Eigen::MatrixXd h1_stiffness_matrix(const Mesh& mesh, bool omega_only = false) {
    return detail::assemble_nodal(mesh, omega_only, local_stiffness(mesh.h));
}

/// Nodal sampling of f. With zero_outside_omega, nodes on or outside the
/// boundary of Omega are set to zero (homogeneous Dirichlet volume constraint).
inline FeFunction interpolate(const Mesh& mesh, const std::function<double(double)>& f,
                              bool zero_outside_omega = false) {
    FeFunction u{&mesh, std::vector<double>(mesh.node_count(), 0.0)};
    for (int i = 0; i < mesh.node_count(); ++i) {
        if (zero_outside_omega && (i <= mesh.omega_first || i >= mesh.omega_last)) continue;
        const double v = f(mesh.nodes[i]);
        if (!std::isfinite(v)) throw InvalidParameter("interpolated function is not finite at a node");
        u.values[i] = v;
    }
    return u;
}

struct Norms {
    double l2 = 0.0;
    double h1 = 0.0;
};

/// L2 and H1 norms over Omega given nodal mass and stiffness matrices
/// (assembled with omega_only = true).
inline Norms norms(const FeFunction& u, const Eigen::MatrixXd& M, const Eigen::MatrixXd& S) {
    const Eigen::Map<const Eigen::VectorXd> v(u.values.data(), static_cast<Eigen::Index>(u.values.size()));
    if (M.rows() != v.size() || S.rows() != v.size()) throw InvalidParameter("norm matrices do not match function size");
    const double m = v.dot(M * v);
    const double s = v.dot(S * v);
    return {std::sqrt(std::max(m, 0.0)), std::sqrt(std::max(m + s, 0.0))};
}

/// Two-column CSV: header line then "x,value" per node.
inline void write_csv(const std::string& path, const FeFunction& u) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.precision(17);
    out << "x,u\n";
    for (std::size_t i = 0; i < u.values.size(); ++i) out << u.mesh->nodes[i] << ',' << u.values[i] << '\n';
}

/// Reads the CSV written by write_csv; returns (x, value) pairs sorted by x.
inline std::vector<std::pair<double, double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::pair<double, double>> pts;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double x = 0.0;
        double v = 0.0;
        if (!(ss >> x >> v)) throw Error(path + ":" + std::to_string(lineno) + ": expected two numbers");
        pts.emplace_back(x, v);
    }
    if (pts.size() < 2) throw Error(path + ": need at least two samples");
    std::sort(pts.begin(), pts.end());
    return pts;
}

/// Piecewise-linear interpolation through sorted samples; constant beyond the ends.
inline double interpolate_samples(const std::vector<std::pair<double, double>>& pts, double x) {
    if (x <= pts.front().first) return pts.front().second;
    if (x >= pts.back().first) return pts.back().second;
    const auto it = std::upper_bound(pts.begin(), pts.end(), x,
                                     [](double v, const auto& p) { return v < p.first; });
    const auto& [x1, v1] = *it;
    const auto& [x0, v0] = *(it - 1);
    const double t = (x - x0) / (x1 - x0);
    return v0 * (1.0 - t) + v1 * t;
}

} // namespace nlmp
