#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlmp/error.hpp"
#include "nlmp/fem.hpp"
#include "nlmp/kernels.hpp"
#include "nlmp/quadrature.hpp"

namespace nlmp {

enum class Constraint { dirichlet, neumann };

/// How a Neumann computational interval treats everything beyond its ends.
///  - free: no interaction beyond the truncated interval; the form annihilates constants.
///  - zero: the solution vanishes beyond the truncated interval; the form is positive definite.
enum class FarField { free, zero };

/// Continuity of the discrete space across the boundary of Omega.
///  - continuous: one P1 space on the computational mesh (H1-conforming).
///  - broken: values on the Omega side of each boundary node are independent of
///    the exterior side, so the discrete function may jump across the boundary.
enum class Coupling { continuous, broken };

inline std::string to_string(Constraint c) { return c == Constraint::dirichlet ? "dirichlet" : "neumann"; }
inline std::string to_string(FarField f) { return f == FarField::free ? "free" : "zero"; }
inline std::string to_string(Coupling c) { return c == Coupling::continuous ? "continuous" : "broken"; }

/// Assembled symmetric bilinear form B[u, v] = 1/2 iint (u(y)-u(x)) gamma (v(y)-v(x))
/// on the unknown degrees of freedom, together with the dof layout.
///
/// Dof numbering: unknowns first (dofs [0, n_unknowns)), exterior dofs after.
/// Unknowns are the Omega nodes that carry a free value: strictly interior nodes
/// for a continuous Dirichlet space, all closed-Omega nodes otherwise.
struct NonlocalForm {
    Constraint constraint = Constraint::dirichlet;
    FarField far_field = FarField::free;
    Coupling coupling = Coupling::continuous;
    Mesh mesh;
    Kernel kernel;
    int quad_order = 4;
    double kernel_mass = 1.0;

    int n_dofs = 0;
    int n_unknowns = 0;
    /// Per mesh element: global dof of its left/right node, -1 for a fixed zero.
    /// Elements outside the assembled region have both entries -1.
    std::vector<std::array<int, 2>> element_dofs;
    int region_first = 0;  // assembled elements [region_first, region_last)
    int region_last = 0;

    Eigen::MatrixXd K;              // convolution matrix over all dofs
    Eigen::MatrixXd full;           // B over all dofs, before exterior elimination
    Eigen::MatrixXd B;              // B on unknowns (Schur complement for Neumann)
    Eigen::MatrixXd exterior_map;   // exterior dof values = exterior_map * unknowns
    Eigen::MatrixXd omega_mass;     // int_Omega u v on unknowns
    Eigen::MatrixXd omega_stiffness;// int_Omega u' v' on unknowns

    [[nodiscard]] int n_exterior() const noexcept { return n_dofs - n_unknowns; }

    /// Unknowns plus reconstructed exterior values.
    [[nodiscard]] Eigen::VectorXd all_dofs(const Eigen::VectorXd& u) const {
        Eigen::VectorXd all(n_dofs);
        all.head(n_unknowns) = u;
        if (n_exterior() > 0) all.tail(n_exterior()) = exterior_map * u;
        return all;
    }

    /// Endpoint values of element e for a vector over all dofs.
    [[nodiscard]] std::array<double, 2> element_values(int e, const Eigen::VectorXd& all) const {
        const auto& d = element_dofs[e];
        return {d[0] < 0 ? 0.0 : all[d[0]], d[1] < 0 ? 0.0 : all[d[1]]};
    }

    /// Nodal function on the mesh (continuous spaces only).
    [[nodiscard]] FeFunction to_fe_function(const Eigen::VectorXd& u) const {
        if (coupling != Coupling::continuous) throw InvalidParameter("broken spaces have no nodal representation");
        const Eigen::VectorXd all = all_dofs(u);
        FeFunction f{&mesh, std::vector<double>(mesh.node_count(), 0.0)};
        for (int e = region_first; e < region_last; ++e) {
            const auto v = element_values(e, all);
            f.values[e] = v[0];
            f.values[e + 1] = v[1];
        }
        return f;
    }

    /// Unknown vector sampled from a nodal function.
    [[nodiscard]] Eigen::VectorXd unknowns_from(const FeFunction& f) const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n_unknowns);
        for (int e = mesh.omega_first; e < mesh.omega_last; ++e)
            for (int a = 0; a < 2; ++a)
                if (const int d = element_dofs[e][a]; d >= 0 && d < n_unknowns) u[d] = f.values[e + a];
        return u;
    }

    /// Unknown vector sampling g at the unknown nodes of Omega.
    template <class G>
    [[nodiscard]] Eigen::VectorXd sample(G&& g) const {
        Eigen::VectorXd u = Eigen::VectorXd::Zero(n_unknowns);
        for (int e = mesh.omega_first; e < mesh.omega_last; ++e)
            for (int a = 0; a < 2; ++a)
                if (const int d = element_dofs[e][a]; d >= 0) u[d] = g(mesh.nodes[e + a]);
        return u;
    }
};

namespace detail {

struct PairIntegrals {
    Eigen::MatrixXd K;  // iint phi_i(x) gamma phi_j(y)
    Eigen::MatrixXd W;  // int phi_i phi_j (x) int_region gamma(x - y) dy dx
};

// Tensor Gauss over every element pair of the region. Diagonal pairs of kernels
// with a kink at the origin are split along x = y into two triangles, each
// integrated with a collapsed (Duffy) tensor rule.
inline PairIntegrals integrate_element_pairs(const Mesh& mesh, const Kernel& kernel, int order,
                                             const std::vector<std::array<int, 2>>& dofs, int first,
                                             int last, int n_dofs) {
    const quad::Rule& rule = quad::gauss_legendre(order);
    const int q = rule.size();
    const double h = mesh.h;
    PairIntegrals out{Eigen::MatrixXd::Zero(n_dofs, n_dofs), Eigen::MatrixXd::Zero(n_dofs, n_dofs)};

    // Reference-element accumulators: Kl(a,b) pairs x-basis a with y-basis b.
    // Wx(a,b) integrates phi_a phi_b at x, Wy at y.
    Eigen::Matrix2d Kl;
    Eigen::Matrix2d Wx;
    Eigen::Matrix2d Wy;
    auto accumulate = [&](double xi, double eta, double dx, double w) {
        // xi, eta: reference coordinates of x in e and y in e'; dx = x - y.
        const double g = w * kernel(std::abs(dx));
        const double px[2] = {1.0 - xi, xi};
        const double py[2] = {1.0 - eta, eta};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                Kl(a, b) += g * px[a] * py[b];
                Wx(a, b) += g * px[a] * px[b];
                Wy(a, b) += g * py[a] * py[b];
            }
    };

    const bool split_diagonal = !kernel.smooth_at_origin();
    for (int e = first; e < last; ++e) {
        for (int f = e; f < last; ++f) {
            Kl.setZero();
            Wx.setZero();
            Wy.setZero();
            const double shift = (e - f) * h;  // x - y = shift + h (xi - eta)
            if (e == f && split_diagonal) {
                for (int i = 0; i < q; ++i)
                    for (int j = 0; j < q; ++j) {
                        const double s = rule.points[i];
                        const double t = rule.points[j];
                        const double w = rule.weights[i] * rule.weights[j] * s * h * h;
                        // eta < xi: xi = s, eta = s t; and the mirror image
                        accumulate(s, s * t, h * s * (1.0 - t), w);
                        accumulate(s * t, s, -h * s * (1.0 - t), w);
                    }
            } else {
                for (int i = 0; i < q; ++i)
                    for (int j = 0; j < q; ++j) {
                        const double xi = rule.points[i];
                        const double eta = rule.points[j];
                        const double w = rule.weights[i] * rule.weights[j] * h * h;
                        accumulate(xi, eta, shift + h * (xi - eta), w);
                    }
            }
            const auto& de = dofs[e];
            const auto& df = dofs[f];
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    if (de[a] >= 0 && df[b] >= 0) {
                        out.K(de[a], df[b]) += Kl(a, b);
                        if (e != f) out.K(df[b], de[a]) += Kl(a, b);
                    }
                    if (de[a] >= 0 && de[b] >= 0) out.W(de[a], de[b]) += Wx(a, b);
                    if (e != f && df[a] >= 0 && df[b] >= 0) out.W(df[a], df[b]) += Wy(a, b);
                }
            }
        }
    }
    return out;
}

inline Eigen::MatrixXd assemble_local(const std::vector<std::array<int, 2>>& dofs, int first, int last, int n,
                                      const Eigen::Matrix2d& local) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int e = first; e < last; ++e)
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                if (dofs[e][a] >= 0 && dofs[e][b] >= 0) A(dofs[e][a], dofs[e][b]) += local(a, b);
    return A;
}

inline Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

// Omega-restricted mass and stiffness on the unknowns.
inline void finish_omega_matrices(NonlocalForm& form) {
    const Mesh& m = form.mesh;
    form.omega_mass = assemble_local(form.element_dofs, m.omega_first, m.omega_last, form.n_dofs, local_mass(m.h))
                          .topLeftCorner(form.n_unknowns, form.n_unknowns);
    form.omega_stiffness =
        assemble_local(form.element_dofs, m.omega_first, m.omega_last, form.n_dofs, local_stiffness(m.h))
            .topLeftCorner(form.n_unknowns, form.n_unknowns);
}

} // namespace detail

/// Dirichlet form on Omega = the whole mesh interval (or mesh Omega when set):
/// B = Gamma M - K, with u extended by zero outside Omega.
inline NonlocalForm assemble_dirichlet(const Mesh& mesh, const Kernel& kernel, int quad_order = 4,
                                       Coupling coupling = Coupling::continuous) {
    if (quad_order < 2) throw InvalidParameter("quad_order must be at least 2");
    NonlocalForm form;
    form.constraint = Constraint::dirichlet;
    form.coupling = coupling;
    form.mesh = mesh;
    form.kernel = kernel;
    form.quad_order = quad_order;
    form.kernel_mass = kernel.mass();
    form.region_first = mesh.omega_first;
    form.region_last = mesh.omega_last;
    form.element_dofs.assign(mesh.n_elements, {-1, -1});

    // broken: every closed-Omega node is free; continuous: boundary nodes are pinned to zero.
    const int offset = coupling == Coupling::continuous ? mesh.omega_first + 1 : mesh.omega_first;
    const int n = coupling == Coupling::continuous ? mesh.interior_node_count() : mesh.omega_element_count() + 1;
    auto dof_of = [&](int node) {
        const int d = node - offset;
        return d >= 0 && d < n ? d : -1;
    };
    for (int e = mesh.omega_first; e < mesh.omega_last; ++e) form.element_dofs[e] = {dof_of(e), dof_of(e + 1)};
    form.n_dofs = n;
    form.n_unknowns = n;

    auto pairs = detail::integrate_element_pairs(mesh, kernel, quad_order, form.element_dofs, form.region_first,
                                                 form.region_last, n);
    form.K = std::move(pairs.K);
    const Eigen::MatrixXd M =
        detail::assemble_local(form.element_dofs, form.region_first, form.region_last, n, local_mass(mesh.h));
    form.full = detail::symmetrized(form.kernel_mass * M - form.K);
    form.B = form.full;
    form.exterior_map.resize(0, n);
    detail::finish_omega_matrices(form);
    return form;
}

/// Neumann form: the mesh covers an extended interval containing Omega. The
/// full form is assembled over the extended interval, exterior rows impose
/// (L u)_i = 0, and exterior dofs are eliminated by a Schur complement.
inline NonlocalForm assemble_neumann(const Mesh& mesh, const Kernel& kernel, int quad_order = 4,
                                     FarField far_field = FarField::free,
                                     Coupling coupling = Coupling::continuous) {
    if (quad_order < 2) throw InvalidParameter("quad_order must be at least 2");
    if (mesh.omega_first == 0 || mesh.omega_last == mesh.n_elements)
        throw InvalidParameter("Neumann mesh must extend strictly beyond Omega on both sides");
    NonlocalForm form;
    form.constraint = Constraint::neumann;
    form.far_field = far_field;
    form.coupling = coupling;
    form.mesh = mesh;
    form.kernel = kernel;
    form.quad_order = quad_order;
    form.kernel_mass = kernel.mass();
    form.region_first = 0;
    form.region_last = mesh.n_elements;
    form.element_dofs.assign(mesh.n_elements, {-1, -1});

    const int n_omega = mesh.omega_element_count() + 1;
    // exterior nodes: left part [0, omega_first], right part [omega_last, N]; the
    // boundary nodes are shared with Omega unless the space is broken.
    const bool broken = coupling == Coupling::broken;
    const int n_left = mesh.omega_first + (broken ? 1 : 0);
    const int n_right = mesh.n_elements - mesh.omega_last + (broken ? 1 : 0);
    auto omega_dof = [&](int node) { return node - mesh.omega_first; };
    auto left_dof = [&](int node) { return n_omega + node; };
    auto right_dof = [&](int node) { return n_omega + n_left + (node - mesh.omega_last - (broken ? 0 : 1)); };
    auto continuous_dof = [&](int node) {
        if (node < mesh.omega_first) return left_dof(node);
        if (node > mesh.omega_last) return right_dof(node);
        return omega_dof(node);
    };
    for (int e = 0; e < mesh.n_elements; ++e) {
        if (!broken) {
            form.element_dofs[e] = {continuous_dof(e), continuous_dof(e + 1)};
        } else if (e < mesh.omega_first) {
            form.element_dofs[e] = {left_dof(e), left_dof(e + 1)};
        } else if (e >= mesh.omega_last) {
            form.element_dofs[e] = {right_dof(e), right_dof(e + 1)};
        } else {
            form.element_dofs[e] = {omega_dof(e), omega_dof(e + 1)};
        }
    }
    form.n_unknowns = n_omega;
    form.n_dofs = n_omega + n_left + n_right;
    const int n = form.n_dofs;

    auto pairs = detail::integrate_element_pairs(mesh, kernel, quad_order, form.element_dofs, 0, mesh.n_elements, n);
    form.K = std::move(pairs.K);
    if (far_field == FarField::free) {
        form.full = detail::symmetrized(pairs.W - form.K);
    } else {
        const Eigen::MatrixXd M = detail::assemble_local(form.element_dofs, 0, mesh.n_elements, n, local_mass(mesh.h));
        form.full = detail::symmetrized(form.kernel_mass * M - form.K);
    }

    const int nu = form.n_unknowns;
    const int ne = form.n_exterior();
    const Eigen::MatrixXd Bee = form.full.bottomRightCorner(ne, ne);
    Eigen::LLT<Eigen::MatrixXd> llt(Bee);
    if (llt.info() != Eigen::Success)
        throw SingularExteriorBlock("exterior block of the Neumann form is not positive definite");
    const double diag_min = Bee.diagonal().minCoeff();
    const Eigen::VectorXd ld = llt.matrixL().toDenseMatrix().diagonal();
    const double cond_est = (ld.maxCoeff() / ld.minCoeff());
    if (!(diag_min > 0.0) || !std::isfinite(cond_est) || cond_est * cond_est > 1e14)
        throw SingularExteriorBlock("exterior block of the Neumann form is numerically singular");
    form.exterior_map = -llt.solve(form.full.bottomLeftCorner(ne, nu));
    form.B = detail::symmetrized(form.full.topLeftCorner(nu, nu) +
                                 form.full.topRightCorner(nu, ne) * form.exterior_map);
    detail::finish_omega_matrices(form);
    return form;
}

/// (-L u)(x) for x in closed Omega, with u given on all dofs of the form.
///
/// Integrates gamma(|x-y|) (u(x) - u(y)) over the assembled region element by
/// element, splitting the element that contains x at y = x. Zero-extension
/// models add u(x) times the kernel mass that lies outside the region.
inline double apply_operator(const NonlocalForm& form, const Eigen::VectorXd& all, double x) {
    const Mesh& m = form.mesh;
    const double tol = 1e-12 * (m.x_right - m.x_left);
    if (x < m.omega_left() - tol || x > m.omega_right() + tol) throw OutsideDomain("x lies outside Omega");
    // value at x from the Omega element that contains it
    int ex = static_cast<int>(std::floor((x - m.x_left) / m.h));
    ex = std::clamp(ex, m.omega_first, m.omega_last - 1);
    const auto vx = form.element_values(ex, all);
    const double xi_x = std::clamp((x - m.nodes[ex]) / m.h, 0.0, 1.0);
    const double ux = vx[0] * (1.0 - xi_x) + vx[1] * xi_x;

    const quad::Rule& rule = quad::gauss_legendre(form.quad_order);
    double conv = 0.0;  // int gamma u(y)
    double mass = 0.0;  // int gamma
    auto piece = [&](const std::array<double, 2>& v, double x0, double a, double b) {
        // integrate over [a, b] inside the element starting at x0
        const double len = b - a;
        if (len <= 0.0) return;
        for (int q = 0; q < rule.size(); ++q) {
            const double y = a + len * rule.points[q];
            const double w = rule.weights[q] * len;
            const double eta = (y - x0) / m.h;
            const double g = w * form.kernel(std::abs(x - y));
            conv += g * (v[0] * (1.0 - eta) + v[1] * eta);
            mass += g;
        }
    };
    for (int e = form.region_first; e < form.region_last; ++e) {
        const double a = m.nodes[e];
        const double b = m.nodes[e + 1];
        const auto v = form.element_values(e, all);
        if (x > a && x < b) {
            piece(v, a, a, x);
            piece(v, a, x, b);
        } else {
            piece(v, a, a, b);
        }
    }
    const bool zero_extension = form.constraint == Constraint::dirichlet || form.far_field == FarField::zero;
    const double outside = zero_extension ? form.kernel_mass - mass : 0.0;
    return (mass + outside) * ux - conv;
}

/// Largest |(B_full u)_i| over exterior rows: the discrete exterior constraint residual.
inline double exterior_constraint_residual(const NonlocalForm& form, const Eigen::VectorXd& u) {
    if (form.n_exterior() == 0) return 0.0;
    const Eigen::VectorXd r = form.full * form.all_dofs(u);
    return r.tail(form.n_exterior()).cwiseAbs().maxCoeff();
}

/// Coordinate text dump of B on the unknowns: "row col value" per line.
inline void dump_matrix(const std::string& path, const Eigen::MatrixXd& B) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.precision(17);
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        for (Eigen::Index j = 0; j < B.cols(); ++j) out << i << ' ' << j << ' ' << B(i, j) << '\n';
}

} // namespace nlmp
