#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fracheat/fbm.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/solver.hpp"
#include "fracheat/spectral_field.hpp"
#include "fracheat/young.hpp"

namespace fracheat {

/// G_i(y) = L(f_i(y)) (or f_i(y) for the identity marker).
inline SpectralField nemytskii_image(const SpectralField& y, const NemytskiiFamily& family,
                                     const KernelOperator& op, int i) {
    return op.apply(pointwise_unary(y, family.component(i).f));
}

/// The flow fields Psi^i_{.,s} started at source time s:
///   Psi^i_{t,s} = S_{t-s}(G_i(Y_s)) + int_s^t S_{t-u}(A_j(u) Psi^i_{u,s}) dx^j_u.
struct FlowField {
    int source_index = 0;
    double source_time = 0.0;
    std::vector<FieldPath> psi;  // one FieldPath per component i, zeros before s
};

inline FlowField flow_field(const FieldPath& y, const DriverPath& x,
                            const NemytskiiFamily& family, const KernelOperator& op,
                            int s_index) {
    if (!(y.grid == x.grid)) throw std::invalid_argument("flow_field: grids do not match");
    if (!(s_index >= 0 && s_index <= x.grid.steps))
        throw std::invalid_argument("flow_field: source index outside the grid");
    FlowField out;
    out.source_index = s_index;
    out.source_time = x.grid.time(s_index);
    out.psi.reserve(static_cast<std::size_t>(x.dim));
    for (int i = 0; i < x.dim; ++i) {
        const SpectralField g = nemytskii_image(y.at(s_index), family, op, i);
        FieldPath w(x.grid, y.n_modes());
        for (int k = s_index; k <= x.grid.steps; ++k)
            w.at(k) = semigroup_apply(g, x.grid.time(k) - x.grid.time(s_index));
        out.psi.push_back(solve_linear(w, y, family, op, x, s_index));
    }
    return out;
}

/// Directional derivative z = D Phi(x)(h): solution of
///   z_t = int_0^t S_{t-u}(G_i(Y_u)) dh^i_u + int_0^t S_{t-u}(A_i(u) z_u) dx^i_u,
/// advanced by the same left-point exponential Euler stencil; linear in h.
inline FieldPath directional_derivative(const DriverPath& x, const DriverPath& h,
                                        const SpectralField& phi, const NemytskiiFamily& family,
                                        const KernelOperator& op, const SolverConfig& cfg) {
    if (!(x.grid == h.grid) || x.dim != h.dim)
        throw std::invalid_argument("directional_derivative: x and h must share the grid");
    const FieldPath y = solve(phi, family, op, x, cfg);
    detail::SolveWorkspace ws(cfg.n_modes, x.grid.dt());
    const int nf = ws.tables->n_fine;
    FieldPath z(x.grid, cfg.n_modes);
    for (int k = 0; k < x.grid.steps; ++k) {
        detail::to_fine_values(*ws.tables, y.at(k), ws.y_vals);
        detail::to_fine_values(*ws.tables, z.at(k), ws.v_vals);
        SpectralField bracket = z.at(k);
        for (int i = 0; i < x.dim; ++i) {
            const double dh = h.increment(k, i);
            const double dx = x.increment(k, i);
            const auto& comp = family.component(i);
            if (dh != 0.0) {
                for (int j = 0; j < nf; ++j)
                    ws.g_vals[static_cast<std::size_t>(j)] =
                        comp.f(ws.y_vals[static_cast<std::size_t>(j)]);
                ws.finish(op);
                axpy(dh, ws.g_field, bracket);
            }
            if (dx != 0.0) {
                for (int j = 0; j < nf; ++j)
                    ws.g_vals[static_cast<std::size_t>(j)] =
                        comp.d1(ws.y_vals[static_cast<std::size_t>(j)]) *
                        ws.v_vals[static_cast<std::size_t>(j)];
                ws.finish(op);
                axpy(dx, ws.g_field, bracket);
            }
        }
        ws.semigroup_step(bracket);
        if (!bracket.all_finite()) throw SolverBlowup(k + 1);
        z.at(k + 1) = bracket;
    }
    return z;
}

/// Second directional derivative z = D^2 Phi(x)(h,k): solves the linear
/// equation with the inhomogeneity
///   w_t = int S(A(u) Dh_u) dk + int S(A(u) Dk_u) dh + int S(L(f''(Y) Dh Dk)) dx.
/// The two cross terms are accumulated coefficient-wise in one expression, so
/// the output is exactly symmetric under the (h,k) swap.
inline FieldPath second_directional_derivative(const DriverPath& x, const DriverPath& h,
                                               const DriverPath& k, const SpectralField& phi,
                                               const NemytskiiFamily& family,
                                               const KernelOperator& op,
                                               const SolverConfig& cfg) {
    if (!(x.grid == h.grid) || !(x.grid == k.grid) || x.dim != h.dim || x.dim != k.dim)
        throw std::invalid_argument("second_directional_derivative: grids must match");
    const FieldPath y = solve(phi, family, op, x, cfg);
    const FieldPath dh_path = directional_derivative(x, h, phi, family, op, cfg);
    const FieldPath dk_path = directional_derivative(x, k, phi, family, op, cfg);

    detail::SolveWorkspace ws(cfg.n_modes, x.grid.dt());
    const int nf = ws.tables->n_fine;
    const int n = cfg.n_modes;
    FieldPath z(x.grid, n);
    std::vector<double> dh_vals(static_cast<std::size_t>(nf));
    std::vector<double> dk_vals(static_cast<std::size_t>(nf));
    SpectralField cross_a(n), cross_b(n);
    for (int step = 0; step < x.grid.steps; ++step) {
        detail::to_fine_values(*ws.tables, y.at(step), ws.y_vals);
        detail::to_fine_values(*ws.tables, z.at(step), ws.v_vals);
        detail::to_fine_values(*ws.tables, dh_path.at(step), dh_vals);
        detail::to_fine_values(*ws.tables, dk_path.at(step), dk_vals);
        SpectralField bracket = z.at(step);
        for (int i = 0; i < x.dim; ++i) {
            const auto& comp = family.component(i);
            const double dxi = x.increment(step, i);
            const double dhi = h.increment(step, i);
            const double dki = k.increment(step, i);
            // cross terms f'(Y) Dh . dk and f'(Y) Dk . dh, added symmetrically
            for (int j = 0; j < nf; ++j)
                ws.g_vals[static_cast<std::size_t>(j)] =
                    comp.d1(ws.y_vals[static_cast<std::size_t>(j)]) *
                    dh_vals[static_cast<std::size_t>(j)];
            ws.finish(op);
            cross_a = ws.g_field;
            for (int j = 0; j < nf; ++j)
                ws.g_vals[static_cast<std::size_t>(j)] =
                    comp.d1(ws.y_vals[static_cast<std::size_t>(j)]) *
                    dk_vals[static_cast<std::size_t>(j)];
            ws.finish(op);
            cross_b = ws.g_field;
            for (int m = 0; m < n; ++m)
                bracket.coeffs[static_cast<std::size_t>(m)] +=
                    cross_a.coeffs[static_cast<std::size_t>(m)] * dki +
                    cross_b.coeffs[static_cast<std::size_t>(m)] * dhi;
            if (dxi != 0.0) {
                for (int j = 0; j < nf; ++j)
                    ws.g_vals[static_cast<std::size_t>(j)] =
                        comp.d2(ws.y_vals[static_cast<std::size_t>(j)]) *
                        (dh_vals[static_cast<std::size_t>(j)] *
                         dk_vals[static_cast<std::size_t>(j)]);
                ws.finish(op);
                axpy(dxi, ws.g_field, bracket);
                for (int j = 0; j < nf; ++j)
                    ws.g_vals[static_cast<std::size_t>(j)] =
                        comp.d1(ws.y_vals[static_cast<std::size_t>(j)]) *
                        ws.v_vals[static_cast<std::size_t>(j)];
                ws.finish(op);
                axpy(dxi, ws.g_field, bracket);
            }
        }
        ws.semigroup_step(bracket);
        if (!bracket.all_finite()) throw SolverBlowup(step + 1);
        z.at(step + 1) = bracket;
    }
    return z;
}

/// Terminal flow fields Psi^i_{t,s} across a (possibly coarsened) grid of
/// source times s. Each source time is an independent linear solve on [s,t];
/// only the terminal field is kept.
struct FlowTerminals {
    TimeGrid source_grid;           // coarsened grid of source times
    int dim = 1;
    int terminal_index = 0;         // index of t on the driver grid
    std::vector<SpectralField> fields;  // [k * dim + i]

    const SpectralField& field(int k, int i) const {
        return fields[static_cast<std::size_t>(k) * dim + i];
    }
};

inline FlowTerminals flow_terminals(const FieldPath& y, const DriverPath& x,
                                    const NemytskiiFamily& family, const KernelOperator& op,
                                    int stride = 4, int t_index = -1, int threads = 0) {
    if (t_index < 0) t_index = x.grid.steps;
    if (stride < 1 || t_index % stride != 0)
        throw std::invalid_argument("flow_terminals: stride must divide the terminal index");
    const int n_src = t_index / stride;
    FlowTerminals out;
    out.source_grid = TimeGrid{n_src, x.grid.time(t_index)};
    out.dim = x.dim;
    out.terminal_index = t_index;
    out.fields.assign(static_cast<std::size_t>(n_src + 1) * x.dim, SpectralField(y.n_modes()));

    parallel_for(static_cast<std::size_t>(n_src) + 1, [&](std::size_t idx) {
        const int s_index = static_cast<int>(idx) * stride;
        detail::SolveWorkspace ws(y.n_modes(), x.grid.dt());
        const int nf = ws.tables->n_fine;
        for (int i = 0; i < x.dim; ++i) {
            SpectralField g = nemytskii_image(y.at(s_index), family, op, i);
            if (s_index == t_index) {
                out.fields[idx * x.dim + i] = std::move(g);
                continue;
            }
            // w_t = S_{t-s} g, advanced alongside the state
            SpectralField w = g;
            SpectralField state = g;
            for (int k = s_index; k < t_index; ++k) {
                detail::to_fine_values(*ws.tables, y.at(k), ws.y_vals);
                detail::to_fine_values(*ws.tables, state, ws.v_vals);
                SpectralField bracket = state - w;
                for (int i2 = 0; i2 < x.dim; ++i2) {
                    const double dx = x.increment(k, i2);
                    if (dx == 0.0) continue;
                    const auto& d1 = family.component(i2).d1;
                    for (int j = 0; j < nf; ++j)
                        ws.g_vals[static_cast<std::size_t>(j)] =
                            d1(ws.y_vals[static_cast<std::size_t>(j)]) *
                            ws.v_vals[static_cast<std::size_t>(j)];
                    ws.finish(op);
                    axpy(dx, ws.g_field, bracket);
                }
                ws.semigroup_step(bracket);
                ws.semigroup_step(w);
                state = w + bracket;
                if (!state.all_finite()) throw SolverBlowup(k + 1);
            }
            out.fields[idx * x.dim + i] = std::move(state);
        }
    }, threads);
    return out;
}

/// Malliavin derivative samples D^i_s(Y_t(xi)) = Psi^i_{t,s}(xi) on the
/// source-time grid.
struct MalliavinMatrix {
    double xi = 0.5;
    double hurst = 0.75;
    TimeGrid source_grid;
    int dim = 1;
    std::vector<double> entries;  // [k * dim + i], k = 0..source_grid.steps

    double entry(int k, int i) const { return entries[static_cast<std::size_t>(k) * dim + i]; }

    /// max_i |entry| at the terminal source time s = t.
    double max_terminal() const {
        double best = 0.0;
        for (int i = 0; i < dim; ++i)
            best = std::max(best, std::abs(entry(source_grid.steps, i)));
        return best;
    }
    double min_terminal() const {
        double best = std::abs(entry(source_grid.steps, 0));
        for (int i = 1; i < dim; ++i)
            best = std::min(best, std::abs(entry(source_grid.steps, i)));
        return best;
    }

    /// Sup of |entries| over the source grid and components.
    double sup_norm() const {
        double best = 0.0;
        for (double e : entries) best = std::max(best, std::abs(e));
        return best;
    }

    /// All-pairs beta-Hoelder constant of s -> Psi_{t,s}(xi) (Euclidean over
    /// components); the discrete proxy for the Hoelder norm of the derivative.
    double holder_constant(double beta) const {
        double best = 0.0;
        const int m = source_grid.steps;
        for (int a = 0; a <= m; ++a) {
            for (int b = a + 1; b <= m; ++b) {
                double sq = 0.0;
                for (int i = 0; i < dim; ++i) {
                    const double d = entry(b, i) - entry(a, i);
                    sq += d * d;
                }
                const double gap = source_grid.time(b) - source_grid.time(a);
                best = std::max(best, std::sqrt(sq) / std::pow(gap, beta));
            }
        }
        return best;
    }
};

inline MalliavinMatrix malliavin_matrix(const FieldPath& y, const DriverPath& x,
                                        const NemytskiiFamily& family, const KernelOperator& op,
                                        double xi, int stride = 4, int threads = 0) {
    const FlowTerminals terms = flow_terminals(y, x, family, op, stride, -1, threads);
    MalliavinMatrix mat;
    mat.xi = xi;
    mat.hurst = x.hurst.value_or(0.75);
    mat.source_grid = terms.source_grid;
    mat.dim = terms.dim;
    mat.entries.resize(static_cast<std::size_t>(terms.source_grid.steps + 1) * terms.dim);
    for (int k = 0; k <= terms.source_grid.steps; ++k)
        for (int i = 0; i < terms.dim; ++i)
            mat.entries[static_cast<std::size_t>(k) * terms.dim + i] =
                evaluate(terms.field(k, i), xi);
    return mat;
}

/// Scalar Young integral int_0^t Psi^i_{t,u}(xi) dh^i_u by left-point sums on
/// the source grid with dyadic refinement. h must be sampled on the matrix's
/// source grid.
inline double representation_integral(const MalliavinMatrix& mat, const DriverPath& h) {
    if (!(h.grid == mat.source_grid) || h.dim != mat.dim)
        throw std::invalid_argument("representation_integral: h must live on the source grid");
    const int m = mat.source_grid.steps;
    double prev = 0.0;
    bool have_prev = false;
    for (int pieces = 1;; pieces *= 2) {
        const auto part = detail::dyadic_partition(0, m, std::min(pieces, m));
        double sum = 0.0;
        for (std::size_t k = 0; k + 1 < part.size(); ++k) {
            for (int i = 0; i < mat.dim; ++i) {
                const double dh = h.value(part[k + 1], i) - h.value(part[k], i);
                sum += mat.entry(part[k], i) * dh;
            }
        }
        if (have_prev && std::abs(sum - prev) <= 1e-9 * std::max(1.0, std::abs(sum)))
            return sum;
        if (pieces >= m) return sum;
        prev = sum;
        have_prev = true;
    }
}

/// sqrt( sum_i ||row_i||^2_H ) with each component row read as a step
/// function on the source grid.
inline double malliavin_h_norm(const MalliavinMatrix& mat) {
    double sum = 0.0;
    for (int i = 0; i < mat.dim; ++i) {
        StepFunction row(mat.source_grid, 1);
        for (int k = 0; k < mat.source_grid.steps; ++k) row.value(k, 0) = mat.entry(k, i);
        sum += h_inner_product(row, row, mat.hurst);
    }
    return std::sqrt(std::max(0.0, sum));
}

struct NondegeneracyReport {
    double min_terminal_entry = 0.0;
    double max_terminal_entry = 0.0;
    bool passes = false;
};

/// Terminal-time nondegeneracy: passes iff max_i |Psi^i_{t,t}(xi)| clears the
/// kernel-mass lower bound c_U lambda_0 (up to a 1e-8 slack).
inline NondegeneracyReport nondegeneracy_check(const MalliavinMatrix& mat, double c_u,
                                               double lambda0) {
    NondegeneracyReport rep;
    rep.min_terminal_entry = mat.min_terminal();
    rep.max_terminal_entry = mat.max_terminal();
    rep.passes = rep.max_terminal_entry >= c_u * lambda0 - 1e-8;
    return rep;
}

}  // namespace fracheat
