#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracheat/fbm.hpp"
#include "fracheat/spectral_field.hpp"
#include "fracheat/young.hpp"

namespace fracheat {

/// One scalar coefficient function with derivatives up to order three and
/// their sup-norm bounds.
struct ScalarCoefficient {
    std::function<double(double)> f;
    std::function<double(double)> d1;
    std::function<double(double)> d2;
    std::function<double(double)> d3;
    double bound_f = 0.0;
    double bound_d1 = 0.0;
    double bound_d2 = 0.0;
    double bound_d3 = 0.0;
};

/// The d coefficient functions f_i of a Nemytskii-type perturbation.
class NemytskiiFamily {
  public:
    NemytskiiFamily() = default;
    explicit NemytskiiFamily(std::vector<ScalarCoefficient> comps) : comps_(std::move(comps)) {
        for (const auto& c : comps_) {
            if (!std::isfinite(c.bound_f) || !std::isfinite(c.bound_d1) ||
                !std::isfinite(c.bound_d2) || !std::isfinite(c.bound_d3))
                throw std::invalid_argument("NemytskiiFamily: derivative bounds must be finite");
        }
    }

    int dim() const { return static_cast<int>(comps_.size()); }
    const ScalarCoefficient& component(int i) const { return comps_[static_cast<std::size_t>(i)]; }

    /// f_i(u) = lambda0 + scale * (1 + (u - c_i)^2)^{-1/2} with per-component
    /// shifts; every component is bounded below by lambda0. The scale sets the
    /// noise influence (and thereby the spread of Y_t(xi)) without touching
    /// the lower bound.
    static NemytskiiFamily bounded_below(int d, double lambda0, double scale = 1.0) {
        if (!(scale > 0.0))
            throw std::invalid_argument("bounded_below: scale must be positive");
        std::vector<ScalarCoefficient> comps;
        comps.reserve(static_cast<std::size_t>(d));
        for (int i = 0; i < d; ++i) {
            const double shift = 0.5 * i;
            ScalarCoefficient c;
            c.f = [lambda0, scale, shift](double u) {
                const double v = u - shift;
                return lambda0 + scale / std::sqrt(1.0 + v * v);
            };
            c.d1 = [scale, shift](double u) {
                const double v = u - shift;
                return -scale * v * std::pow(1.0 + v * v, -1.5);
            };
            c.d2 = [scale, shift](double u) {
                const double v = u - shift;
                return scale * (2.0 * v * v - 1.0) * std::pow(1.0 + v * v, -2.5);
            };
            c.d3 = [scale, shift](double u) {
                const double v = u - shift;
                return scale * (9.0 * v - 6.0 * v * v * v) * std::pow(1.0 + v * v, -3.5);
            };
            c.bound_f = lambda0 + scale;
            c.bound_d1 = scale * 0.3849;
            c.bound_d2 = scale * 1.0;
            c.bound_d3 = scale * 2.0;
            comps.push_back(std::move(c));
        }
        return NemytskiiFamily(std::move(comps));
    }

    static NemytskiiFamily constant(int d, double value) {
        std::vector<ScalarCoefficient> comps(static_cast<std::size_t>(d));
        for (auto& c : comps) {
            c.f = [value](double) { return value; };
            c.d1 = [](double) { return 0.0; };
            c.d2 = [](double) { return 0.0; };
            c.d3 = [](double) { return 0.0; };
            c.bound_f = std::abs(value);
        }
        return NemytskiiFamily(std::move(comps));
    }

    static NemytskiiFamily zero(int d) { return constant(d, 0.0); }

  private:
    std::vector<ScalarCoefficient> comps_;
};

/// Regularizing operator L phi (xi) = int_0^1 U(xi,eta) phi(eta) d eta as a
/// quadrature matrix on the collocation grid, or the identity marker. Output
/// is re-expanded in N modes, so the dense variant maps B into every B_lambda.
class KernelOperator {
  public:
    static KernelOperator identity() { return KernelOperator(); }

    /// U == 1: rank-one averaging kernel.
    static KernelOperator averaging(int n_modes) {
        return KernelOperator(n_modes, [](double, double) { return 1.0; });
    }

    /// Discretized Gaussian bump U(xi,eta) = exp(-(xi-eta)^2 / (2 sigma^2)).
    static KernelOperator gaussian(int n_modes, double sigma = 0.1) {
        return KernelOperator(n_modes, [sigma](double xi, double eta) {
            const double d = xi - eta;
            return std::exp(-d * d / (2.0 * sigma * sigma));
        });
    }

    template <class U>
    KernelOperator(int n_modes, U&& kernel) : tables_(detail::grid_tables(n_modes)) {
        const auto& pts = tables_->points;
        const int n = n_modes;
        auto mat = std::make_shared<std::vector<double>>(static_cast<std::size_t>(n) * n);
        const double w = 1.0 / (n + 1);
        double min_row = 0.0;
        for (int j = 0; j < n; ++j) {
            double row_mass = 0.0;
            for (int k = 0; k < n; ++k) {
                const double v = kernel(pts[static_cast<std::size_t>(j)],
                                        pts[static_cast<std::size_t>(k)]);
                if (v < 0.0) throw std::invalid_argument("KernelOperator: U must be >= 0");
                (*mat)[static_cast<std::size_t>(j) * n + k] = v;
                row_mass += v * w;
            }
            min_row = j == 0 ? row_mass : std::min(min_row, row_mass);
        }
        if (!(min_row > 0.0))
            throw std::invalid_argument("KernelOperator: c_U must be positive");
        matrix_ = std::move(mat);
        c_u_ = min_row;
    }

    bool is_identity() const { return matrix_ == nullptr; }
    int n_modes() const { return is_identity() ? 0 : tables_->n_modes; }

    /// Discrete mass lower bound min_j sum_k U(xi_j, xi_k)/(N+1).
    double c_u() const {
        if (is_identity())
            throw std::logic_error("KernelOperator: identity marker has no kernel constant");
        return c_u_;
    }

    SpectralField apply(const SpectralField& f) const {
        if (is_identity()) return f;
        apply_values_check(f.n_modes());
        CollocationGrid grid(tables_->n_modes);
        std::vector<double> in = grid.to_values(f);
        std::vector<double> out(in.size(), 0.0);
        apply_values(in, out);
        return grid.to_field(out);
    }

    /// Grid-value form used by the solver hot loops.
    void apply_values(std::span<const double> in, std::span<double> out) const {
        const int n = tables_->n_modes;
        const double w = 1.0 / (n + 1);
        for (int j = 0; j < n; ++j) {
            const double* row = matrix_->data() + static_cast<std::size_t>(j) * n;
            double sum = 0.0;
            for (int k = 0; k < n; ++k) sum += row[k] * in[static_cast<std::size_t>(k)];
            out[static_cast<std::size_t>(j)] = w * sum;
        }
    }

  private:
    KernelOperator() = default;
    void apply_values_check(int n) const {
        if (n != tables_->n_modes)
            throw std::invalid_argument("KernelOperator: field size does not match kernel grid");
    }

    std::shared_ptr<const detail::GridTables> tables_;
    std::shared_ptr<const std::vector<double>> matrix_;
    double c_u_ = 1.0;
};

struct SolverConfig {
    int n_modes = 64;
    int time_steps = 1024;
    double horizon = 1.0;
    double kappa = 0.45;
    double gamma = 0.70;
    std::string scheme = "exp-euler";
    double tolerance = 1e-8;

    TimeGrid grid() const { return TimeGrid{time_steps, horizon}; }

    void validate() const {
        if (n_modes < 1) throw std::invalid_argument("SolverConfig: n_modes must be >= 1");
        if (time_steps < 1) throw std::invalid_argument("SolverConfig: time_steps must be >= 1");
        if (!(horizon > 0.0)) throw std::invalid_argument("SolverConfig: horizon must be > 0");
        if (!(gamma > 0.5 && gamma < 1.0))
            throw std::invalid_argument("SolverConfig: gamma must lie in (1/2,1)");
        const double lo = std::max(1.0 - gamma, 0.25);
        if (!(kappa > lo && kappa < 0.5))
            throw std::invalid_argument(
                "SolverConfig: kappa must lie in (max(1-gamma,1/4),1/2)");
    }
};

struct SolverBlowup : std::runtime_error {
    explicit SolverBlowup(int step)
        : std::runtime_error("solver: non-finite field detected at step " + std::to_string(step)),
          step(step) {}
    int step;
};

namespace detail {

/// Per-step workspace: shared forward transform of the state plus scratch for
/// coefficient products, the kernel operator and the semigroup decay.
struct SolveWorkspace {
    std::shared_ptr<const GridTables> tables;
    std::vector<double> decay;       // e^{-lambda_n dt}
    std::vector<double> y_vals;      // state on the fine grid
    std::vector<double> v_vals;      // second input on the fine grid
    std::vector<double> w_vals;      // third input on the fine grid
    std::vector<double> g_vals;      // pointwise result on the fine grid
    std::vector<double> coarse_in;   // N-grid scratch for the kernel operator
    std::vector<double> coarse_out;
    SpectralField g_field;

    SolveWorkspace(int n_modes, double dt)
        : tables(grid_tables(n_modes)), g_field(n_modes) {
        decay.resize(static_cast<std::size_t>(n_modes));
        for (int m = 1; m <= n_modes; ++m)
            decay[static_cast<std::size_t>(m - 1)] = std::exp(-laplacian_eigenvalue(m) * dt);
        y_vals.resize(static_cast<std::size_t>(tables->n_fine));
        v_vals.resize(static_cast<std::size_t>(tables->n_fine));
        w_vals.resize(static_cast<std::size_t>(tables->n_fine));
        g_vals.resize(static_cast<std::size_t>(tables->n_fine));
        coarse_in.resize(static_cast<std::size_t>(tables->n_modes));
        coarse_out.resize(static_cast<std::size_t>(tables->n_modes));
    }

    void semigroup_step(SpectralField& f) const {
        for (std::size_t m = 0; m < decay.size(); ++m) f.coeffs[m] *= decay[m];
    }

    /// g_field <- L(g_vals as a field truncated to N modes)
    void finish(const KernelOperator& op) {
        fine_values_to_field(*tables, g_vals, g_field);
        if (op.is_identity()) return;
        const int n = tables->n_modes;
        for (int j = 0; j < n; ++j) coarse_in[static_cast<std::size_t>(j)] = 0.0;
        for (int m = 0; m < n; ++m) {
            const double c = g_field.coeffs[static_cast<std::size_t>(m)];
            if (c == 0.0) continue;
            const double* row = tables->basis.data() + static_cast<std::size_t>(m) * n;
            for (int j = 0; j < n; ++j) coarse_in[static_cast<std::size_t>(j)] += c * row[j];
        }
        op.apply_values(coarse_in, coarse_out);
        const double w = 1.0 / (n + 1);
        for (int m = 0; m < n; ++m) {
            const double* row = tables->basis.data() + static_cast<std::size_t>(m) * n;
            double sum = 0.0;
            for (int j = 0; j < n; ++j) sum += row[j] * coarse_out[static_cast<std::size_t>(j)];
            g_field.coeffs[static_cast<std::size_t>(m)] = w * sum;
        }
    }
};

}  // namespace detail

/// Mild-equation solver by left-point exponential Euler,
///   y_{k+1} = S_delta ( y_k + sum_i G_i(y_k) [x^i_{k+1} - x^i_k] ),
/// with G_i = L o f_i (regularized) or f_i (identity marker). A constant
/// driver short-circuits to the exact semigroup flow y_t = S_t phi.
inline FieldPath solve(const SpectralField& phi, const NemytskiiFamily& family,
                       const KernelOperator& op, const DriverPath& x, const SolverConfig& cfg) {
    cfg.validate();
    if (!(x.grid == cfg.grid()))
        throw std::invalid_argument("solve: driver grid does not match SolverConfig");
    if (phi.n_modes() != cfg.n_modes)
        throw std::invalid_argument("solve: initial condition size does not match n_modes");
    if (family.dim() != x.dim)
        throw std::invalid_argument("solve: family dimension does not match driver");

    if (x.is_constant()) return FieldPath::semigroup_flow(x.grid, phi);

    FieldPath y(x.grid, cfg.n_modes);
    y.at(0) = phi;
    detail::SolveWorkspace ws(cfg.n_modes, x.grid.dt());
    SpectralField state = phi;
    const int nf = ws.tables->n_fine;
    for (int k = 0; k < x.grid.steps; ++k) {
        detail::to_fine_values(*ws.tables, state, ws.y_vals);
        SpectralField bracket = state;
        for (int i = 0; i < x.dim; ++i) {
            const double dx = x.increment(k, i);
            if (dx == 0.0) continue;
            const auto& fi = family.component(i).f;
            for (int j = 0; j < nf; ++j)
                ws.g_vals[static_cast<std::size_t>(j)] = fi(ws.y_vals[static_cast<std::size_t>(j)]);
            ws.finish(op);
            axpy(dx, ws.g_field, bracket);
        }
        ws.semigroup_step(bracket);
        if (!bracket.all_finite()) throw SolverBlowup(k + 1);
        state = bracket;
        y.at(k + 1) = state;
    }
    return y;
}

/// Linear mild equation v_t = w_t + int_{t0}^t S_{t-u}( A_i(u) v_u ) dx^i_u
/// with A_i(u) v = L(f_i'(y_u) v) (or f_i'(y_u) v for the identity marker),
/// advanced as v_{k+1} = w_{k+1} + S_delta( (v_k - w_k) + sum_i A_i v_k dx^i ).
/// v is linear in w; entries before t0 are zero.
inline FieldPath solve_linear(const FieldPath& w, const FieldPath& y,
                              const NemytskiiFamily& family, const KernelOperator& op,
                              const DriverPath& x, int t0_index) {
    if (!(w.grid == x.grid) || !(y.grid == x.grid))
        throw std::invalid_argument("solve_linear: grids do not match");
    if (w.n_modes() != y.n_modes())
        throw std::invalid_argument("solve_linear: field sizes do not match");
    if (family.dim() != x.dim)
        throw std::invalid_argument("solve_linear: family dimension does not match driver");
    if (!(t0_index >= 0 && t0_index <= x.grid.steps))
        throw std::invalid_argument("solve_linear: t0 outside the grid");

    const int n = w.n_modes();
    FieldPath v(x.grid, n);
    v.at(t0_index) = w.at(t0_index);
    detail::SolveWorkspace ws(n, x.grid.dt());
    const int nf = ws.tables->n_fine;
    for (int k = t0_index; k < x.grid.steps; ++k) {
        detail::to_fine_values(*ws.tables, y.at(k), ws.y_vals);
        detail::to_fine_values(*ws.tables, v.at(k), ws.v_vals);
        SpectralField bracket = v.at(k) - w.at(k);
        for (int i = 0; i < x.dim; ++i) {
            const double dx = x.increment(k, i);
            if (dx == 0.0) continue;
            const auto& di = family.component(i).d1;
            for (int j = 0; j < nf; ++j)
                ws.g_vals[static_cast<std::size_t>(j)] =
                    di(ws.y_vals[static_cast<std::size_t>(j)]) *
                    ws.v_vals[static_cast<std::size_t>(j)];
            ws.finish(op);
            axpy(dx, ws.g_field, bracket);
        }
        ws.semigroup_step(bracket);
        if (!bracket.all_finite()) throw SolverBlowup(k + 1);
        v.at(k + 1) = w.at(k + 1) + bracket;
    }
    return v;
}

struct PicardResult {
    FieldPath path;
    bool converged = false;
    int iterations = 0;
    int window_steps = 0;
    std::vector<double> last_window_history;  // successive-iterate sup distances
};

/// Fixed-point oracle: iterates y -> Gamma(y), Gamma(y)_t = S_t phi +
/// int_0^t S_{t-u} G(y_u) dx_u with the full-grid right-point sum. When the
/// plain iteration fails to contract on the whole horizon, the interval is
/// split into windows and the fixed point is patched window by window.
inline PicardResult picard_solve(const SpectralField& phi, const NemytskiiFamily& family,
                                 const KernelOperator& op, const DriverPath& x,
                                 const SolverConfig& cfg, int max_iter = 60) {
    cfg.validate();
    if (!(x.grid == cfg.grid()))
        throw std::invalid_argument("picard_solve: driver grid does not match SolverConfig");
    const int n = cfg.n_modes;
    const int m = x.grid.steps;
    detail::SolveWorkspace ws(n, x.grid.dt());
    const int nf = ws.tables->n_fine;

    // Gamma over a window [a,b] with anchor value y_a: the right-point sum is
    // accumulated with the recursion C_{j+1} = S_delta C_j + G(y_{j+1}) dx_j.
    auto apply_map = [&](const FieldPath& y, int a, int b, FieldPath& out) {
        SpectralField conv(n);
        SpectralField anchor = y.at(a);
        out.at(a) = anchor;
        for (int k = a; k < b; ++k) {
            ws.semigroup_step(conv);
            detail::to_fine_values(*ws.tables, y.at(k + 1), ws.y_vals);
            for (int i = 0; i < x.dim; ++i) {
                const double dx = x.increment(k, i);
                if (dx == 0.0) continue;
                const auto& fi = family.component(i).f;
                for (int j = 0; j < nf; ++j)
                    ws.g_vals[static_cast<std::size_t>(j)] =
                        fi(ws.y_vals[static_cast<std::size_t>(j)]);
                ws.finish(op);
                axpy(dx, ws.g_field, conv);
            }
            ws.semigroup_step(anchor);
            out.at(k + 1) = anchor + conv;
        }
    };

    PicardResult result;
    int window = m;
    for (;;) {
        FieldPath y(x.grid, n);
        FieldPath next(x.grid, n);
        y.at(0) = phi;
        bool ok = true;
        result.iterations = 0;
        for (int a = 0; a < m && ok; a += window) {
            const int b = std::min(a + window, m);
            // start from the pure semigroup flow off the anchor value
            for (int k = a; k < b; ++k) {
                SpectralField f = y.at(k);
                ws.semigroup_step(f);
                y.at(k + 1) = f;
            }
            std::vector<double> history;
            bool window_done = false;
            double prev_dist = -1.0;
            for (int it = 0; it < max_iter; ++it) {
                apply_map(y, a, b, next);
                double dist = 0.0;
                for (int k = a; k <= b; ++k)
                    dist = std::max(dist, sobolev_norm(next.at(k) - y.at(k), 0.0));
                for (int k = a; k <= b; ++k) y.at(k) = next.at(k);
                history.push_back(dist);
                ++result.iterations;
                if (dist < cfg.tolerance) {
                    window_done = true;
                    break;
                }
                if (prev_dist >= 0.0 && dist > prev_dist && it >= 2) break;  // not contracting
                prev_dist = dist;
            }
            result.last_window_history = std::move(history);
            if (!window_done) ok = false;
        }
        if (ok) {
            result.path = std::move(y);
            result.converged = true;
            result.window_steps = window;
            return result;
        }
        if (window <= 1) {
            result.path = std::move(y);
            result.converged = false;
            result.window_steps = window;
            return result;
        }
        window /= 2;
    }
}

}  // namespace fracheat
