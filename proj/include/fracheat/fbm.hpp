#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "fracheat/quadrature.hpp"
#include "fracheat/rng.hpp"

namespace fracheat {

/// Uniform time grid 0 = t_0 < ... < t_M = T.
struct TimeGrid {
    int steps = 0;
    double horizon = 1.0;

    double dt() const { return horizon / steps; }
    double time(int k) const { return horizon * k / steps; }
    int points() const { return steps + 1; }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// fBm covariance R_H(s,t) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double fbm_covariance(double s, double t, double hurst) {
    if (!(hurst > 0.0 && hurst < 1.0))
        throw std::invalid_argument("fbm_covariance: hurst must lie in (0,1)");
    if (!(s >= 0.0 && t >= 0.0))
        throw std::invalid_argument("fbm_covariance: times must be >= 0");
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

/// A d-component noise path sampled on a uniform time grid. hurst is empty
/// for deterministic paths (smooth directions, lifted elements of H).
struct DriverPath {
    TimeGrid grid;
    int dim = 1;
    std::vector<double> values;  // [k * dim + i], k = 0..steps
    std::optional<double> hurst;

    DriverPath() = default;
    DriverPath(TimeGrid g, int d)
        : grid(g), dim(d), values(static_cast<std::size_t>(g.points()) * d, 0.0) {}

    double value(int k, int i) const { return values[static_cast<std::size_t>(k) * dim + i]; }
    double& value(int k, int i) { return values[static_cast<std::size_t>(k) * dim + i]; }
    double increment(int k, int i) const { return value(k + 1, i) - value(k, i); }

    bool is_constant() const {
        for (int k = 0; k < grid.steps; ++k)
            for (int i = 0; i < dim; ++i)
                if (increment(k, i) != 0.0) return false;
        return true;
    }

    /// x_t = t in every component (deterministic test driver).
    static DriverPath linear(TimeGrid g, int d = 1) {
        DriverPath p(g, d);
        for (int k = 0; k <= g.steps; ++k)
            for (int i = 0; i < d; ++i) p.value(k, i) = g.time(k);
        return p;
    }

    static DriverPath constant(TimeGrid g, int d = 1) { return DriverPath(g, d); }

    DriverPath& operator+=(const DriverPath& o) {
        if (!(grid == o.grid) || dim != o.dim)
            throw std::invalid_argument("DriverPath: grid mismatch");
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += o.values[k];
        hurst.reset();
        return *this;
    }
    DriverPath& operator*=(double a) {
        for (double& v : values) v *= a;
        hurst.reset();
        return *this;
    }

    /// Tail of the path from a grid index onward. Values are copied verbatim
    /// (the anchor value rides along), so increments are preserved bit-for-bit.
    DriverPath tail(int from_index) const {
        if (from_index < 0 || from_index >= grid.steps)
            throw std::invalid_argument("tail: index outside the grid");
        DriverPath p(TimeGrid{grid.steps - from_index,
                              grid.horizon - grid.time(from_index)}, dim);
        for (int k = from_index; k <= grid.steps; ++k)
            for (int i = 0; i < dim; ++i) p.value(k - from_index, i) = value(k, i);
        p.hurst = hurst;
        return p;
    }

    /// Keep every stride-th grid point (valid restriction of the law).
    DriverPath subsample(int stride) const {
        if (stride < 1 || grid.steps % stride != 0)
            throw std::invalid_argument("subsample: stride must divide the step count");
        DriverPath p(TimeGrid{grid.steps / stride, grid.horizon}, dim);
        for (int k = 0; k <= p.grid.steps; ++k)
            for (int i = 0; i < dim; ++i) p.value(k, i) = value(k * stride, i);
        p.hurst = hurst;
        return p;
    }
};

inline DriverPath operator+(DriverPath a, const DriverPath& b) { return a += b; }
inline DriverPath operator*(double a, DriverPath p) { return p *= a; }

/// Discrete gamma-Hoelder seminorm: max over all grid pairs s < t of
/// |x_t - x_s| / (t-s)^gamma (Euclidean norm over components).
inline double holder_norm(const DriverPath& path, double gamma) {
    if (path.grid.steps < 1) throw std::invalid_argument("holder_norm: need >= 2 points");
    double best = 0.0;
    for (int a = 0; a < path.grid.steps; ++a) {
        for (int b = a + 1; b <= path.grid.steps; ++b) {
            double sq = 0.0;
            for (int i = 0; i < path.dim; ++i) {
                const double d = path.value(b, i) - path.value(a, i);
                sq += d * d;
            }
            const double gap = path.grid.time(b) - path.grid.time(a);
            best = std::max(best, std::sqrt(sq) / std::pow(gap, gamma));
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Volterra kernel K(t,s) = c_H s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du
// ---------------------------------------------------------------------------

namespace detail {

/// int_s^t (u-s)^{H-3/2} u^{H-1/2} du after the substitution w = (u-s)^{H-1/2},
/// which removes the singularity at u = s. Lower limit w_lo > 0 evaluates the
/// tail integral from s + w_lo^{1/(H-1/2)} instead.
inline double volterra_core(double t, double s, double hurst, int order = 64,
                            double w_lo = 0.0) {
    const double p = hurst - 0.5;
    const double w_hi = std::pow(t - s, p);
    return gauss_legendre(
               [&](double w) { return std::pow(s + std::pow(w, 1.0 / p), hurst - 0.5); },
               w_lo, w_hi, order) / p;
}

}  // namespace detail

/// Volterra kernel with the multiplicative constant calibrated so that
/// int_0^1 K(1,r)^2 dr = R_H(1,1) = 1.
class VolterraKernel {
  public:
    explicit VolterraKernel(double hurst) : hurst_(hurst) {
        if (!(hurst > 0.5 && hurst < 1.0))
            throw std::invalid_argument("VolterraKernel: hurst must lie in (1/2,1)");
        const double raw = tanh_sinh(
            [&](double r) {
                const double k = detail::volterra_core(1.0, r, hurst_);
                const double v = std::pow(r, 0.5 - hurst_) * k;
                return v * v;
            },
            0.0, 1.0);
        // K is linear in the constant, so the defining identity c^2 * raw = 1
        // is solved by a bracketing root find on c.
        c_h_ = bisect_root([raw](double c) { return c * c * raw - 1.0; }, 1e-8, 1e8);
    }

    double hurst() const { return hurst_; }
    double constant() const { return c_h_; }

    double operator()(double t, double s) const {
        if (!(s > 0.0 && s < t))
            throw std::domain_error("volterra_kernel: requires 0 < s < t");
        return c_h_ * std::pow(s, 0.5 - hurst_) * detail::volterra_core(t, s, hurst_);
    }

  private:
    double hurst_;
    double c_h_ = 1.0;
};

namespace detail {

inline const VolterraKernel& volterra_kernel_for(double hurst) {
    static std::mutex mu;
    static std::map<double, std::unique_ptr<VolterraKernel>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(hurst);
    if (it == cache.end())
        it = cache.emplace(hurst, std::make_unique<VolterraKernel>(hurst)).first;
    return *it->second;
}

}  // namespace detail

/// K(t,s) by singularity-removing quadrature, c_H calibrated per Hurst index.
inline double volterra_kernel(double t, double s, double hurst) {
    return detail::volterra_kernel_for(hurst)(t, s);
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

struct FactorizationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class SampleMethod { factorization, volterra };

namespace detail {

/// Lower-triangular Cholesky factor of the grid covariance matrix
/// [R_H(t_i, t_j)]_{i,j=1..M}, cached per (steps, hurst, horizon).
inline std::shared_ptr<const std::vector<double>> fbm_cholesky(const TimeGrid& grid,
                                                               double hurst) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const std::vector<double>>>
        cache;
    const auto key = std::make_tuple(grid.steps, hurst, grid.horizon);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const int m = grid.steps;
    std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j <= i; ++j)
            a[static_cast<std::size_t>(i) * m + j] =
                fbm_covariance(grid.time(i + 1), grid.time(j + 1), hurst);
    // in-place lower Cholesky
    for (int j = 0; j < m; ++j) {
        double d = a[static_cast<std::size_t>(j) * m + j];
        for (int k = 0; k < j; ++k) {
            const double l = a[static_cast<std::size_t>(j) * m + k];
            d -= l * l;
        }
        if (!(d > 0.0))
            throw FactorizationError("fbm factorization: covariance matrix is numerically "
                                     "non-positive at pivot " + std::to_string(j));
        const double ljj = std::sqrt(d);
        a[static_cast<std::size_t>(j) * m + j] = ljj;
        for (int i = j + 1; i < m; ++i) {
            double s = a[static_cast<std::size_t>(i) * m + j];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<std::size_t>(i) * m + k] *
                     a[static_cast<std::size_t>(j) * m + k];
            a[static_cast<std::size_t>(i) * m + j] = s / ljj;
        }
    }
    auto ptr = std::make_shared<const std::vector<double>>(std::move(a));
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, ptr);
    return ptr;
}

/// Volterra sampling coefficients a_{ij} = delta^{-1/2} int_{cell j} K(t_{i+1}, r) dr,
/// the L^2-optimal piecewise-constant projection of K onto the Wiener increments.
/// Cached per (steps, hurst, horizon).
inline std::shared_ptr<const std::vector<double>> fbm_volterra_matrix(const TimeGrid& grid,
                                                                      double hurst) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const std::vector<double>>>
        cache;
    const auto key = std::make_tuple(grid.steps, hurst, grid.horizon);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const auto& kernel = volterra_kernel_for(hurst);
    const int m = grid.steps;
    const double delta = grid.dt();
    const double inv_sqrt_delta = 1.0 / std::sqrt(delta);
    std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) {
        const double t = grid.time(i + 1);
        for (int j = 0; j <= i; ++j) {
            const double cell = gauss_legendre(
                [&](double r) { return kernel(t, r); }, grid.time(j), grid.time(j + 1), 4);
            a[static_cast<std::size_t>(i) * m + j] = inv_sqrt_delta * cell;
        }
    }
    auto ptr = std::make_shared<const std::vector<double>>(std::move(a));
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, ptr);
    return ptr;
}

}  // namespace detail

/// Samples a d-dimensional fBm path on M uniform steps over [0,T].
///
/// Both methods consume the identical normal stream for a given seed, so a
/// path sampled with either method is driven by the same underlying Wiener
/// increments; method differences then isolate the Volterra quadrature bias.
inline DriverPath sample_fbm_path(int steps, double hurst, int dim, std::uint64_t seed,
                                  SampleMethod method = SampleMethod::factorization,
                                  double horizon = 1.0) {
    if (steps < 1) throw std::invalid_argument("sample_fbm_path: steps must be >= 1");
    if (!(hurst > 0.5 && hurst < 1.0))
        throw std::invalid_argument("sample_fbm_path: hurst must lie in (1/2,1)");
    if (dim < 1) throw std::invalid_argument("sample_fbm_path: dim must be >= 1");
    const TimeGrid grid{steps, horizon};
    std::shared_ptr<const std::vector<double>> mat =
        method == SampleMethod::factorization ? detail::fbm_cholesky(grid, hurst)
                                              : detail::fbm_volterra_matrix(grid, hurst);
    DriverPath path(grid, dim);
    path.hurst = hurst;
    NormalStream rng(seed);
    std::vector<double> z(static_cast<std::size_t>(steps));
    for (int c = 0; c < dim; ++c) {
        for (int j = 0; j < steps; ++j) z[static_cast<std::size_t>(j)] = rng.normal();
        for (int k = 0; k < steps; ++k) {
            const double* row = mat->data() + static_cast<std::size_t>(k) * steps;
            double sum = 0.0;
            for (int j = 0; j <= k; ++j) sum += row[j] * z[static_cast<std::size_t>(j)];
            path.value(k + 1, c) = sum;
        }
    }
    return path;
}

// ---------------------------------------------------------------------------
// Step functions, the H inner product and the Cameron-Martin lift
// ---------------------------------------------------------------------------

/// Piecewise-constant R^d-valued function on the grid cells [t_k, t_{k+1}).
struct StepFunction {
    TimeGrid grid;
    int dim = 1;
    std::vector<double> values;  // [k * dim + i], k = 0..steps-1

    StepFunction() = default;
    StepFunction(TimeGrid g, int d)
        : grid(g), dim(d), values(static_cast<std::size_t>(g.steps) * d, 0.0) {}

    double value(int k, int i) const { return values[static_cast<std::size_t>(k) * dim + i]; }
    double& value(int k, int i) { return values[static_cast<std::size_t>(k) * dim + i]; }

    /// 1_{[0,t]} e_i with t = grid.time(t_index).
    static StepFunction indicator(TimeGrid g, int d, int component, int t_index) {
        StepFunction h(g, d);
        for (int k = 0; k < t_index; ++k) h.value(k, component) = 1.0;
        return h;
    }
};

namespace detail {

/// Covariance of grid increments, Q_{kl} = E[dB_k dB_l]; the a^{2H}, b^{2H}
/// terms of R_H cancel in the rectangle sum, leaving only gap powers.
inline std::shared_ptr<const std::vector<double>> increment_covariance(const TimeGrid& grid,
                                                                       double hurst) {
    static std::mutex mu;
    static std::map<std::tuple<int, double, double>, std::shared_ptr<const std::vector<double>>>
        cache;
    const auto key = std::make_tuple(grid.steps, hurst, grid.horizon);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    const int m = grid.steps;
    const double h2 = 2.0 * hurst;
    std::vector<double> q(static_cast<std::size_t>(m) * m, 0.0);
    auto gp = [&](int a, int b) { return std::pow(std::abs(grid.time(a) - grid.time(b)), h2); };
    for (int k = 0; k < m; ++k) {
        for (int l = 0; l <= k; ++l) {
            const double v = 0.5 * (gp(k + 1, l) + gp(k, l + 1) - gp(k + 1, l + 1) - gp(k, l));
            q[static_cast<std::size_t>(k) * m + l] = v;
            q[static_cast<std::size_t>(l) * m + k] = v;
        }
    }
    auto ptr = std::make_shared<const std::vector<double>>(std::move(q));
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(key, ptr);
    return ptr;
}

}  // namespace detail

/// Semi-inner product on the Hilbert space generated by indicators,
/// <1_{[0,t]} e_i, 1_{[0,s]} e_j> = R_H(s,t) delta_{ij}, extended bilinearly
/// to step functions through increment covariances.
inline double h_inner_product(const StepFunction& h1, const StepFunction& h2, double hurst) {
    if (!(h1.grid == h2.grid) || h1.dim != h2.dim)
        throw std::invalid_argument("h_inner_product: step functions must share the grid");
    auto q = detail::increment_covariance(h1.grid, hurst);
    const int m = h1.grid.steps;
    double sum = 0.0;
    for (int i = 0; i < h1.dim; ++i) {
        for (int k = 0; k < m; ++k) {
            const double a = h1.value(k, i);
            if (a == 0.0) continue;
            const double* row = q->data() + static_cast<std::size_t>(k) * m;
            double inner = 0.0;
            for (int l = 0; l < m; ++l) inner += row[l] * h2.value(l, i);
            sum += a * inner;
        }
    }
    return sum;
}

inline double h_norm(const StepFunction& h, double hurst) {
    return std::sqrt(std::max(0.0, h_inner_product(h, h, hurst)));
}

/// Cameron-Martin lift R_H h = int_0^. K(.,s) [K* h](s) ds evaluated on the
/// grid. For step functions [K* h](s) = sum_k a_k (K(t_{k+1},s) - K(t_k,s))
/// over cells right of s; this is the r-integral of h_r d_r K(r,s) carried
/// out exactly across the jumps.
inline DriverPath cameron_martin_lift(const StepFunction& h, double hurst) {
    const auto& kernel = detail::volterra_kernel_for(hurst);
    const TimeGrid grid = h.grid;
    const int m = grid.steps;
    const int d = h.dim;
    const int q_order = 8;
    const auto& rule = gauss_legendre_rule(q_order);

    // Fixed per-cell quadrature nodes in s shared by all lift targets.
    std::vector<double> s_nodes(static_cast<std::size_t>(m) * q_order);
    std::vector<double> s_weights(static_cast<std::size_t>(m) * q_order);
    for (int c = 0; c < m; ++c) {
        const double a = grid.time(c), b = grid.time(c + 1);
        for (int qi = 0; qi < q_order; ++qi) {
            s_nodes[static_cast<std::size_t>(c) * q_order + qi] =
                0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[qi];
            s_weights[static_cast<std::size_t>(c) * q_order + qi] =
                0.5 * (b - a) * rule.weights[qi];
        }
    }

    // [K* h] at every s node, one value per component.
    const double p = hurst - 0.5;
    std::vector<double> kstar(static_cast<std::size_t>(m) * q_order * d, 0.0);
    for (int c = 0; c < m; ++c) {
        for (int qi = 0; qi < q_order; ++qi) {
            const double s = s_nodes[static_cast<std::size_t>(c) * q_order + qi];
            for (int i = 0; i < d; ++i) {
                double acc = 0.0;
                // a_c K(t_{c+1}, s): integral from s itself (w from 0)
                if (h.value(c, i) != 0.0) {
                    acc += h.value(c, i) *
                           detail::volterra_core(grid.time(c + 1), s, hurst, q_order);
                }
                for (int k = c + 1; k < m; ++k) {
                    const double a_k = h.value(k, i);
                    if (a_k == 0.0) continue;
                    const double w_lo = std::pow(grid.time(k) - s, p);
                    acc += a_k * (detail::volterra_core(grid.time(k + 1), s, hurst, q_order, w_lo));
                }
                kstar[(static_cast<std::size_t>(c) * q_order + qi) * d + i] =
                    kernel.constant() * std::pow(s, 0.5 - hurst) * acc;
            }
        }
    }

    DriverPath out(grid, d);
    for (int ti = 1; ti <= m; ++ti) {
        const double t = grid.time(ti);
        for (int c = 0; c < ti; ++c) {
            for (int qi = 0; qi < q_order; ++qi) {
                const std::size_t idx = static_cast<std::size_t>(c) * q_order + qi;
                const double s = s_nodes[idx];
                const double k_ts = kernel(t, s);
                for (int i = 0; i < d; ++i)
                    out.value(ti, i) += s_weights[idx] * k_ts * kstar[idx * d + i];
            }
        }
    }
    return out;
}

}  // namespace fracheat
