#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fracheat/fbm.hpp"
#include "fracheat/spectral_field.hpp"

namespace fracheat {

/// A time-indexed family of SpectralFields on a uniform grid.
struct FieldPath {
    TimeGrid grid;
    std::vector<SpectralField> fields;  // size steps + 1

    FieldPath() = default;
    FieldPath(TimeGrid g, int n_modes)
        : grid(g), fields(static_cast<std::size_t>(g.points()), SpectralField(n_modes)) {}

    int n_modes() const { return fields.empty() ? 0 : fields.front().n_modes(); }
    const SpectralField& at(int k) const { return fields[static_cast<std::size_t>(k)]; }
    SpectralField& at(int k) { return fields[static_cast<std::size_t>(k)]; }
    const SpectralField& back() const { return fields.back(); }

    FieldPath& operator*=(double a) {
        for (auto& f : fields) f *= a;
        return *this;
    }

    /// y_t = S_t phi for every grid time.
    static FieldPath semigroup_flow(TimeGrid g, const SpectralField& phi) {
        FieldPath y(g, phi.n_modes());
        for (int k = 0; k <= g.steps; ++k) y.at(k) = semigroup_apply(phi, g.time(k));
        return y;
    }
};

enum class RiemannFlavor { right_point, left_point };

/// Convolutional Riemann sum over a partition of [s,t],
///   sum_k S_{t - tau_{k+1}} z^i_{tau_{k+1}} [x^i_{tau_{k+1}} - x^i_{tau_k}],
/// summed over driver components i. The partition is an increasing list of
/// grid indices beginning at s and ending at t. right_point evaluates the
/// integrand at tau_{k+1} as in the defining sum; left_point at tau_k.
inline SpectralField conv_riemann_sum(std::span<const FieldPath> z, const DriverPath& x,
                                      int s_index, int t_index, std::span<const int> partition,
                                      RiemannFlavor flavor = RiemannFlavor::right_point) {
    if (static_cast<int>(z.size()) != x.dim)
        throw std::invalid_argument("conv_riemann_sum: integrand needs one FieldPath per component");
    for (const auto& zi : z)
        if (!(zi.grid == x.grid))
            throw std::invalid_argument("conv_riemann_sum: integrand and driver grids differ");
    if (!(s_index >= 0 && s_index < t_index && t_index <= x.grid.steps))
        throw std::invalid_argument("conv_riemann_sum: need grid indices s < t");
    if (partition.size() < 2 || partition.front() != s_index || partition.back() != t_index)
        throw std::invalid_argument("conv_riemann_sum: partition must run from s to t");
    for (std::size_t k = 0; k + 1 < partition.size(); ++k)
        if (partition[k] >= partition[k + 1])
            throw std::invalid_argument("conv_riemann_sum: partition must be increasing");

    const int n = z[0].n_modes();
    const double t = x.grid.time(t_index);
    SpectralField acc(n);
    std::vector<double> decay(static_cast<std::size_t>(n));
    for (std::size_t k = 0; k + 1 < partition.size(); ++k) {
        const int lo = partition[k];
        const int hi = partition[k + 1];
        const int eval = flavor == RiemannFlavor::right_point ? hi : lo;
        const double gap = t - x.grid.time(eval);
        for (int m = 1; m <= n; ++m)
            decay[static_cast<std::size_t>(m - 1)] =
                gap == 0.0 ? 1.0 : std::exp(-laplacian_eigenvalue(m) * gap);
        for (int i = 0; i < x.dim; ++i) {
            double dx = 0.0;
            for (int j = lo; j < hi; ++j) dx += x.increment(j, i);
            if (dx == 0.0) continue;
            const auto& zf = z[static_cast<std::size_t>(i)].at(eval);
            for (int m = 0; m < n; ++m)
                acc.coeffs[static_cast<std::size_t>(m)] +=
                    dx * decay[static_cast<std::size_t>(m)] * zf.coeffs[static_cast<std::size_t>(m)];
        }
    }
    return acc;
}

/// Single-component convenience overload.
inline SpectralField conv_riemann_sum(const FieldPath& z, const DriverPath& x, int s_index,
                                      int t_index, std::span<const int> partition,
                                      RiemannFlavor flavor = RiemannFlavor::right_point) {
    return conv_riemann_sum(std::span<const FieldPath>(&z, 1), x, s_index, t_index, partition,
                            flavor);
}

struct ConvIntegral {
    SpectralField value;
    bool converged = false;
    int levels = 0;
    double last_delta = 0.0;
};

namespace detail {

inline std::vector<int> dyadic_partition(int s_index, int t_index, int pieces) {
    std::vector<int> part;
    part.reserve(static_cast<std::size_t>(pieces) + 1);
    part.push_back(s_index);
    for (int k = 1; k <= pieces; ++k) {
        const int idx = s_index + static_cast<int>(
            std::llround(static_cast<double>(k) * (t_index - s_index) / pieces));
        if (idx > part.back()) part.push_back(idx);
    }
    return part;
}

}  // namespace detail

/// Young convolutional integral int_s^t S_{t-u} z_u dx_u by dyadic partition
/// refinement of the right-point Riemann sums, capped at the driver grid
/// resolution. If the tolerance is not met before the cap, the finest-grid
/// value is returned with converged = false.
inline ConvIntegral conv_integral(std::span<const FieldPath> z, const DriverPath& x, int s_index,
                                  int t_index, double rel_tol = 1e-6) {
    ConvIntegral out;
    const int span = t_index - s_index;
    SpectralField prev;
    bool have_prev = false;
    for (int pieces = 1;; pieces *= 2) {
        const auto part = detail::dyadic_partition(s_index, t_index, std::min(pieces, span));
        SpectralField cur = conv_riemann_sum(z, x, s_index, t_index, part);
        ++out.levels;
        if (have_prev) {
            out.last_delta = sobolev_norm(cur - prev, 0.0);
            const double scale = sobolev_norm(cur, 0.0);
            if (out.last_delta <= rel_tol * std::max(scale, 1e-300)) {
                out.value = std::move(cur);
                out.converged = true;
                return out;
            }
        }
        if (pieces >= span) {
            out.value = std::move(cur);
            out.converged = out.last_delta == 0.0;
            return out;
        }
        prev = std::move(cur);
        have_prev = true;
    }
}

inline ConvIntegral conv_integral(const FieldPath& z, const DriverPath& x, int s_index,
                                  int t_index, double rel_tol = 1e-6) {
    return conv_integral(std::span<const FieldPath>(&z, 1), x, s_index, t_index, rel_tol);
}

/// Time-regularity seminorms of a field path over a subinterval:
///   c0         sup_t ||y_t||_{B_alpha}
///   holder     sup_{s<t} ||y_t - y_s||_{B_alpha} / (t-s)^kappa
///   hat_holder sup_{s<t} ||y_t - S_{t-s} y_s||_{B_alpha} / (t-s)^kappa
struct PathNorms {
    double c0 = 0.0;
    double holder = 0.0;
    double hat_holder = 0.0;

    double hat_c0() const { return c0 + hat_holder; }
};

inline PathNorms path_norms(const FieldPath& y, int a_index, int b_index, double kappa,
                            double alpha) {
    if (!(a_index >= 0 && a_index <= b_index && b_index <= y.grid.steps))
        throw std::invalid_argument("path_norms: bad subinterval");
    const int n = y.n_modes();
    std::vector<double> w(static_cast<std::size_t>(n));
    for (int m = 1; m <= n; ++m)
        w[static_cast<std::size_t>(m - 1)] =
            alpha == 0.0 ? 1.0 : std::pow(laplacian_eigenvalue(m), 2.0 * alpha);
    // decay table for every gap that occurs on the subinterval
    const int gaps = b_index - a_index;
    std::vector<double> decay(static_cast<std::size_t>(gaps + 1) * n, 1.0);
    for (int g = 1; g <= gaps; ++g) {
        const double dt = y.grid.dt() * g;
        for (int m = 1; m <= n; ++m)
            decay[static_cast<std::size_t>(g) * n + (m - 1)] =
                std::exp(-laplacian_eigenvalue(m) * dt);
    }
    PathNorms out;
    for (int i = a_index; i <= b_index; ++i) {
        double sq = 0.0;
        const auto& ci = y.at(i).coeffs;
        for (int m = 0; m < n; ++m) sq += w[static_cast<std::size_t>(m)] * ci[m] * ci[m];
        out.c0 = std::max(out.c0, std::sqrt(sq));
        for (int j = i + 1; j <= b_index; ++j) {
            const auto& cj = y.at(j).coeffs;
            const double* dec = &decay[static_cast<std::size_t>(j - i) * n];
            double sq_plain = 0.0;
            double sq_hat = 0.0;
            for (int m = 0; m < n; ++m) {
                const double d1 = cj[m] - ci[m];
                const double d2 = cj[m] - dec[m] * ci[m];
                sq_plain += w[static_cast<std::size_t>(m)] * d1 * d1;
                sq_hat += w[static_cast<std::size_t>(m)] * d2 * d2;
            }
            const double denom = std::pow(y.grid.dt() * (j - i), kappa);
            out.holder = std::max(out.holder, std::sqrt(sq_plain) / denom);
            out.hat_holder = std::max(out.hat_holder, std::sqrt(sq_hat) / denom);
        }
    }
    return out;
}

inline PathNorms path_norms(const FieldPath& y, double kappa, double alpha) {
    return path_norms(y, 0, y.grid.steps, kappa, alpha);
}

}  // namespace fracheat
