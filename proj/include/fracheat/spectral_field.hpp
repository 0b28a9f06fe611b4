#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracheat {

/// Dirichlet-Laplacian eigenvalue for the sine mode e_n, n >= 1.
inline double laplacian_eigenvalue(int n) {
    return std::numbers::pi * std::numbers::pi * static_cast<double>(n) * static_cast<double>(n);
}

/// A function on (0,1) represented by its first N sine-basis coefficients,
/// y = sum_n y^n e_n with e_n(xi) = sqrt(2) sin(pi n xi).
struct SpectralField {
    std::vector<double> coeffs;

    SpectralField() = default;
    explicit SpectralField(int n_modes) : coeffs(static_cast<std::size_t>(n_modes), 0.0) {}
    explicit SpectralField(std::vector<double> c) : coeffs(std::move(c)) {}

    int n_modes() const { return static_cast<int>(coeffs.size()); }

    static SpectralField zero(int n_modes) { return SpectralField(n_modes); }

    /// The basis element e_n (1-based mode index).
    static SpectralField basis(int n_modes, int n) {
        SpectralField f(n_modes);
        if (n < 1 || n > n_modes) throw std::invalid_argument("basis: mode index out of range");
        f.coeffs[static_cast<std::size_t>(n - 1)] = 1.0;
        return f;
    }

    bool all_finite() const {
        for (double c : coeffs)
            if (!std::isfinite(c)) return false;
        return true;
    }

    SpectralField& operator+=(const SpectralField& o) {
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
        return *this;
    }
    SpectralField& operator-=(const SpectralField& o) {
        for (std::size_t i = 0; i < coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
        return *this;
    }
    SpectralField& operator*=(double a) {
        for (double& c : coeffs) c *= a;
        return *this;
    }
};

inline SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
inline SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
inline SpectralField operator*(double a, SpectralField f) { return f *= a; }

/// acc += a * f
inline void axpy(double a, const SpectralField& f, SpectralField& acc) {
    for (std::size_t i = 0; i < f.coeffs.size(); ++i) acc.coeffs[i] += a * f.coeffs[i];
}

/// Fractional Sobolev norm (sum_n lambda_n^{2 alpha} (y^n)^2)^{1/2}.
inline double sobolev_norm(const SpectralField& f, double alpha) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("sobolev_norm: alpha must be >= 0");
    double sum = 0.0;
    for (int n = 1; n <= f.n_modes(); ++n) {
        const double c = f.coeffs[static_cast<std::size_t>(n - 1)];
        if (alpha == 0.0) {
            sum += c * c;
        } else {
            sum += std::pow(laplacian_eigenvalue(n), 2.0 * alpha) * c * c;
        }
    }
    return std::sqrt(sum);
}

/// Heat semigroup S_t: coefficient-wise decay e^{-lambda_n t}.
inline SpectralField semigroup_apply(const SpectralField& f, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup_apply: t must be >= 0");
    if (t == 0.0) return f;
    SpectralField out(f.n_modes());
    for (int n = 1; n <= f.n_modes(); ++n) {
        out.coeffs[static_cast<std::size_t>(n - 1)] =
            std::exp(-laplacian_eigenvalue(n) * t) * f.coeffs[static_cast<std::size_t>(n - 1)];
    }
    return out;
}

/// Pointwise value sum_n y^n sqrt(2) sin(pi n xi), xi in (0,1).
inline double evaluate(const SpectralField& f, double xi) {
    if (!(xi > 0.0 && xi < 1.0)) throw std::domain_error("evaluate: xi must lie in (0,1)");
    double sum = 0.0;
    for (int n = 1; n <= f.n_modes(); ++n) {
        sum += f.coeffs[static_cast<std::size_t>(n - 1)] *
               std::numbers::sqrt2 * std::sin(std::numbers::pi * n * xi);
    }
    return sum;
}

namespace detail {

/// Precomputed sine tables for the N-point collocation grid and the
/// oversampled (2N+1)-point grid used for de-aliased pointwise maps.
struct GridTables {
    int n_modes = 0;   // N
    int n_fine = 0;    // 2N+1
    std::vector<double> points;       // xi_j = (j+1)/(N+1), j = 0..N-1
    std::vector<double> fine_points;  // (j+1)/(2N+2), j = 0..2N
    std::vector<double> basis;        // [n*N + j]      = e_{n+1}(xi_j), n < N
    std::vector<double> fine_basis;   // [n*n_fine + j] = e_{n+1}(fine_j), n < N

    explicit GridTables(int n) : n_modes(n), n_fine(2 * n + 1) {
        points.resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) points[j] = static_cast<double>(j + 1) / (n + 1);
        fine_points.resize(static_cast<std::size_t>(n_fine));
        for (int j = 0; j < n_fine; ++j)
            fine_points[j] = static_cast<double>(j + 1) / (n_fine + 1);
        basis.resize(static_cast<std::size_t>(n) * n);
        for (int m = 0; m < n; ++m)
            for (int j = 0; j < n; ++j)
                basis[static_cast<std::size_t>(m) * n + j] =
                    std::numbers::sqrt2 * std::sin(std::numbers::pi * (m + 1) * points[j]);
        fine_basis.resize(static_cast<std::size_t>(n) * n_fine);
        for (int m = 0; m < n; ++m)
            for (int j = 0; j < n_fine; ++j)
                fine_basis[static_cast<std::size_t>(m) * n_fine + j] =
                    std::numbers::sqrt2 * std::sin(std::numbers::pi * (m + 1) * fine_points[j]);
    }
};

inline std::shared_ptr<const GridTables> grid_tables(int n_modes) {
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const GridTables>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n_modes);
    if (it == cache.end()) {
        it = cache.emplace(n_modes, std::make_shared<GridTables>(n_modes)).first;
    }
    return it->second;
}

}  // namespace detail

/// Collocation grid xi_j = j/(N+1), j = 1..N, with quadrature weight 1/(N+1).
/// The N x N sine matrix is orthogonal up to the factor (N+1)/2, so the
/// transform pair below is exact for band-limited fields.
class CollocationGrid {
  public:
    explicit CollocationGrid(int n_modes) : tables_(detail::grid_tables(n_modes)) {
        if (n_modes < 1) throw std::invalid_argument("CollocationGrid: n_modes must be >= 1");
    }

    int n_modes() const { return tables_->n_modes; }
    const std::vector<double>& points() const { return tables_->points; }
    double weight() const { return 1.0 / (tables_->n_modes + 1); }

    /// Coefficients -> grid values.
    std::vector<double> to_values(const SpectralField& f) const {
        if (f.n_modes() != n_modes())
            throw std::invalid_argument("collocation: field size does not match grid");
        const int n = n_modes();
        std::vector<double> v(static_cast<std::size_t>(n), 0.0);
        for (int m = 0; m < n; ++m) {
            const double c = f.coeffs[static_cast<std::size_t>(m)];
            if (c == 0.0) continue;
            const double* row = &tables_->basis[static_cast<std::size_t>(m) * n];
            for (int j = 0; j < n; ++j) v[j] += c * row[j];
        }
        return v;
    }

    /// Grid values -> coefficients (exact inverse of to_values).
    SpectralField to_field(std::span<const double> values) const {
        const int n = n_modes();
        if (static_cast<int>(values.size()) != n)
            throw std::invalid_argument("collocation: value count does not match grid");
        SpectralField f(n);
        const double w = weight();
        for (int m = 0; m < n; ++m) {
            const double* row = &tables_->basis[static_cast<std::size_t>(m) * n];
            double sum = 0.0;
            for (int j = 0; j < n; ++j) sum += row[j] * values[j];
            f.coeffs[static_cast<std::size_t>(m)] = w * sum;
        }
        return f;
    }

    std::shared_ptr<const detail::GridTables> tables() const { return tables_; }

  private:
    std::shared_ptr<const detail::GridTables> tables_;
};

namespace detail {

/// Evaluate a field on the oversampled (2N+1)-point grid.
inline void to_fine_values(const GridTables& g, const SpectralField& f, std::span<double> out) {
    const int nf = g.n_fine;
    for (int j = 0; j < nf; ++j) out[j] = 0.0;
    for (int m = 0; m < g.n_modes; ++m) {
        const double c = f.coeffs[static_cast<std::size_t>(m)];
        if (c == 0.0) continue;
        const double* row = &g.fine_basis[static_cast<std::size_t>(m) * nf];
        for (int j = 0; j < nf; ++j) out[j] += c * row[j];
    }
}

/// Oversampled grid values -> first N sine coefficients. Modes above N are
/// discarded, which removes the dominant aliasing of quadratic terms.
inline void fine_values_to_field(const GridTables& g, std::span<const double> vals,
                                 SpectralField& out) {
    const int nf = g.n_fine;
    const double w = 1.0 / (nf + 1);
    for (int m = 0; m < g.n_modes; ++m) {
        const double* row = &g.fine_basis[static_cast<std::size_t>(m) * nf];
        double sum = 0.0;
        for (int j = 0; j < nf; ++j) sum += row[j] * vals[j];
        out.coeffs[static_cast<std::size_t>(m)] = w * sum;
    }
}

}  // namespace detail

/// Pointwise (Nemytskii) map on an oversampled grid: evaluates the inputs at
/// the 2N+1 collocation points, applies g pointwise, transforms back and
/// truncates to N modes. Covers compositions f(y) and products phi.psi.
template <class G>
SpectralField pointwise_apply(std::span<const SpectralField> fields, G&& g) {
    if (fields.empty()) throw std::invalid_argument("pointwise_apply: no input fields");
    const int n = fields[0].n_modes();
    for (const auto& f : fields)
        if (f.n_modes() != n)
            throw std::invalid_argument("pointwise_apply: inputs must share n_modes");
    auto tables = detail::grid_tables(n);
    const int nf = tables->n_fine;
    const std::size_t k = fields.size();
    std::vector<double> vals(k * static_cast<std::size_t>(nf));
    for (std::size_t i = 0; i < k; ++i)
        detail::to_fine_values(*tables, fields[i],
                               std::span<double>(&vals[i * nf], static_cast<std::size_t>(nf)));
    std::vector<double> out_vals(static_cast<std::size_t>(nf));
    std::vector<double> args(k);
    for (int j = 0; j < nf; ++j) {
        for (std::size_t i = 0; i < k; ++i) args[i] = vals[i * nf + j];
        out_vals[static_cast<std::size_t>(j)] = g(std::span<const double>(args));
    }
    SpectralField out(n);
    detail::fine_values_to_field(*tables, out_vals, out);
    return out;
}

/// Convenience: generic pointwise map with a type-erased function.
inline SpectralField pointwise_map(std::span<const SpectralField> fields,
                                   const std::function<double(std::span<const double>)>& g) {
    return pointwise_apply(fields, g);
}

template <class G>
SpectralField pointwise_unary(const SpectralField& f, G&& g) {
    std::span<const SpectralField> one(&f, 1);
    return pointwise_apply(one, [&](std::span<const double> v) { return g(v[0]); });
}

template <class G>
SpectralField pointwise_binary(const SpectralField& a, const SpectralField& b, G&& g) {
    SpectralField in[2] = {a, b};
    return pointwise_apply(std::span<const SpectralField>(in, 2),
                           [&](std::span<const double> v) { return g(v[0], v[1]); });
}

template <class G>
SpectralField pointwise_ternary(const SpectralField& a, const SpectralField& b,
                                const SpectralField& c, G&& g) {
    SpectralField in[3] = {a, b, c};
    return pointwise_apply(std::span<const SpectralField>(in, 3),
                           [&](std::span<const double> v) { return g(v[0], v[1], v[2]); });
}

/// Sup-norm proxy: max |y(xi)| over a 4N-point uniform grid. Band-limited
/// fields cannot oscillate faster than mode N, so this resolves the sup.
inline double sup_norm(const SpectralField& f) {
    const int n = f.n_modes();
    const int m = 4 * n;
    double best = 0.0;
    for (int j = 1; j < m; ++j) {
        const double xi = static_cast<double>(j) / m;
        best = std::max(best, std::abs(evaluate(f, xi)));
    }
    return best;
}

}  // namespace fracheat
