#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "fracheat/rng.hpp"
#include "fracheat/spectral_field.hpp"
#include "fracheat/young.hpp"

namespace testutil {

/// Independent fine-quadrature oracle for sine coefficients
/// b_n = int_0^1 g(xi) sqrt(2) sin(pi n xi) d xi (composite Simpson).
template <class G>
double sine_coefficient_oracle(G&& g, int n, int panels = 20000) {
    const double h = 1.0 / panels;
    double sum = 0.0;
    auto f = [&](double xi) {
        return g(xi) * std::numbers::sqrt2 * std::sin(std::numbers::pi * n * xi);
    };
    for (int i = 0; i <= panels; ++i) {
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * f(i * h);
    }
    return sum * h / 3.0;
}

inline fracheat::SpectralField random_field(int n_modes, fracheat::NormalStream& rng,
                                            double decay = 1.5, double amp = 1.0) {
    fracheat::SpectralField f(n_modes);
    for (int n = 1; n <= n_modes; ++n)
        f.coeffs[static_cast<std::size_t>(n - 1)] =
            amp * rng.normal() * std::pow(static_cast<double>(n), -decay);
    return f;
}

/// Plain Jacobi eigenvalue sweep for small symmetric matrices (test oracle).
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-18) continue;
                const double app = a[p * n + p];
                const double aqq = a[q * n + q];
                const double theta = 0.5 * std::atan2(2.0 * apq, aqq - app);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a[i * n + i];
    return ev;
}

/// Least-squares slope of y against x.
inline double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Relative difference against the larger magnitude.
inline double rel_diff(double a, double b, double floor = 1e-12) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

}  // namespace testutil
