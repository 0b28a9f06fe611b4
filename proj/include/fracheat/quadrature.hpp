#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fracheat {

/// Gauss-Legendre rule on [-1,1]: nodes and weights of a given order.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

inline GaussLegendreRule build_gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration on P_n starting from the Chebyshev-like guess.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= order; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

}  // namespace detail

/// Shared Gauss-Legendre rule of the requested order (cached, thread-safe).
inline const GaussLegendreRule& gauss_legendre_rule(int order) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<GaussLegendreRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(order);
    if (it == cache.end()) {
        it = cache.emplace(order, std::make_unique<GaussLegendreRule>(
                                      detail::build_gauss_legendre(order))).first;
    }
    return *it->second;
}

/// Fixed-order Gauss-Legendre integral of f over [a,b].
template <class F>
double gauss_legendre(F&& f, double a, double b, int order) {
    const auto& rule = gauss_legendre_rule(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
    }
    return half * sum;
}

/// Tanh-sinh (double exponential) integral of f over (a,b).
///
/// Nodes cluster doubly-exponentially at the endpoints, so integrable
/// algebraic endpoint singularities are handled at near machine accuracy.
/// f is only evaluated strictly inside (a,b).
template <class F>
double tanh_sinh(F&& f, double a, double b, double step = 0.05) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double half_pi = 0.5 * std::numbers::pi;
    double sum = 0.0;
    // k = 0 node
    sum += half_pi * f(mid);
    for (int k = 1;; ++k) {
        const double t = k * step;
        const double s = std::sinh(t);
        const double u = std::tanh(half_pi * s);
        if (1.0 - u < 1e-15) break;
        const double w = half_pi * std::cosh(t) /
                         (std::cosh(half_pi * s) * std::cosh(half_pi * s));
        const double xp = mid + half * u;
        const double xm = mid - half * u;
        if (xp < b) sum += w * f(xp);
        if (xm > a) sum += w * f(xm);
        if (k > 4000) break;
    }
    return sum * half * step;
}

/// Composite Simpson rule with n (even) panels; plain smooth-integrand helper.
template <class F>
double simpson(F&& f, double a, double b, int n) {
    if (n % 2 != 0) ++n;
    const double h = (b - a) / n;
    double sum = f(a) + f(b);
    for (int i = 1; i < n; ++i) sum += f(a + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    return sum * h / 3.0;
}

/// Bracketing bisection for a scalar root of f on [lo,hi]; f(lo), f(hi) must
/// have opposite signs.
template <class F>
double bisect_root(F&& f, double lo, double hi, double tol = 1e-14, int max_iter = 200) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw std::invalid_argument("bisect_root: endpoints do not bracket a root");
    }
    for (int it = 0; it < max_iter && hi - lo > tol * std::max(1.0, std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace fracheat
