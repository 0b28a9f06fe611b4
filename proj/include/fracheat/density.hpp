#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracheat/fbm.hpp"
#include "fracheat/malliavin.hpp"
#include "fracheat/parallel.hpp"
#include "fracheat/rng.hpp"
#include "fracheat/solver.hpp"

namespace fracheat {

/// Configuration for Monte-Carlo ensembles of the regularized equation.
struct ExperimentConfig {
    int n_paths = 1000;
    std::uint64_t seed = 42;
    SolverConfig solver;
    double hurst = 0.75;
    int dimension = 1;
    double xi = 0.5;
    std::string family = "bounded_below";  // bounded_below | constant | zero
    double lambda0 = 0.5;
    double family_scale = 1.0;
    std::string kernel = "averaging";  // averaging | gaussian | identity
    double kernel_sigma = 0.1;
    double phi_amplitude = 0.01;
    bool phi_jitter = false;
    std::vector<std::string> bound_ids;
    double kde_bandwidth = 0.0;  // 0 selects the rule of thumb
    bool malliavin_summaries = false;
    int malliavin_stride = 4;
    int threads = 0;

    void validate() const {
        solver.validate();
        if (n_paths < 2) throw std::invalid_argument("ExperimentConfig: n_paths must be >= 2");
        if (!(hurst > 0.5 && hurst < 1.0))
            throw std::invalid_argument("ExperimentConfig: hurst must lie in (1/2,1)");
        if (!(solver.gamma < hurst))
            throw std::invalid_argument("ExperimentConfig: gamma must be below hurst");
        if (!(xi > 0.0 && xi < 1.0))
            throw std::invalid_argument("ExperimentConfig: xi must lie in (0,1)");
        if (dimension < 1) throw std::invalid_argument("ExperimentConfig: dimension must be >= 1");
        if (family != "bounded_below" && family != "constant" && family != "zero")
            throw std::invalid_argument("ExperimentConfig: unknown coefficient family");
        if (kernel != "averaging" && kernel != "gaussian" && kernel != "identity")
            throw std::invalid_argument("ExperimentConfig: unknown kernel id");
        if (kde_bandwidth < 0.0)
            throw std::invalid_argument("ExperimentConfig: kde_bandwidth must be >= 0");
        if (malliavin_stride < 1 || solver.time_steps % malliavin_stride != 0)
            throw std::invalid_argument(
                "ExperimentConfig: malliavin_stride must divide time_steps");
        if (!(lambda0 >= 0.0))
            throw std::invalid_argument("ExperimentConfig: lambda0 must be >= 0");
        if (!(family_scale > 0.0))
            throw std::invalid_argument("ExperimentConfig: family_scale must be > 0");
    }

    NemytskiiFamily make_family() const {
        if (family == "constant") return NemytskiiFamily::constant(dimension, 1.0);
        if (family == "zero") return NemytskiiFamily::zero(dimension);
        return NemytskiiFamily::bounded_below(dimension, lambda0, family_scale);
    }

    KernelOperator make_kernel() const {
        if (kernel == "identity") return KernelOperator::identity();
        if (kernel == "gaussian") return KernelOperator::gaussian(solver.n_modes, kernel_sigma);
        return KernelOperator::averaging(solver.n_modes);
    }

    /// Deterministic smooth initial condition, coefficients amp * n^{-7}.
    SpectralField base_phi() const {
        SpectralField phi(solver.n_modes);
        for (int n = 1; n <= solver.n_modes; ++n)
            phi.coeffs[static_cast<std::size_t>(n - 1)] =
                phi_amplitude * std::pow(static_cast<double>(n), -7.0);
        return phi;
    }
};

struct EnsembleInvalid : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-path results; norms beyond the basics are filled only when the
/// requested bound ids / Malliavin summaries need them.
struct PathRecord {
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    double y1_at_xi = 0.0;
    double x_holder = 0.0;     // ||x||_gamma (all-pairs proxy)
    double phi_norm = 0.0;     // ||phi||_{B_{2+gamma}}
    double y_hat_holder = 0.0; // N[Y; hat-C^gamma(B_{2+gamma})]
    double z_c0 = 0.0;         // N[z; C^0(B_{2+gamma})], w_t = S_t psi
    double z_hat_holder = 0.0; // N[z; hat-C^gamma(B_{2+gamma})]
    double flow_holder = 0.0;  // max_i all-pairs gamma-Hoelder of s -> Psi_{1,s}
    double sewing_lhs = 0.0;
    double sewing_base = 0.0;
    std::optional<MalliavinMatrix> matrix;
};

struct EnsembleResult {
    ExperimentConfig config;
    std::vector<PathRecord> paths;
    int failures = 0;
    double psi_norm = 0.0;  // ||psi||_{B_{2+gamma}} used by the linear-equation records

    std::vector<double> samples() const {
        std::vector<double> out;
        out.reserve(paths.size());
        for (const auto& p : paths)
            if (!p.failed) out.push_back(p.y1_at_xi);
        return out;
    }

    std::vector<double> h_norms() const {
        std::vector<double> out;
        for (const auto& p : paths)
            if (!p.failed && p.matrix) out.push_back(malliavin_h_norm(*p.matrix));
        return out;
    }
};

namespace detail {

inline bool wants(const ExperimentConfig& cfg, const std::string& id) {
    return std::find(cfg.bound_ids.begin(), cfg.bound_ids.end(), id) != cfg.bound_ids.end();
}

/// Random smooth field with a prescribed B_{2+gamma} norm.
inline SpectralField random_phi(int n_modes, double target_norm, double alpha,
                                NormalStream& rng) {
    SpectralField phi(n_modes);
    for (int n = 1; n <= n_modes; ++n)
        phi.coeffs[static_cast<std::size_t>(n - 1)] =
            rng.normal() * std::pow(static_cast<double>(n), -7.0);
    const double norm = sobolev_norm(phi, alpha);
    if (norm > 0.0) phi *= target_norm / norm;
    return phi;
}

}  // namespace detail

/// Runs the Monte-Carlo ensemble of Y_t = S_t phi + int S_{t-u}(L(f_i(Y_u))) dB^i_u.
/// Deterministic given the master seed: path p uses derive_seed(seed, p).
/// Blow-ups are recorded per path; more than 1% failures invalidates the run.
inline EnsembleResult run_ensemble(const ExperimentConfig& cfg) {
    cfg.validate();
    const NemytskiiFamily family = cfg.make_family();
    const KernelOperator op = cfg.make_kernel();
    const double gamma = cfg.solver.gamma;
    const double alpha = 2.0 + gamma;
    const SpectralField phi_base = cfg.base_phi();

    const bool need_poly = detail::wants(cfg, "poly-4.10");
    const bool need_lin = detail::wants(cfg, "lin-4.14") || detail::wants(cfg, "lin-4.15");
    const bool need_flow = detail::wants(cfg, "flow-4.20");
    const bool need_sewing = detail::wants(cfg, "sewing-2.11");

    EnsembleResult result;
    result.config = cfg;
    result.paths.resize(static_cast<std::size_t>(cfg.n_paths));

    SpectralField psi = phi_base;
    psi *= 0.5;
    result.psi_norm = sobolev_norm(psi, alpha);

    parallel_for(static_cast<std::size_t>(cfg.n_paths), [&](std::size_t p) {
        PathRecord& rec = result.paths[p];
        rec.seed = derive_seed(cfg.seed, p);
        try {
            const DriverPath x = sample_fbm_path(cfg.solver.time_steps, cfg.hurst,
                                                 cfg.dimension, rec.seed,
                                                 SampleMethod::factorization,
                                                 cfg.solver.horizon);
            SpectralField phi = phi_base;
            if (cfg.phi_jitter) {
                NormalStream phi_rng(derive_seed(cfg.seed ^ 0x9067u, p));
                const double target = 2.0 + 6.0 * phi_rng.uniform();
                phi = detail::random_phi(cfg.solver.n_modes, target, alpha, phi_rng);
            }
            rec.phi_norm = sobolev_norm(phi, alpha);
            rec.x_holder = holder_norm(x, gamma);

            const FieldPath y = solve(phi, family, op, x, cfg.solver);
            rec.y1_at_xi = evaluate(y.back(), cfg.xi);
            if (need_poly) {
                rec.y_hat_holder = path_norms(y, gamma, alpha).hat_holder;
            }
            if (need_lin) {
                FieldPath w(x.grid, cfg.solver.n_modes);
                for (int k = 0; k <= x.grid.steps; ++k)
                    w.at(k) = semigroup_apply(psi, x.grid.time(k));
                const FieldPath z = solve_linear(w, y, family, op, x, 0);
                const PathNorms zn = path_norms(z, gamma, alpha);
                rec.z_c0 = zn.c0;
                rec.z_hat_holder = zn.hat_holder;
            }
            if (need_flow || cfg.malliavin_summaries) {
                const FlowTerminals terms =
                    flow_terminals(y, x, family, op, cfg.malliavin_stride, -1, 1);
                if (need_flow) {
                    double best = 0.0;
                    const int ms = terms.source_grid.steps;
                    for (int i = 0; i < terms.dim; ++i)
                        for (int a = 0; a <= ms; ++a)
                            for (int b = a + 1; b <= ms; ++b) {
                                const double gap =
                                    terms.source_grid.time(b) - terms.source_grid.time(a);
                                best = std::max(
                                    best, sobolev_norm(terms.field(b, i) - terms.field(a, i),
                                                       alpha) /
                                              std::pow(gap, gamma));
                            }
                    rec.flow_holder = best;
                }
                if (cfg.malliavin_summaries) {
                    MalliavinMatrix mat;
                    mat.xi = cfg.xi;
                    mat.hurst = cfg.hurst;
                    mat.source_grid = terms.source_grid;
                    mat.dim = terms.dim;
                    mat.entries.resize(
                        static_cast<std::size_t>(terms.source_grid.steps + 1) * terms.dim);
                    for (int k = 0; k <= terms.source_grid.steps; ++k)
                        for (int i = 0; i < terms.dim; ++i)
                            mat.entries[static_cast<std::size_t>(k) * terms.dim + i] =
                                evaluate(terms.field(k, i), cfg.xi);
                    rec.matrix = std::move(mat);
                }
            }
            if (need_sewing) {
                // synthetic integrand for the Young-map bound: two fixed field
                // shapes modulated by an independent rough scalar pair
                const DriverPath mod = sample_fbm_path(cfg.solver.time_steps, 0.55, 2,
                                                       derive_seed(cfg.seed ^ 0x5e11u, p),
                                                       SampleMethod::factorization,
                                                       cfg.solver.horizon);
                const double lambda = cfg.solver.kappa;
                const double alpha_shift = 0.2;
                SpectralField shape1 = SpectralField::basis(cfg.solver.n_modes, 1);
                SpectralField shape2 = SpectralField::basis(cfg.solver.n_modes, 2);
                shape2 *= 0.5;
                std::vector<FieldPath> z(static_cast<std::size_t>(cfg.dimension),
                                         FieldPath(x.grid, cfg.solver.n_modes));
                for (int i = 0; i < cfg.dimension; ++i)
                    for (int k = 0; k <= x.grid.steps; ++k) {
                        SpectralField f = shape1;
                        f *= 1.0 + 0.5 * mod.value(k, 0);
                        axpy(0.5 * mod.value(k, 1), shape2, f);
                        z[static_cast<std::size_t>(i)].at(k) = std::move(f);
                    }
                FieldPath ymap(x.grid, cfg.solver.n_modes);
                detail::SolveWorkspace ws(cfg.solver.n_modes, x.grid.dt());
                for (int k = 0; k < x.grid.steps; ++k) {
                    SpectralField acc = ymap.at(k);
                    ws.semigroup_step(acc);
                    for (int i = 0; i < cfg.dimension; ++i)
                        axpy(x.increment(k, i), z[static_cast<std::size_t>(i)].at(k + 1), acc);
                    ymap.at(k + 1) = std::move(acc);
                }
                rec.sewing_lhs = path_norms(ymap, gamma, lambda).hat_holder;
                double z_c0 = 0.0;
                double z_holder = 0.0;
                for (int i = 0; i < cfg.dimension; ++i) {
                    const PathNorms n_l =
                        path_norms(z[static_cast<std::size_t>(i)], cfg.solver.kappa, lambda);
                    const PathNorms n_la = path_norms(z[static_cast<std::size_t>(i)],
                                                      cfg.solver.kappa, lambda - alpha_shift);
                    z_c0 = std::max(z_c0, n_l.c0);
                    z_holder = std::max(z_holder, n_la.holder);
                }
                const double interval = std::pow(cfg.solver.horizon,
                                                 cfg.solver.kappa - alpha_shift);
                rec.sewing_base = rec.x_holder * (z_c0 + interval * z_holder);
            }
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.failure = e.what();
        }
    }, cfg.threads);

    for (const auto& p : result.paths)
        if (p.failed) ++result.failures;
    if (result.failures * 100 > cfg.n_paths)
        throw EnsembleInvalid("run_ensemble: " + std::to_string(result.failures) + " of " +
                              std::to_string(cfg.n_paths) + " paths failed (>1%)");
    return result;
}

// ---------------------------------------------------------------------------
// Kernel density estimation
// ---------------------------------------------------------------------------

struct DensityEstimate {
    std::vector<double> points;
    std::vector<double> density;
    double bandwidth = 0.0;
    int sample_count = 0;
    double mass = 0.0;  // trapezoid integral over the grid

    /// Linear interpolation of the estimate (0 outside the grid).
    double at(double x) const {
        if (points.size() < 2 || x <= points.front() || x >= points.back()) return 0.0;
        const double step = points[1] - points[0];
        const auto idx = static_cast<std::size_t>((x - points.front()) / step);
        const std::size_t j = std::min(idx, points.size() - 2);
        const double w = (x - points[j]) / step;
        return (1.0 - w) * density[j] + w * density[j + 1];
    }
};

/// Classical rule-of-thumb bandwidth 1.06 sigma n^{-1/5}.
inline double kde_rule_of_thumb(std::span<const double> samples) {
    const std::size_t n = samples.size();
    if (n < 2) throw std::invalid_argument("kde_rule_of_thumb: need >= 2 samples");
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= static_cast<double>(n - 1);
    const double sigma = std::sqrt(var);
    return 1.06 * std::max(sigma, 1e-12) * std::pow(static_cast<double>(n), -0.2);
}

/// Gaussian-kernel density estimate on an automatic grid spanning the samples
/// plus four bandwidths on each side.
inline DensityEstimate kde(std::span<const double> samples, double bandwidth,
                           int grid_points = 512) {
    if (samples.size() < 2) throw std::invalid_argument("kde: need >= 2 samples");
    if (!(bandwidth > 0.0)) throw std::invalid_argument("kde: bandwidth must be > 0");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn - 4.0 * bandwidth;
    const double hi = *mx + 4.0 * bandwidth;
    DensityEstimate est;
    est.bandwidth = bandwidth;
    est.sample_count = static_cast<int>(samples.size());
    est.points.resize(static_cast<std::size_t>(grid_points));
    est.density.resize(static_cast<std::size_t>(grid_points));
    const double step = (hi - lo) / (grid_points - 1);
    const double norm = 1.0 / (samples.size() * bandwidth * std::sqrt(2.0 * 3.14159265358979323846));
    for (int g = 0; g < grid_points; ++g) {
        const double x = lo + g * step;
        double sum = 0.0;
        for (double s : samples) {
            const double u = (x - s) / bandwidth;
            sum += std::exp(-0.5 * u * u);
        }
        est.points[static_cast<std::size_t>(g)] = x;
        est.density[static_cast<std::size_t>(g)] = norm * sum;
    }
    for (int g = 0; g + 1 < grid_points; ++g)
        est.mass += 0.5 * (est.density[g] + est.density[g + 1]) * step;
    return est;
}

// ---------------------------------------------------------------------------
// Bound stress tests (fit on half, validate on the held-out half)
// ---------------------------------------------------------------------------

struct BoundReport {
    std::string bound_id;
    double fit_a = 0.0;  // constant fits: the constant; envelopes: intercept
    double fit_b = 0.0;  // envelopes: slope in m = max(...)
    double coverage = 0.0;
    double max_ratio = 0.0;
    int train_count = 0;
    int validate_count = 0;
};

namespace detail {

struct BoundSample {
    double lhs = 0.0;
    double base = 0.0;  // constant fit: rhs base; envelope fit: unused
    double m = 0.0;     // envelope fit: max(||phi||^{1/2}, ||x||^{1/gamma})
};

/// Constant fit: C = max_train lhs/base; covered iff lhs <= C * base.
inline BoundReport fit_constant(const std::string& id, const std::vector<BoundSample>& train,
                                const std::vector<BoundSample>& val) {
    BoundReport rep;
    rep.bound_id = id;
    for (const auto& s : train)
        rep.fit_a = std::max(rep.fit_a, s.lhs / std::max(s.base, 1e-300));
    int covered = 0;
    for (const auto& s : val) {
        const double ratio = s.lhs / std::max(rep.fit_a * s.base, 1e-300);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        // absolute slack keeps degenerate ensembles (lhs at roundoff) covered
        if (s.lhs <= rep.fit_a * s.base + 1e-12) ++covered;
    }
    rep.coverage = val.empty() ? 1.0 : static_cast<double>(covered) / val.size();
    rep.train_count = static_cast<int>(train.size());
    rep.validate_count = static_cast<int>(val.size());
    return rep;
}

/// Linear upper envelope of log lhs against m: least squares, slope clamped
/// at 0, intercept shifted to cover every training point.
inline BoundReport fit_envelope(const std::string& id, const std::vector<BoundSample>& train,
                                const std::vector<BoundSample>& val) {
    BoundReport rep;
    rep.bound_id = id;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& s : train) {
        const double y = std::log(std::max(s.lhs, 1e-300));
        sx += s.m;
        sy += y;
        sxx += s.m * s.m;
        sxy += s.m * y;
    }
    const double n = static_cast<double>(train.size());
    const double denom = n * sxx - sx * sx;
    double slope = denom > 1e-12 ? (n * sxy - sx * sy) / denom : 0.0;
    slope = std::max(slope, 0.0);
    double intercept = -1e300;
    for (const auto& s : train)
        intercept = std::max(intercept, std::log(std::max(s.lhs, 1e-300)) - slope * s.m);
    rep.fit_a = intercept;
    rep.fit_b = slope;
    int covered = 0;
    for (const auto& s : val) {
        const double bound = intercept + slope * s.m;
        const double ratio = std::log(std::max(s.lhs, 1e-300)) - bound;
        rep.max_ratio = std::max(rep.max_ratio, std::exp(ratio));
        if (ratio <= 1e-9) ++covered;
    }
    rep.coverage = val.empty() ? 1.0 : static_cast<double>(covered) / val.size();
    rep.train_count = static_cast<int>(train.size());
    rep.validate_count = static_cast<int>(val.size());
    return rep;
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 gen(splitmix64(seed ^ 0xb0c4d5e6f7a8b9caULL));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(gen() % i);
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace detail

/// Fit-and-validate stress test of one of the a-priori bounds. The constant
/// (or log-linear envelope) is fitted on a random half of the ensemble and
/// the report carries the held-out coverage plus the max LHS/RHS ratio.
inline BoundReport verify_bound(const std::string& bound_id, const EnsembleResult& ensemble) {
    const ExperimentConfig& cfg = ensemble.config;
    const double gamma = cfg.solver.gamma;
    std::vector<detail::BoundSample> all;
    for (const auto& rec : ensemble.paths) {
        if (rec.failed) continue;
        detail::BoundSample s;
        const double m =
            std::max(std::pow(rec.x_holder, 1.0 / gamma), std::sqrt(rec.phi_norm));
        s.m = m;
        if (bound_id == "poly-4.10") {
            s.lhs = rec.y_hat_holder;
            s.base = (1.0 + rec.x_holder) * std::pow(m, 1.0 - gamma);
        } else if (bound_id == "lin-4.14") {
            s.lhs = rec.z_c0 / std::max(ensemble.psi_norm, 1e-300);
        } else if (bound_id == "lin-4.15") {
            s.lhs = rec.z_hat_holder / std::max(ensemble.psi_norm * m, 1e-300);
        } else if (bound_id == "flow-4.20") {
            s.lhs = rec.flow_holder;
        } else if (bound_id == "sewing-2.11") {
            s.lhs = rec.sewing_lhs;
            s.base = rec.sewing_base;
        } else {
            throw std::invalid_argument("verify_bound: unknown bound id " + bound_id);
        }
        all.push_back(s);
    }
    if (all.size() < 4) throw std::invalid_argument("verify_bound: ensemble too small");
    const auto order = detail::shuffled_indices(all.size(), cfg.seed);
    std::vector<detail::BoundSample> train, val;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < order.size() / 2 ? train : val).push_back(all[order[i]]);
    const bool constant_fit = bound_id == "poly-4.10" || bound_id == "sewing-2.11";
    return constant_fit ? detail::fit_constant(bound_id, train, val)
                        : detail::fit_envelope(bound_id, train, val);
}

// ---------------------------------------------------------------------------
// Inverse moments and the small-ball diagnostic
// ---------------------------------------------------------------------------

struct InverseMomentEstimate {
    double value = 0.0;
    double half_value = 0.0;
    bool stable = false;
};

/// Sample mean of x^{-p} with a half-sample stability flag.
inline InverseMomentEstimate inverse_moment_estimate(std::span<const double> h_norms, double p) {
    if (!(p >= 0.0)) throw std::invalid_argument("inverse_moment_estimate: p must be >= 0");
    if (h_norms.empty()) throw std::invalid_argument("inverse_moment_estimate: empty sample");
    for (double x : h_norms)
        if (!(x > 0.0))
            throw std::invalid_argument(
                "inverse_moment_estimate: degenerate derivative (nonpositive H-norm)");
    InverseMomentEstimate est;
    double sum = 0.0;
    double half_sum = 0.0;
    const std::size_t half = h_norms.size() / 2;
    for (std::size_t i = 0; i < h_norms.size(); ++i) {
        const double v = std::pow(h_norms[i], -p);
        sum += v;
        if (i < half) half_sum += v;
    }
    est.value = sum / static_cast<double>(h_norms.size());
    est.half_value = half == 0 ? est.value : half_sum / static_cast<double>(half);
    est.stable = std::abs(est.half_value - est.value) <= 0.25 * std::abs(est.value);
    return est;
}

struct SmallBallRow {
    double epsilon = 0.0;
    double p_sup_small = 0.0;    // P[ ||D||_inf < eps^alpha ]
    double p_holder_large = 0.0; // P[ ||D||_beta > eps^{-alpha} ]
};

/// Empirical frequencies of the two events in the small-ball split, using the
/// sup over the source grid and the all-pairs beta-Hoelder constant of
/// s -> Psi_{1,s}(xi).
inline std::vector<SmallBallRow> small_ball_diagnostic(const EnsembleResult& ensemble,
                                                       std::span<const double> epsilons,
                                                       double alpha, double beta) {
    if (!(beta > ensemble.config.hurst - 0.5))
        throw std::invalid_argument("small_ball_diagnostic: beta must exceed hurst - 1/2");
    if (!(alpha > 0.0)) throw std::invalid_argument("small_ball_diagnostic: alpha must be > 0");
    std::vector<double> sups;
    std::vector<double> holders;
    for (const auto& rec : ensemble.paths) {
        if (rec.failed || !rec.matrix) continue;
        sups.push_back(rec.matrix->sup_norm());
        holders.push_back(rec.matrix->holder_constant(beta));
    }
    if (sups.empty())
        throw std::invalid_argument("small_ball_diagnostic: ensemble has no Malliavin data");
    std::vector<SmallBallRow> table;
    table.reserve(epsilons.size());
    for (double eps : epsilons) {
        SmallBallRow row;
        row.epsilon = eps;
        const double lo = std::pow(eps, alpha);
        const double hi = std::pow(eps, -alpha);
        int c1 = 0, c2 = 0;
        for (std::size_t i = 0; i < sups.size(); ++i) {
            if (sups[i] < lo) ++c1;
            if (holders[i] > hi) ++c2;
        }
        row.p_sup_small = static_cast<double>(c1) / sups.size();
        row.p_holder_large = static_cast<double>(c2) / sups.size();
        table.push_back(row);
    }
    return table;
}

}  // namespace fracheat
