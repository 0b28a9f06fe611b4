#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "fracheat/solver.hpp"
#include "helpers.hpp"

using namespace fracheat;
using Catch::Approx;

namespace {

SolverConfig small_config(int n_modes, int steps, double horizon = 1.0) {
    SolverConfig cfg;
    cfg.n_modes = n_modes;
    cfg.time_steps = steps;
    cfg.horizon = horizon;
    return cfg;
}

}  // namespace

TEST_CASE("solver config constraints") {
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.kappa = 0.2;  // below max(1-gamma, 1/4)
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.kappa = 0.55;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = SolverConfig{};
    cfg.gamma = 0.45;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("kernel operator basics") {
    const int n = 16;
    KernelOperator avg = KernelOperator::averaging(n);
    // discrete row mass of U == 1 on the N-point grid is N/(N+1)
    CHECK(avg.c_u() == Approx(static_cast<double>(n) / (n + 1)).epsilon(1e-14));

    KernelOperator gauss = KernelOperator::gaussian(n, 0.1);
    CHECK(gauss.c_u() > 0.0);
    CHECK(gauss.c_u() < 1.0);

    KernelOperator id = KernelOperator::identity();
    CHECK(id.is_identity());
    NormalStream rng(3);
    SpectralField f = testutil::random_field(n, rng);
    CHECK(id.apply(f).coeffs == f.coeffs);

    // averaging maps anything to (a truncation of) a constant: grid values equal
    SpectralField af = avg.apply(f);
    CollocationGrid grid(n);
    auto vals = grid.to_values(af);
    CollocationGrid coarse(n);
    auto f_vals = coarse.to_values(f);
    double mean = 0.0;
    for (double v : f_vals) mean += v;
    mean /= (n + 1);
    for (double v : vals) CHECK(v == Approx(mean).margin(1e-12));

    CHECK_THROWS_AS(KernelOperator(n, [](double, double) { return -1.0; }),
                    std::invalid_argument);
    CHECK_THROWS_AS(KernelOperator(n, [](double, double) { return 0.0; }),
                    std::invalid_argument);
}

TEST_CASE("constant driver short-circuits to the semigroup flow") {
    SolverConfig cfg = small_config(16, 64);
    NormalStream rng(5);
    SpectralField phi = testutil::random_field(16, rng);
    DriverPath still = DriverPath::constant(cfg.grid(), 1);
    FieldPath y = solve(phi, NemytskiiFamily::bounded_below(1, 0.5),
                        KernelOperator::averaging(16), still, cfg);
    for (int k = 0; k <= cfg.time_steps; ++k) {
        SpectralField expect = semigroup_apply(phi, cfg.grid().time(k));
        CHECK(y.at(k).coeffs == expect.coeffs);  // bit-identical
    }
}

TEST_CASE("per-mode closed form for f == 1, linear driver") {
    SolverConfig cfg = small_config(16, 1024);
    const int n = cfg.n_modes;
    NormalStream rng(7);
    SpectralField phi = testutil::random_field(n, rng, 2.0, 0.3);
    DriverPath lin = DriverPath::linear(cfg.grid(), 1);
    FieldPath y = solve(phi, NemytskiiFamily::constant(1, 1.0), KernelOperator::identity(),
                        lin, cfg);
    // the scheme integrates dy^n = -lambda_n y^n dt + c_n dt with c_n the
    // discrete sine coefficients of the constant 1
    SpectralField ones = pointwise_unary(SpectralField::zero(n), [](double) { return 1.0; });
    SpectralField expect(n);
    for (int m = 1; m <= n; ++m) {
        const double lam = laplacian_eigenvalue(m);
        const double c = ones.coeffs[static_cast<std::size_t>(m - 1)];
        expect.coeffs[static_cast<std::size_t>(m - 1)] =
            std::exp(-lam) * phi.coeffs[static_cast<std::size_t>(m - 1)] +
            c * (1.0 - std::exp(-lam)) / lam;
    }
    CHECK(sobolev_norm(y.back() - expect, 0.0) <= 1e-3);
}

TEST_CASE("self-refinement convergence order under fBm") {
    const int finest = 1024;
    DriverPath x_fine = sample_fbm_path(finest, 0.75, 1, 4242);
    NemytskiiFamily family = NemytskiiFamily::bounded_below(1, 0.5);
    KernelOperator op = KernelOperator::averaging(16);
    NormalStream rng(9);
    SpectralField phi = testutil::random_field(16, rng, 3.0, 0.2);

    std::vector<double> log_mesh, log_diff;
    SpectralField prev;
    bool have_prev = false;
    for (int stride = 16; stride >= 1; stride /= 2) {
        DriverPath x = x_fine.subsample(stride);
        SolverConfig cfg = small_config(16, x.grid.steps);
        SpectralField terminal = solve(phi, family, op, x, cfg).back();
        if (have_prev) {
            log_mesh.push_back(std::log(1.0 / x.grid.steps));
            log_diff.push_back(std::log(sobolev_norm(terminal - prev, 0.0)));
        }
        prev = terminal;
        have_prev = true;
    }
    const double slope = testutil::fitted_slope(log_mesh, log_diff);
    INFO("solver refinement order " << slope);
    CHECK(slope >= 2.0 * 0.70 - 1.0 - 0.1);
}

TEST_CASE("blow-up is reported with the step index") {
    SolverConfig cfg = small_config(8, 32);
    ScalarCoefficient cubic;
    cubic.f = [](double u) { return u * u * u; };
    cubic.d1 = [](double u) { return 3.0 * u * u; };
    cubic.d2 = [](double u) { return 6.0 * u; };
    cubic.d3 = [](double) { return 6.0; };
    cubic.bound_f = cubic.bound_d1 = cubic.bound_d2 = cubic.bound_d3 = 1e6;
    NemytskiiFamily family{std::vector<ScalarCoefficient>{cubic}};
    SpectralField phi = SpectralField::basis(8, 1);
    phi *= 5.0;
    DriverPath x = DriverPath::linear(cfg.grid(), 1);
    x *= 1e4;
    CHECK_THROWS_AS(solve(phi, family, KernelOperator::identity(), x, cfg), SolverBlowup);
    try {
        solve(phi, family, KernelOperator::identity(), x, cfg);
    } catch (const SolverBlowup& e) {
        CHECK(e.step >= 1);
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("linear equation: zero data, constant driver, bounded ratios") {
    SolverConfig cfg = small_config(16, 256);
    NemytskiiFamily family = NemytskiiFamily::bounded_below(1, 0.5);
    KernelOperator op = KernelOperator::identity();
    NormalStream rng(13);
    SpectralField phi = testutil::random_field(16, rng, 2.0, 0.2);
    DriverPath x = sample_fbm_path(cfg.time_steps, 0.75, 1, 888);
    FieldPath y = solve(phi, family, op, x, cfg);

    // w == 0 forces v == 0 exactly
    FieldPath zero_w(cfg.grid(), 16);
    FieldPath v0 = solve_linear(zero_w, y, family, op, x, 0);
    for (int k = 0; k <= cfg.time_steps; ++k)
        CHECK(sobolev_norm(v0.at(k), 0.0) == 0.0);

    // constant driver: the integral term vanishes and v == w
    DriverPath still = DriverPath::constant(cfg.grid(), 1);
    FieldPath w(cfg.grid(), 16);
    for (int k = 0; k <= cfg.time_steps; ++k)
        w.at(k) = semigroup_apply(phi, cfg.grid().time(k));
    FieldPath v = solve_linear(w, y, family, op, still, 0);
    for (int k = 0; k <= cfg.time_steps; ++k)
        CHECK(v.at(k).coeffs == w.at(k).coeffs);  // bit-identical

    // v is linear in w: doubling w doubles v bit-for-bit
    FieldPath w2 = w;
    w2 *= 2.0;
    FieldPath v2 = solve_linear(w2, y, family, op, x, 0);
    FieldPath v1 = solve_linear(w, y, family, op, x, 0);
    for (int k = 0; k <= cfg.time_steps; ++k)
        for (int m = 0; m < 16; ++m)
            CHECK(v2.at(k).coeffs[static_cast<std::size_t>(m)] ==
                  2.0 * v1.at(k).coeffs[static_cast<std::size_t>(m)]);

    // the solution operator has a stable norm across randomized w
    std::vector<double> ratios;
    for (int rep = 0; rep < 12; ++rep) {
        FieldPath wr(cfg.grid(), 16);
        SpectralField base = testutil::random_field(16, rng, 1.5);
        for (int k = 0; k <= cfg.time_steps; ++k) {
            wr.at(k) = semigroup_apply(base, cfg.grid().time(k));
            wr.at(k) *= 1.0 + 0.2 * std::sin(5.0 * cfg.grid().time(k) + rep);
        }
        FieldPath vr = solve_linear(wr, y, family, op, x, 0);
        const PathNorms nw = path_norms(wr, cfg.kappa, cfg.kappa);
        const PathNorms nv = path_norms(vr, cfg.kappa, cfg.kappa);
        ratios.push_back(nv.hat_c0() / nw.hat_c0());
        CHECK(std::isfinite(ratios.back()));
    }
    std::vector<double> sorted = ratios;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    INFO("linear-equation gain ratios: median " << median << ", max " << sorted.back());
    CHECK(sorted.back() <= 100.0 * median);
}

TEST_CASE("flow property: restarting at a grid point is exact") {
    const int steps = 512;
    SolverConfig cfg = small_config(16, steps);
    NemytskiiFamily family = NemytskiiFamily::bounded_below(1, 0.5);
    KernelOperator op = KernelOperator::averaging(16);
    NormalStream rng(15);
    SpectralField phi = testutil::random_field(16, rng, 2.0, 0.2);
    DriverPath x = sample_fbm_path(steps, 0.75, 1, 777);

    FieldPath whole = solve(phi, family, op, x, cfg);
    const int mid = steps / 2;
    DriverPath x_tail = x.tail(mid);
    SolverConfig cfg_tail = small_config(16, steps - mid, 0.5);
    FieldPath restarted = solve(whole.at(mid), family, op, x_tail, cfg_tail);
    for (int k = 0; k <= steps - mid; ++k)
        CHECK(restarted.at(k).coeffs == whole.at(mid + k).coeffs);  // bit-identical
}

TEST_CASE("picard oracle") {
    // constant driver: Gamma lands on the semigroup flow in one application
    SolverConfig cfg = small_config(12, 64);
    NormalStream rng(17);
    SpectralField phi = testutil::random_field(12, rng, 2.0, 0.3);
    NemytskiiFamily family = NemytskiiFamily::bounded_below(1, 0.5);
    KernelOperator op = KernelOperator::identity();
    DriverPath still = DriverPath::constant(cfg.grid(), 1);
    PicardResult pr = picard_solve(phi, family, op, still, cfg);
    CHECK(pr.converged);
    CHECK(pr.iterations == 1);
    for (int k = 0; k <= cfg.time_steps; ++k)
        CHECK(sobolev_norm(pr.path.at(k) - semigroup_apply(phi, cfg.grid().time(k)), 0.0) <=
              1e-13 * sobolev_norm(phi, 0.0));

    // successive-iterate distances decrease geometrically on a short horizon
    SolverConfig short_cfg = small_config(12, 64, 0.25);
    DriverPath xs = sample_fbm_path(64, 0.75, 1, 91, SampleMethod::factorization, 0.25);
    PicardResult pshort = picard_solve(phi, family, op, xs, short_cfg);
    CHECK(pshort.converged);
    CHECK(pshort.window_steps == 64);
    const auto& hist = pshort.last_window_history;
    REQUIRE(hist.size() >= 3);
    for (std::size_t i = 1; i + 1 < hist.size(); ++i) CHECK(hist[i + 1] < hist[i]);

    // two-method consistency: the fixed point agrees with the Euler solve
    // within five times the solver's own refinement error
    SolverConfig big = small_config(32, 1024);
    SpectralField phi2 = testutil::random_field(32, rng, 3.0, 0.2);
    DriverPath x = sample_fbm_path(1024, 0.75, 1, 92);
    FieldPath euler = solve(phi2, family, op, x, big);
    SolverConfig halfc = small_config(32, 512);
    FieldPath euler_half = solve(phi2, family, op, x.subsample(2), halfc);
    const double self_err = sobolev_norm(euler.back() - euler_half.back(), 0.0);
    PicardResult fixed = picard_solve(phi2, family, op, x, big);
    CHECK(fixed.converged);
    const double gap = sobolev_norm(fixed.path.back() - euler.back(), 0.0);
    INFO("picard-vs-euler gap " << gap << ", self-refinement error " << self_err);
    CHECK(gap <= 5.0 * self_err);
}
