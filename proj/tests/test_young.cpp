#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "fracheat/fbm.hpp"
#include "fracheat/young.hpp"
#include "helpers.hpp"

using namespace fracheat;
using Catch::Approx;

namespace {

FieldPath constant_field_path(TimeGrid grid, const SpectralField& f) {
    FieldPath z(grid, f.n_modes());
    for (int k = 0; k <= grid.steps; ++k) z.at(k) = f;
    return z;
}

std::vector<int> full_partition(int a, int b) {
    std::vector<int> p;
    for (int k = a; k <= b; ++k) p.push_back(k);
    return p;
}

/// Integrand with genuine temporal roughness: two fixed shapes modulated by
/// an independent rough scalar pair.
FieldPath rough_field_path(TimeGrid grid, int n_modes, std::uint64_t seed) {
    const DriverPath mod = sample_fbm_path(grid.steps, 0.55, 2, seed,
                                           SampleMethod::factorization, grid.horizon);
    SpectralField s1 = SpectralField::basis(n_modes, 1);
    SpectralField s2 = SpectralField::basis(n_modes, 2);
    FieldPath z(grid, n_modes);
    for (int k = 0; k <= grid.steps; ++k) {
        SpectralField f = s1;
        f *= 1.0 + 0.5 * mod.value(k, 0);
        axpy(0.4 * mod.value(k, 1), s2, f);
        z.at(k) = std::move(f);
    }
    return z;
}

}  // namespace

TEST_CASE("riemann sum basics") {
    TimeGrid grid{4096, 1.0};  // mesh 2^-12
    const int n = 8;
    FieldPath z = constant_field_path(grid, SpectralField::basis(n, 1));

    // constant driver: every increment vanishes
    DriverPath still = DriverPath::constant(grid);
    SpectralField s =
        conv_riemann_sum(z, still, 0, grid.steps, full_partition(0, grid.steps));
    CHECK(sobolev_norm(s, 0.0) == 0.0);

    // z == e_1, x_t = t: int_0^1 e^{-pi^2 (1-u)} du = (1 - e^{-pi^2}) / pi^2
    DriverPath lin = DriverPath::linear(grid);
    SpectralField r = conv_riemann_sum(z, lin, 0, grid.steps, full_partition(0, grid.steps));
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double exact = (1.0 - std::exp(-pi2)) / pi2;
    CHECK(r.coeffs[0] == Approx(exact).margin(1e-3));
    for (int m = 1; m < n; ++m) CHECK(r.coeffs[static_cast<std::size_t>(m)] == 0.0);

    // partitions must stay inside [s,t] and be increasing
    std::vector<int> bad = {0, 10, 5, 256};
    CHECK_THROWS_AS(conv_riemann_sum(z, lin, 0, 256, bad), std::invalid_argument);
    std::vector<int> outside = {0, 200};
    CHECK_THROWS_AS(conv_riemann_sum(z, lin, 0, 256, outside), std::invalid_argument);
}

TEST_CASE("riemann sum mesh refinement order") {
    TimeGrid grid{2048, 1.0};
    FieldPath z = rough_field_path(grid, 8, 21);
    DriverPath x = sample_fbm_path(grid.steps, 0.75, 1, 22);

    std::vector<double> log_mesh, log_diff;
    SpectralField prev;
    bool have_prev = false;
    for (int pieces = 16; pieces <= 2048; pieces *= 2) {
        SpectralField cur = conv_riemann_sum(
            z, x, 0, grid.steps, fracheat::detail::dyadic_partition(0, grid.steps, pieces));
        if (have_prev) {
            const double d = sobolev_norm(cur - prev, 0.0);
            log_mesh.push_back(std::log(1.0 / pieces));
            log_diff.push_back(std::log(d));
        }
        prev = cur;
        have_prev = true;
    }
    const double slope = testutil::fitted_slope(log_mesh, log_diff);
    INFO("refinement slope " << slope);
    // kappa + gamma - 1 with the nominal (0.45, 0.70) pair, minus slack
    CHECK(slope >= 0.45 + 0.70 - 1.0 - 0.1);
}

TEST_CASE("conv integral closed form, additivity, linearity") {
    TimeGrid grid{4096, 1.0};
    const int n = 8;
    FieldPath z = constant_field_path(grid, SpectralField::basis(n, 1));
    DriverPath lin = DriverPath::linear(grid);

    const double rel_tol = 2e-3;
    ConvIntegral full = conv_integral(z, lin, 0, grid.steps, rel_tol);
    CHECK(full.converged);
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const double exact = (1.0 - std::exp(-pi2)) / pi2;
    CHECK(std::abs(full.value.coeffs[0] - exact) <= rel_tol * exact + 1e-6);

    // Chasles: [0,t] = S_{t-s} [0,s] + [s,t], checked with a smooth-modulated z
    const double chasles_tol = 1e-2;
    FieldPath zs(grid, n);
    for (int k = 0; k <= grid.steps; ++k) {
        SpectralField f = SpectralField::basis(n, 1);
        f *= 1.0 + 0.3 * std::sin(3.0 * grid.time(k));
        zs.at(k) = std::move(f);
    }
    const int mid = grid.steps / 2;
    ConvIntegral left = conv_integral(zs, lin, 0, mid, chasles_tol);
    ConvIntegral right = conv_integral(zs, lin, mid, grid.steps, chasles_tol);
    ConvIntegral whole = conv_integral(zs, lin, 0, grid.steps, chasles_tol);
    CHECK(whole.converged);
    CHECK(left.converged);
    CHECK(right.converged);
    SpectralField glued = semigroup_apply(left.value, grid.time(grid.steps) - grid.time(mid));
    glued += right.value;
    const double mismatch = sobolev_norm(whole.value - glued, 0.0);
    CHECK(mismatch <= 2.0 * chasles_tol * sobolev_norm(whole.value, 0.0));

    // linearity: doubling z doubles the sum bit-for-bit
    FieldPath z2 = z;
    z2 *= 2.0;
    ConvIntegral doubled = conv_integral(z2, lin, 0, grid.steps, rel_tol);
    for (int m = 0; m < n; ++m)
        CHECK(doubled.value.coeffs[static_cast<std::size_t>(m)] ==
              2.0 * full.value.coeffs[static_cast<std::size_t>(m)]);
}

TEST_CASE("conv integral flags non-convergence at the grid cap") {
    TimeGrid grid{128, 1.0};
    FieldPath z = rough_field_path(grid, 8, 71);
    DriverPath x = sample_fbm_path(grid.steps, 0.75, 1, 72);
    ConvIntegral out = conv_integral(z, x, 0, grid.steps, 1e-12);
    CHECK_FALSE(out.converged);  // the tolerance is unreachable on this grid
    CHECK(out.last_delta > 0.0);
    CHECK(std::isfinite(sobolev_norm(out.value, 0.0)));
}

TEST_CASE("right- and left-point sums share the Young limit") {
    TimeGrid grid{2048, 1.0};
    FieldPath z = rough_field_path(grid, 8, 31);
    DriverPath x = sample_fbm_path(grid.steps, 0.75, 1, 32);

    const auto part = full_partition(0, grid.steps);
    SpectralField right = conv_riemann_sum(z, x, 0, grid.steps, part);
    SpectralField left =
        conv_riemann_sum(z, x, 0, grid.steps, part, RiemannFlavor::left_point);
    // self-refinement error estimate at the finest mesh
    SpectralField half = conv_riemann_sum(
        z, x, 0, grid.steps, fracheat::detail::dyadic_partition(0, grid.steps, grid.steps / 2));
    const double err_est = sobolev_norm(right - half, 0.0);
    CHECK(sobolev_norm(right - left, 0.0) <= 3.0 * err_est);
}

TEST_CASE("path norms") {
    TimeGrid grid{128, 1.0};
    const int n = 16;
    NormalStream rng(51);
    SpectralField phi = testutil::random_field(n, rng, 1.0);

    // semigroup path: y_t - S_{t-s} y_s = 0 up to roundoff
    FieldPath flow = FieldPath::semigroup_flow(grid, phi);
    PathNorms pn = path_norms(flow, 0.45, 0.0);
    CHECK(pn.hat_holder <= 1e-12 * std::max(1.0, pn.c0));
    CHECK(pn.c0 == Approx(sobolev_norm(phi, 0.0)).epsilon(1e-12));

    // constant path: plain Hoelder seminorm vanishes exactly
    FieldPath still = constant_field_path(grid, phi);
    CHECK(path_norms(still, 0.45, 0.0).holder == 0.0);

    CHECK_THROWS_AS(path_norms(still, 5, 3, 0.45, 0.0), std::invalid_argument);
}

TEST_CASE("hat-Hoelder controls plain Hoelder (embedding inequality)") {
    TimeGrid grid{64, 1.0};
    const int n = 12;
    NormalStream rng(61);
    for (int rep = 0; rep < 10; ++rep) {
        FieldPath y(grid, n);
        for (int k = 0; k <= grid.steps; ++k) y.at(k) = testutil::random_field(n, rng, 1.2);
        const double kappa = 0.45;
        const double lambda = kappa + (1.0 - kappa) * rng.uniform();  // in (kappa, 1]
        const PathNorms base = path_norms(y, kappa, 0.0);
        const PathNorms lifted = path_norms(y, kappa, lambda);
        const double rhs = lifted.hat_holder +
                           std::pow(grid.horizon, lambda - kappa) * lifted.c0;
        CHECK(base.holder <= rhs * (1.0 + 1e-12));
    }
}
