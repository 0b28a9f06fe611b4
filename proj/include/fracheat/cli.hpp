#pragma once

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracheat/config.hpp"
#include "fracheat/density.hpp"
#include "fracheat/malliavin.hpp"
#include "fracheat/report.hpp"

namespace fracheat {

namespace cli_detail {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
    int threads = 0;
};

inline ExperimentConfig load_config(const CommonOpts& opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) cfg = parse_config(opts.config_path);
    if (opts.seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(opts.seed_override);
    cfg.threads = resolve_threads(opts.threads);
    cfg.validate();
    return cfg;
}

inline RunManifest make_manifest(const std::string& subcommand, const ExperimentConfig& cfg) {
    RunManifest m;
    m.subcommand = subcommand;
    m.seed = cfg.seed;
    m.config_json = config_to_json(cfg).dump();
    return m;
}

inline std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir == ".") return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

inline int run_sample_fbm(const CommonOpts& opts) {
    const ExperimentConfig cfg = load_config(opts);
    const RunManifest manifest = make_manifest("sample-fbm", cfg);
    std::vector<std::string> header = {"time"};
    for (int i = 1; i <= cfg.dimension; ++i) header.push_back("comp_" + std::to_string(i));
    for (int p = 0; p < cfg.n_paths; ++p) {
        const DriverPath path = sample_fbm_path(cfg.solver.time_steps, cfg.hurst, cfg.dimension,
                                                derive_seed(cfg.seed, static_cast<std::uint64_t>(p)),
                                                SampleMethod::factorization, cfg.solver.horizon);
        std::vector<std::vector<std::string>> rows;
        rows.reserve(static_cast<std::size_t>(path.grid.points()));
        for (int k = 0; k <= path.grid.steps; ++k) {
            std::vector<std::string> row = {format_number(path.grid.time(k))};
            for (int i = 0; i < path.dim; ++i) row.push_back(format_number(path.value(k, i)));
            rows.push_back(std::move(row));
        }
        char name[64];
        std::snprintf(name, sizeof(name), "fbm_path_%04d.csv", p);
        write_csv(join_path(opts.out_dir, name), manifest, header, rows);
    }
    std::cout << "sample-fbm: wrote " << cfg.n_paths << " path file(s)\n";
    return 0;
}

inline int run_solve(const CommonOpts& opts, const std::string& values_mode) {
    const ExperimentConfig cfg = load_config(opts);
    const RunManifest manifest = make_manifest("solve", cfg);
    const DriverPath x = sample_fbm_path(cfg.solver.time_steps, cfg.hurst, cfg.dimension,
                                         derive_seed(cfg.seed, 0), SampleMethod::factorization,
                                         cfg.solver.horizon);
    const FieldPath y = solve(cfg.base_phi(), cfg.make_family(), cfg.make_kernel(), x, cfg.solver);
    const bool grid_values = values_mode == "grid";
    std::vector<std::string> header = {"time"};
    for (int n = 1; n <= cfg.solver.n_modes; ++n)
        header.push_back((grid_values ? "value_" : "coeff_") + std::to_string(n));
    CollocationGrid grid(cfg.solver.n_modes);
    std::vector<std::vector<std::string>> rows;
    for (int k = 0; k <= y.grid.steps; ++k) {
        std::vector<std::string> row = {format_number(y.grid.time(k))};
        if (grid_values) {
            for (double v : grid.to_values(y.at(k))) row.push_back(format_number(v));
        } else {
            for (double c : y.at(k).coeffs) row.push_back(format_number(c));
        }
        rows.push_back(std::move(row));
    }
    write_csv(join_path(opts.out_dir, "solution.csv"), manifest, header, rows);
    std::cout << "solve: wrote solution.csv (" << y.grid.points() << " snapshots)\n";
    return 0;
}

inline int run_malliavin(const CommonOpts& opts) {
    const ExperimentConfig cfg = load_config(opts);
    const RunManifest manifest = make_manifest("malliavin", cfg);
    const DriverPath x = sample_fbm_path(cfg.solver.time_steps, cfg.hurst, cfg.dimension,
                                         derive_seed(cfg.seed, 0), SampleMethod::factorization,
                                         cfg.solver.horizon);
    const NemytskiiFamily family = cfg.make_family();
    const KernelOperator op = cfg.make_kernel();
    const FieldPath y = solve(cfg.base_phi(), family, op, x, cfg.solver);
    const MalliavinMatrix mat =
        malliavin_matrix(y, x, family, op, cfg.xi, cfg.malliavin_stride, cfg.threads);
    std::vector<std::string> header = {"s"};
    for (int i = 1; i <= mat.dim; ++i) header.push_back("comp_" + std::to_string(i));
    std::vector<std::vector<std::string>> rows;
    for (int k = 0; k <= mat.source_grid.steps; ++k) {
        std::vector<std::string> row = {format_number(mat.source_grid.time(k))};
        for (int i = 0; i < mat.dim; ++i) row.push_back(format_number(mat.entry(k, i)));
        rows.push_back(std::move(row));
    }
    write_csv(join_path(opts.out_dir, "malliavin_matrix.csv"), manifest, header, rows);
    std::cout << "malliavin: wrote malliavin_matrix.csv (" << mat.source_grid.points()
              << " source times)\n";
    return 0;
}

inline int run_density(const CommonOpts& opts) {
    const ExperimentConfig cfg = load_config(opts);
    const RunManifest manifest = make_manifest("density", cfg);
    const EnsembleResult ens = run_ensemble(cfg);
    const auto samples = ens.samples();
    const double bw = cfg.kde_bandwidth > 0.0 ? cfg.kde_bandwidth : kde_rule_of_thumb(samples);
    const DensityEstimate est = kde(samples, bw);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < est.points.size(); ++i)
        rows.push_back({format_number(est.points[i]), format_number(est.density[i])});
    write_csv(join_path(opts.out_dir, "density.csv"), manifest, {"point", "density"}, rows);
    if (cfg.malliavin_summaries) {
        const auto h_norms = ens.h_norms();
        std::vector<std::vector<std::string>> mrows;
        for (double p : {1.0, 2.0, 4.0}) {
            const InverseMomentEstimate im = inverse_moment_estimate(h_norms, p);
            mrows.push_back({format_number(p), format_number(im.value),
                             format_number(im.half_value), im.stable ? "1" : "0"});
        }
        write_csv(join_path(opts.out_dir, "inverse_moments.csv"), manifest,
                  {"p", "estimate", "half_estimate", "stable"}, mrows);
    }
    std::cout << "density: " << samples.size() << " samples, " << ens.failures
              << " failures, bandwidth " << bw << "\n";
    return 0;
}

inline int run_verify_bounds(const CommonOpts& opts) {
    ExperimentConfig cfg = load_config(opts);
    if (cfg.bound_ids.empty())
        cfg.bound_ids = {"poly-4.10", "lin-4.14", "lin-4.15", "flow-4.20", "sewing-2.11"};
    const RunManifest manifest = make_manifest("verify-bounds", cfg);
    const EnsembleResult ens = run_ensemble(cfg);
    std::vector<std::vector<std::string>> rows;
    for (const auto& id : cfg.bound_ids) {
        const BoundReport rep = verify_bound(id, ens);
        rows.push_back({rep.bound_id, format_number(rep.fit_a), format_number(rep.fit_b),
                        format_number(rep.coverage), format_number(rep.max_ratio),
                        std::to_string(rep.train_count), std::to_string(rep.validate_count)});
        std::cout << "verify-bounds: " << rep.bound_id << " coverage " << rep.coverage
                  << " max-ratio " << rep.max_ratio << "\n";
    }
    write_csv(join_path(opts.out_dir, "bounds_report.csv"), manifest,
              {"bound_id", "fit_a", "fit_b", "coverage", "max_ratio", "train_count",
               "validate_count"},
              rows);
    return 0;
}

inline int run_convergence(const CommonOpts& opts) {
    const ExperimentConfig cfg = load_config(opts);
    const RunManifest manifest = make_manifest("convergence", cfg);
    const int levels = 5;
    if (cfg.solver.time_steps % (1 << (levels - 1)) != 0)
        throw std::invalid_argument("convergence: time_steps must be divisible by 16");
    const DriverPath x_fine =
        sample_fbm_path(cfg.solver.time_steps, cfg.hurst, cfg.dimension, derive_seed(cfg.seed, 0),
                        SampleMethod::factorization, cfg.solver.horizon);
    const NemytskiiFamily family = cfg.make_family();
    const KernelOperator op = cfg.make_kernel();
    std::vector<SpectralField> terminal;
    std::vector<int> steps;
    for (int l = 0; l < levels; ++l) {
        const int stride = 1 << l;
        const DriverPath x = x_fine.subsample(stride);
        SolverConfig sc = cfg.solver;
        sc.time_steps = x.grid.steps;
        terminal.push_back(solve(cfg.base_phi(), family, op, x, sc).back());
        steps.push_back(x.grid.steps);
    }
    // level l compares the solve at M/2^l against the next finer level
    std::vector<double> log_mesh, log_diff;
    std::vector<std::vector<std::string>> rows;
    for (int l = 1; l < levels; ++l) {
        const double diff = sobolev_norm(terminal[static_cast<std::size_t>(l)] -
                                             terminal[static_cast<std::size_t>(l - 1)],
                                         0.0);
        const double mesh = cfg.solver.horizon / steps[static_cast<std::size_t>(l)];
        log_mesh.push_back(std::log(mesh));
        log_diff.push_back(std::log(std::max(diff, 1e-300)));
        rows.push_back({std::to_string(l), std::to_string(steps[static_cast<std::size_t>(l)]),
                        format_number(mesh), format_number(diff)});
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < log_mesh.size(); ++i) {
        sx += log_mesh[i];
        sy += log_diff[i];
        sxx += log_mesh[i] * log_mesh[i];
        sxy += log_mesh[i] * log_diff[i];
    }
    const double n = static_cast<double>(log_mesh.size());
    const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (auto& row : rows) row.push_back(format_number(order));
    write_csv(join_path(opts.out_dir, "convergence.csv"), manifest,
              {"level", "time_steps", "mesh", "diff", "fitted_order"}, rows);
    std::cout << "convergence: fitted order " << order << "\n";
    return 0;
}

}  // namespace cli_detail

/// Batch front door; returns a process exit code. Subcommands: sample-fbm,
/// solve, malliavin, density, verify-bounds, convergence.
inline int run_cli(std::vector<std::string> args) {
    CLI::App app{"fracheat: a numerical laboratory for the fBm-driven stochastic heat equation"};
    app.require_subcommand(1);
    cli_detail::CommonOpts opts;
    std::string values_mode = "coeffs";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON configuration file");
        sub->add_option("--out", opts.out_dir, "output directory");
        sub->add_option("--seed", opts.seed_override, "master seed override");
        sub->add_option("--threads", opts.threads,
                        "worker threads (default: FRACHEAT_THREADS or hardware)");
    };

    CLI::App* sample = app.add_subcommand("sample-fbm", "sample fBm driver paths to CSV");
    add_common(sample);
    CLI::App* solve_cmd = app.add_subcommand("solve", "solve the mild equation along one path");
    add_common(solve_cmd);
    solve_cmd->add_option("--values", values_mode, "snapshot columns: coeffs or grid")
        ->check(CLI::IsMember({"coeffs", "grid"}));
    CLI::App* mall = app.add_subcommand("malliavin", "Malliavin derivative matrix of Y_1(xi)");
    add_common(mall);
    CLI::App* dens = app.add_subcommand("density", "Monte-Carlo density of Y_1(xi)");
    add_common(dens);
    CLI::App* bounds = app.add_subcommand("verify-bounds", "fit-and-validate the a-priori bounds");
    add_common(bounds);
    CLI::App* conv = app.add_subcommand("convergence", "self-refinement convergence study");
    add_common(conv);

    std::vector<char*> argv;
    std::vector<std::string> storage = std::move(args);
    storage.insert(storage.begin(), "fracheat");
    argv.reserve(storage.size());
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (sample->parsed()) return cli_detail::run_sample_fbm(opts);
        if (solve_cmd->parsed()) return cli_detail::run_solve(opts, values_mode);
        if (mall->parsed()) return cli_detail::run_malliavin(opts);
        if (dens->parsed()) return cli_detail::run_density(opts);
        if (bounds->parsed()) return cli_detail::run_verify_bounds(opts);
        if (conv->parsed()) return cli_detail::run_convergence(opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 2;
}

}  // namespace fracheat
