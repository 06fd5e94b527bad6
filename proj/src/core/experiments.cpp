#include "core/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <cmath>
#include <random>
#include <thread>

#include <json.hpp>

#include "core/error.hpp"
#include "core/field_io.hpp"
#include "core/mac_ops.hpp"

namespace rtlab {

using nlohmann::json;

namespace {

ScalingFit fit_line_impl(const std::vector<double>& x,
                         const std::vector<double>& y, double target,
                         double tolerance) {
    ScalingFit f;
    f.target = target;
    f.tolerance = tolerance;
    const int n = static_cast<int>(x.size());
    if (n < 2) return f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        f.samples.emplace_back(x[i], y[i]);
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss_res = 0.0, ss_tot = 0.0;
    const double ymean = sy / n;
    for (int i = 0; i < n; ++i) {
        const double fit = f.slope * x[i] + f.intercept;
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - ymean) * (y[i] - ymean);
    }
    f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    f.pass = std::abs(f.slope - target) <= tolerance;
    return f;
}

json fit_to_json(const ScalingFit& f) {
    json j;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["r2"] = f.r2;
    j["target"] = f.target;
    j["tolerance"] = f.tolerance;
    j["pass"] = f.pass;
    json samples = json::array();
    for (auto& [x, y] : f.samples) samples.push_back({x, y});
    j["samples"] = samples;
    return j;
}

// Shared setup: profile, params, simulation grid, spectral solve, grid mode.
struct Pipeline {
    DensityProfile profile;
    PhysicalParams params;
    MacGrid grid;
    double lambda_spectral = 0.0;
    double k_star = 0.0; // layer only
    GridMode mode;       // valid when lambda_spectral > 0

    std::unique_ptr<LayerModeSolver> layer_solver;
    std::unique_ptr<BoxModeSolver> box_solver;
};

MacGrid make_sim_grid(const ExperimentConfig& cfg) {
    if (cfg.layer())
        return MacGrid(cfg.nx, cfg.nz, 2.0 * M_PI * cfg.L, cfg.height, true);
    return MacGrid(cfg.nx, cfg.nz, cfg.L, cfg.height, false);
}

Pipeline make_pipeline(const ExperimentConfig& cfg, bool want_grid_mode) {
    Pipeline p{cfg.make_profile(), cfg.make_params(), make_sim_grid(cfg)};
    if (cfg.layer()) {
        p.layer_solver = std::make_unique<LayerModeSolver>(
            p.profile, p.params, cfg.make_spectral_geometry());
        SweepResult sweep = p.params.M3 != 0.0
                                ? p.layer_solver->sweep_mhd(cfg.wavenumbers(),
                                                            p.params.M3,
                                                            p.params.lambda)
                                : p.layer_solver->sweep(cfg.wavenumbers());
        p.lambda_spectral = sweep.lambda_star;
        p.k_star = sweep.k_star;
        if (want_grid_mode && p.lambda_spectral > 0.0) {
            // Refine at the strongest admissible wavenumber.
            ModeResult best;
            for (const auto& m : sweep.table)
                if (m.lambda == sweep.lambda_star) best = m;
            GridModeSolver::Options opts;
            opts.lambda_m3_sq = p.params.lambda * p.params.M3 * p.params.M3;
            p.mode = eigenfunction_fields(best, p.layer_solver.get(), nullptr,
                                          p.profile, p.params, p.grid, opts);
        }
    } else {
        p.box_solver = std::make_unique<BoxModeSolver>(
            p.profile, p.params, cfg.make_spectral_geometry());
        ModeResult mode = p.box_solver->solve();
        p.lambda_spectral = mode.lambda;
        if (want_grid_mode && p.lambda_spectral > 0.0)
            p.mode = eigenfunction_fields(mode, nullptr, p.box_solver.get(),
                                          p.profile, p.params, p.grid);
    }
    return p;
}

// First time the series crosses the target from below, linearly
// interpolated between samples; -1 when it never does.
double first_crossing(const std::vector<std::pair<double, double>>& series,
                      double target) {
    for (size_t i = 1; i < series.size(); ++i) {
        const auto& [t0, v0] = series[i - 1];
        const auto& [t1, v1] = series[i];
        if (v0 < target && v1 >= target) {
            const double w = (target - v0) / (v1 - v0);
            return t0 + w * (t1 - t0);
        }
    }
    if (!series.empty() && series.front().second >= target)
        return series.front().first;
    return -1.0;
}

void run_parallel(std::vector<std::function<void()>> tasks, int threads) {
    if (threads <= 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int n = std::min<int>(threads, static_cast<int>(tasks.size()));
    for (int w = 0; w < n; ++w)
        pool.emplace_back([&] {
            for (;;) {
                const size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                tasks[i]();
            }
        });
    for (auto& t : pool) t.join();
}

FieldState state_from_bundle(const Simulator& sim, const InitialDataBundle& b) {
    FieldState s = sim.zero_state();
    s.rho = b.rho0;
    s.u = b.u0;
    return s;
}

} // namespace

ScalingFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                    double target, double tolerance) {
    return fit_line_impl(x, y, target, tolerance);
}

// ---------------------------------------------------------------------------
// Escape time
// ---------------------------------------------------------------------------

EscapeResult escape_time_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Pipeline p = make_pipeline(cfg, true);
    EscapeResult out;
    out.lambda_spectral = p.lambda_spectral;
    out.eps0 = cfg.eps0;
    if (p.lambda_spectral <= 0.0) {
        for (double d : cfg.deltas) {
            EscapeRow row;
            row.delta = d;
            out.rows.push_back(row); // never escapes: no unstable mode
        }
        return out;
    }
    out.lambda_grid = p.mode.lambda;
    const MacGrid& g = p.grid;
    out.m0 = std::min({l1_norm(g, p.mode.rho_tilde),
                       l1_norm_u1(g, p.mode.u.u1), l1_norm_u3(g, p.mode.u.u3)});
    out.eps = 0.5 * out.m0 * cfg.eps0;

    InitialDataBuilder builder(g, p.profile, p.params);
    std::vector<InitialDataBundle> bundles;
    for (double d : cfg.deltas)
        bundles.push_back(builder.build(p.mode, d, cfg.tol, cfg.max_iter));

    out.rows.resize(cfg.deltas.size());
    std::vector<std::function<void()>> tasks;
    for (size_t i = 0; i < cfg.deltas.size(); ++i) {
        tasks.emplace_back([&, i] {
            const double delta = cfg.deltas[i];
            EscapeRow row;
            row.delta = delta;
            row.t_predicted = std::log(cfg.eps0 / delta) / out.lambda_grid;
            Simulator::Config sc;
            sc.mode = SimMode::Nonlinear;
            sc.dt = cfg.dt;
            Simulator sim(g, p.profile, p.params, sc);
            FieldState init = state_from_bundle(sim, bundles[i]);
            std::vector<std::pair<double, double>> srho, suh, su3;
            auto observer = [&](const FieldState& st, const EnergyRow& r) {
                srho.emplace_back(st.t, r.l1_rho);
                suh.emplace_back(st.t, r.l1_uh);
                su3.emplace_back(st.t, r.l1_u3);
            };
            const double budget = 1.5 * row.t_predicted + 3.0 / out.lambda_grid;
            sim.run(init, budget, cfg.observe_every, observer);
            row.t_rho = first_crossing(srho, out.eps);
            row.t_uh = first_crossing(suh, out.eps);
            row.t_u3 = first_crossing(su3, out.eps);
            row.crossed = row.t_rho >= 0 && row.t_uh >= 0 && row.t_u3 >= 0;
            if (row.crossed)
                row.t_escape = std::max({row.t_rho, row.t_uh, row.t_u3});
            out.rows[i] = row;
        });
    }
    run_parallel(std::move(tasks), cfg.threads);

    std::vector<double> xs, ys;
    for (const auto& row : out.rows)
        if (row.crossed) {
            xs.push_back(std::log(1.0 / row.delta));
            ys.push_back(row.t_escape);
        }
    const double target = 1.0 / out.lambda_grid;
    out.fit = fit_line(xs, ys, target, 0.05 * target);
    out.monotone = true;
    for (size_t i = 1; i < out.rows.size(); ++i)
        if (!(out.rows[i].t_escape > out.rows[i - 1].t_escape))
            out.monotone = false; // deltas descend, escape times must grow
    const bool all_crossed =
        std::all_of(out.rows.begin(), out.rows.end(),
                    [](const EscapeRow& r) { return r.crossed; });
    out.pass = all_crossed && out.rows.size() >= 4 && out.fit.pass &&
               out.monotone;
    return out;
}

std::string EscapeResult::to_json() const {
    json j;
    j["lambda_grid"] = lambda_grid;
    j["lambda_spectral"] = lambda_spectral;
    j["m0"] = m0;
    j["eps"] = eps;
    j["eps0"] = eps0;
    j["monotone"] = monotone;
    j["pass"] = pass;
    j["fit"] = fit_to_json(fit);
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"delta", r.delta},
                          {"t_rho", r.t_rho},
                          {"t_uh", r.t_uh},
                          {"t_u3", r.t_u3},
                          {"t_escape", r.t_escape},
                          {"t_predicted", r.t_predicted},
                          {"crossed", r.crossed}});
    j["rows"] = rows_j;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Error scaling
// ---------------------------------------------------------------------------

ErrorScalingResult error_scaling_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    Pipeline p = make_pipeline(cfg, true);
    if (p.lambda_spectral <= 0.0)
        fail(ErrorCode::BadSpec, "error scaling needs an unstable profile");
    ErrorScalingResult out;
    out.lambda_grid = p.mode.lambda;
    out.taus = {1.0, 2.0, 3.0};
    const MacGrid& g = p.grid;
    const double lambda = p.mode.lambda;

    InitialDataBuilder builder(g, p.profile, p.params);
    std::vector<InitialDataBundle> bundles;
    for (double d : cfg.deltas)
        bundles.push_back(builder.build(p.mode, d, cfg.tol, cfg.max_iter));

    struct Sample {
        double tau, l1, l2;
        bool excluded = false;
    };
    std::vector<std::vector<Sample>> samples(cfg.deltas.size());
    std::vector<std::vector<std::pair<double, double>>> growth_series(
        cfg.deltas.size());

    std::vector<std::function<void()>> tasks;
    for (size_t i = 0; i < cfg.deltas.size(); ++i) {
        tasks.emplace_back([&, i] {
            const double delta = cfg.deltas[i];
            Simulator::Config sc;
            sc.dt = cfg.dt;
            sc.mode = SimMode::Nonlinear;
            Simulator sim_non(g, p.profile, p.params, sc);
            sc.mode = SimMode::Linear;
            Simulator sim_lin(g, p.profile, p.params, sc);

            FieldState sn = state_from_bundle(sim_non, bundles[i]);
            FieldState sl = sim_lin.zero_state();
            sl.rho = p.mode.rho_tilde;
            sl.u = p.mode.u;
            scale(sl.rho, delta);
            scale(sl.u, delta);

            const double t_max = out.taus.back() / lambda;
            const int steps = (int)std::llround(t_max / cfg.dt);
            size_t next_tau = 0;
            double prev_l1 = 0.0, prev_l2 = 0.0, prev_t = 0.0;
            for (int n = 1; n <= steps && next_tau < out.taus.size(); ++n) {
                sim_non.step(sn);
                sim_lin.step(sl);
                StateNorms d = compute_norms(g, sn, &sl);
                const double t = sn.t;
                if (n % 4 == 0 || n == 1)
                    growth_series[i].emplace_back(t, d.diff_l2);
                while (next_tau < out.taus.size() &&
                       t >= out.taus[next_tau] / lambda - 1e-12) {
                    // Interpolate to the exact rescaled time.
                    const double t_star = out.taus[next_tau] / lambda;
                    double l1 = d.diff_l1, l2 = d.diff_l2;
                    if (n > 1 && t > prev_t) {
                        const double w = (t_star - prev_t) / (t - prev_t);
                        l1 = prev_l1 + w * (d.diff_l1 - prev_l1);
                        l2 = prev_l2 + w * (d.diff_l2 - prev_l2);
                    }
                    Sample s{out.taus[next_tau], l1, l2, false};
                    if (delta * std::exp(out.taus[next_tau]) > cfg.eps0)
                        s.excluded = true;
                    samples[i].push_back(s);
                    ++next_tau;
                }
                prev_l1 = d.diff_l1;
                prev_l2 = d.diff_l2;
                prev_t = t;
            }
        });
    }
    run_parallel(std::move(tasks), cfg.threads);

    for (size_t ti = 0; ti < out.taus.size(); ++ti) {
        std::vector<double> xs, y1, y2;
        for (size_t i = 0; i < cfg.deltas.size(); ++i) {
            if (ti >= samples[i].size()) continue;
            const Sample& s = samples[i][ti];
            if (s.excluded) {
                out.warnings.push_back(
                    "delta " + std::to_string(cfg.deltas[i]) + " at tau " +
                    std::to_string(s.tau) +
                    " left the regime (delta e^{Lambda t} > eps0); excluded");
                continue;
            }
            xs.push_back(std::log(cfg.deltas[i]));
            y1.push_back(std::log(s.l1));
            y2.push_back(std::log(s.l2));
        }
        ErrorScalingResult::TauFit tf;
        tf.tau = out.taus[ti];
        tf.l1 = fit_line(xs, y1, 1.5, 0.1);
        tf.l2 = fit_line(xs, y2, 1.5, 0.1);
        out.fits.push_back(tf);
    }

    // Growth in t at the middle delta: slope of log(diff) vs t ~ 1.5 Lambda.
    {
        const size_t mid = cfg.deltas.size() / 2;
        std::vector<double> xs, ys;
        for (auto& [t, d] : growth_series[mid]) {
            const double tau = lambda * t;
            if (tau >= 0.5 && tau <= 3.0 && d > 0.0) {
                xs.push_back(t);
                ys.push_back(std::log(d));
            }
        }
        out.growth_in_t = fit_line(xs, ys, 1.5 * lambda, 0.15 * 1.5 * lambda);
    }

    out.pass = true;
    for (const auto& tf : out.fits) {
        if (!(tf.l1.pass && tf.l1.r2 >= 0.99)) out.pass = false;
        if (!(tf.l2.pass && tf.l2.r2 >= 0.99)) out.pass = false;
    }
    return out;
}

std::string ErrorScalingResult::to_json() const {
    json j;
    j["lambda_grid"] = lambda_grid;
    j["pass"] = pass;
    json fits_j = json::array();
    for (const auto& tf : fits)
        fits_j.push_back({{"tau", tf.tau},
                          {"l1", fit_to_json(tf.l1)},
                          {"l2", fit_to_json(tf.l2)}});
    j["fits"] = fits_j;
    j["growth_in_t"] = fit_to_json(growth_in_t);
    j["warnings"] = warnings;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Gronwall property
// ---------------------------------------------------------------------------

namespace {

double gronwall_constant(const EnergyReport& report, double lambda) {
    // Smallest C with E(t) + C^{-1} int D <= Lambda int E + C (E(0) + int
    // ||.||_0^2) at every sample.
    if (report.rows.size() < 2) return 1.0;
    const double e0 = report.rows.front().e_proxy;
    double c_needed = 1.0;
    double int_d = 0.0, int_e = 0.0, int_l2 = 0.0;
    for (size_t i = 1; i < report.rows.size(); ++i) {
        const auto& a = report.rows[i - 1];
        const auto& b = report.rows[i];
        const double h = b.t - a.t;
        int_d += 0.5 * h * (a.d_proxy + b.d_proxy);
        int_e += 0.5 * h * (a.e_proxy + b.e_proxy);
        int_l2 += 0.5 * h * (a.l2_rho_u * a.l2_rho_u + b.l2_rho_u * b.l2_rho_u);
        const double bq = b.e_proxy - lambda * int_e; // linear coefficient
        const double Bq = e0 + int_l2;                // quadratic coefficient
        const double Dq = int_d;
        double root;
        if (Bq > 0.0) {
            root = (bq + std::sqrt(bq * bq + 4.0 * Bq * Dq)) / (2.0 * Bq);
        } else if (bq < 0.0) {
            root = Dq > 0.0 ? Dq / (-bq) : 1.0;
        } else {
            return std::numeric_limits<double>::infinity();
        }
        c_needed = std::max(c_needed, root);
    }
    return c_needed;
}

} // namespace

GronwallResult gronwall_property_check(const ExperimentConfig& cfg) {
    cfg.validate();
    Pipeline p = make_pipeline(cfg, true);
    if (p.lambda_spectral <= 0.0)
        fail(ErrorCode::BadSpec, "gronwall check needs an unstable profile");
    GronwallResult out;
    out.lambda = p.mode.lambda;
    const MacGrid& g = p.grid;
    InitialDataBuilder builder(g, p.profile, p.params);

    auto constant_for = [&](double delta, double dt) {
        auto bundle = builder.build(p.mode, delta, cfg.tol, cfg.max_iter);
        Simulator::Config sc;
        sc.mode = SimMode::Nonlinear;
        sc.dt = dt;
        Simulator sim(g, p.profile, p.params, sc);
        FieldState init = state_from_bundle(sim, bundle);
        auto [fs, rep] = sim.run(init, 3.0 / p.mode.lambda,
                                 std::max(1, cfg.observe_every / 2));
        return gronwall_constant(rep, p.mode.lambda);
    };

    const double delta = cfg.deltas.back();
    out.c_fit = constant_for(delta, cfg.dt);
    out.c_fit_half_dt = constant_for(delta, 0.5 * cfg.dt);
    out.c_fit_small_delta = constant_for(0.5 * delta, cfg.dt);
    out.finite = std::isfinite(out.c_fit) && std::isfinite(out.c_fit_half_dt) &&
                 std::isfinite(out.c_fit_small_delta);
    if (out.finite) {
        const double lo =
            std::min({out.c_fit, out.c_fit_half_dt, out.c_fit_small_delta});
        const double hi =
            std::max({out.c_fit, out.c_fit_half_dt, out.c_fit_small_delta});
        out.stable = hi / lo < 2.0;
    }
    return out;
}

std::string GronwallResult::to_json() const {
    json j;
    j["lambda"] = lambda;
    j["c_fit"] = c_fit;
    j["c_fit_half_dt"] = c_fit_half_dt;
    j["c_fit_small_delta"] = c_fit_small_delta;
    j["finite"] = finite;
    j["stable"] = stable;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// MHD threshold
// ---------------------------------------------------------------------------

MhdThresholdResult mhd_threshold_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.layer())
        fail(ErrorCode::BadSpec, "mhd threshold needs layer-periodic geometry");
    const double lambda_perm = cfg.lambda > 0.0 ? cfg.lambda : 1.0;
    DensityProfile profile = cfg.make_profile();
    PhysicalParams params = cfg.make_params();
    params.lambda = lambda_perm;
    MacGrid g = make_sim_grid(cfg);

    MhdThresholdResult out;
    LayerModeSolver layer(profile, params, cfg.make_spectral_geometry());

    // Admissible lattice up to the grid Nyquist: the instability condition
    // takes a supremum over every representable wavenumber.
    const double k1 = 1.0 / cfg.L;
    std::vector<double> lattice;
    const double k_nyq = M_PI * g.nx / g.Lx;
    for (int m = 1; m * k1 <= k_nyq + 1e-12; ++m) lattice.push_back(m * k1);
    auto crit = layer.critical_field(lambda_perm, lattice);
    out.spectral_threshold = crit.threshold_field;

    const double lambda_hydro = layer.solve(k1).lambda;
    {
        auto hydro = layer.solve(k1);
        auto mhd0 = layer.solve_mhd(k1, 0.0, lambda_perm);
        out.zero_field_matches_hydro = hydro.lambda == mhd0.lambda;
    }

    // Monotonicity of the spectral rate in |M3| at the fundamental.
    out.lambda_monotone = true;
    {
        double prev = 1e300;
        for (int s = 0; s <= 6; ++s) {
            const double m3 = s * out.spectral_threshold / 4.0;
            const double lam = layer.solve_mhd(k1, m3, lambda_perm).lambda;
            if (lam > prev + 1e-10) out.lambda_monotone = false;
            prev = lam;
        }
    }

    // Dynamical probe: seeded broadband divergence-free noise plus the hydro
    // mode, integrated for several hydro e-folds; growth is a positive tail
    // slope of log ||u||.
    GridModeSolver hydro_solver(g, profile, params);
    GridMode hydro_mode = hydro_solver.solve();
    if (hydro_mode.lambda <= 0.0)
        fail(ErrorCode::BadSpec, "mhd threshold needs an unstable profile");
    InitialDataBuilder builder(g, profile, params);

    auto probe = [&](double m3) {
        Simulator::Config sc;
        sc.mode = SimMode::LinearMhd;
        sc.M3 = m3;
        sc.lambda = lambda_perm;
        sc.dt = cfg.dt;
        Simulator sim(g, profile, params, sc);
        // Cap dt under the Alfven limit for the largest probed field.
        FieldState s = sim.zero_state();
        s.rho = hydro_mode.rho_tilde;
        s.u = hydro_mode.u;
        scale(s.rho, 1e-6);
        scale(s.u, 1e-6);
        {
            std::mt19937 rng(cfg.seed);
            std::normal_distribution<double> gauss(0.0, 1.0);
            Array2D psi = g.corner_array();
            for (int j = 1; j < g.nz; ++j)
                for (int i = 0; i < g.nx; ++i) psi(i, j) = gauss(rng);
            VectorField noise = curl(g, psi);
            axpy(1e-8 / (l2_norm(g, noise) + 1e-300), noise, s.u);
        }
        auto stub = builder.mhd_initial_data_stub(hydro_mode, 1e-6, m3,
                                                  lambda_perm);
        s.n = stub.n0;

        std::vector<std::pair<double, double>> series;
        auto observer = [&](const FieldState& st, const EnergyRow& r) {
            series.emplace_back(st.t, r.l2_u);
        };
        auto [fs, rep] = sim.run(s, 6.0 / lambda_hydro,
                                 std::max(1, cfg.observe_every), observer);
        // Tail slope over the last 40% of the samples.
        std::vector<double> xs, ys;
        for (size_t i = series.size() * 3 / 5; i < series.size(); ++i)
            if (series[i].second > 0.0) {
                xs.push_back(series[i].first);
                ys.push_back(std::log(series[i].second));
            }
        const double slope = fit_line(xs, ys, 0.0, 1e300).slope;
        return std::make_pair(slope, rep);
    };

    const double growth_gate = 0.03 * lambda_hydro;

    // Coarse table plus a magnetic-norm growth check at half threshold.
    for (double frac : {0.0, 0.25, 0.5, 0.75, 0.9, 1.1}) {
        const double m3 = frac * out.spectral_threshold;
        MhdThresholdResult::Row row;
        row.M3 = m3;
        GridModeSolver::Options o;
        o.lambda_m3_sq = lambda_perm * m3 * m3;
        o.s_tol = 1e-10;
        GridModeSolver gms(g, profile, params, o);
        row.lambda_grid = gms.solve().lambda;
        auto [slope, rep] = probe(m3);
        row.tail_slope = slope;
        row.growing = slope > growth_gate;
        out.rows.push_back(row);
        if (frac == 0.5) {
            const auto& first = rep.rows.front();
            const auto& last = rep.rows.back();
            out.magnetic_norms_grow =
                last.l1_nh > 5.0 * std::max(first.l1_nh, 1e-300) &&
                last.l1_n3 > 5.0 * std::max(first.l1_n3, 1e-300);
        }
    }

    // Bisection for the dynamical threshold.
    double lo = 0.0, hi = 1.25 * out.spectral_threshold;
    {
        auto [slope_hi, rep_hi] = probe(hi);
        if (slope_hi > growth_gate) hi *= 1.5;
    }
    for (int it = 0; it < 7; ++it) {
        const double mid = 0.5 * (lo + hi);
        auto [slope, rep] = probe(mid);
        if (slope > growth_gate)
            lo = mid;
        else
            hi = mid;
    }
    out.dynamical_threshold = 0.5 * (lo + hi);
    out.gap_rel = std::abs(out.dynamical_threshold - out.spectral_threshold) /
                  out.spectral_threshold;
    out.pass = out.gap_rel < 0.05 && out.lambda_monotone &&
               out.zero_field_matches_hydro && out.magnetic_norms_grow;
    return out;
}

std::string MhdThresholdResult::to_json() const {
    json j;
    j["spectral_threshold"] = spectral_threshold;
    j["dynamical_threshold"] = dynamical_threshold;
    j["gap_rel"] = gap_rel;
    j["lambda_monotone"] = lambda_monotone;
    j["zero_field_matches_hydro"] = zero_field_matches_hydro;
    j["magnetic_norms_grow"] = magnetic_norms_grow;
    j["pass"] = pass;
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"M3", r.M3},
                          {"lambda_grid", r.lambda_grid},
                          {"tail_slope", r.tail_slope},
                          {"growing", r.growing}});
    j["rows"] = rows_j;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Certificate
// ---------------------------------------------------------------------------

Certificate certify_instability(const ExperimentConfig& cfg) {
    cfg.validate();
    Certificate cert;
    cert.delta = cfg.delta;

    DensityProfile profile = cfg.make_profile();
    auto rt = profile.check_rt_condition();
    cert.rt_condition = rt.satisfied;
    cert.rt_witness = rt.witness;
    if (!rt.satisfied) {
        cert.failed_stage = "profile: the RT condition (rho' > 0 somewhere) "
                            "does not hold";
        return cert;
    }

    Pipeline p = make_pipeline(cfg, true);
    cert.lambda_spectral = p.lambda_spectral;
    if (p.lambda_spectral <= 0.0) {
        cert.failed_stage = "spectral: no positive growth rate";
        return cert;
    }
    cert.lambda_grid = p.mode.lambda;

    const MacGrid& g = p.grid;
    InitialDataBuilder builder(g, p.profile, p.params);
    InitialDataBundle bundle;
    try {
        bundle = builder.build(p.mode, cfg.delta, cfg.tol, cfg.max_iter);
    } catch (const Error& e) {
        cert.failed_stage = std::string("initial data: ") + e.what();
        return cert;
    }
    cert.interior_residual = bundle.compatibility.interior;
    cert.boundary_residual = bundle.compatibility.boundary;

    cert.m0 = std::min({l1_norm(g, p.mode.rho_tilde),
                        l1_norm_u1(g, p.mode.u.u1),
                        l1_norm_u3(g, p.mode.u.u3)});
    cert.eps = 0.5 * cert.m0 * cfg.eps0;
    cert.t_predicted = std::log(cfg.eps0 / cfg.delta) / cert.lambda_grid;

    Simulator::Config sc;
    sc.mode = SimMode::Nonlinear;
    sc.dt = cfg.dt;
    Simulator sim(g, p.profile, p.params, sc);
    FieldState init = state_from_bundle(sim, bundle);
    std::vector<std::pair<double, double>> srho, suh, su3;
    auto observer = [&](const FieldState& st, const EnergyRow& r) {
        srho.emplace_back(st.t, r.l1_rho);
        suh.emplace_back(st.t, r.l1_uh);
        su3.emplace_back(st.t, r.l1_u3);
    };
    try {
        sim.run(init, 1.5 * cert.t_predicted + 3.0 / cert.lambda_grid,
                cfg.observe_every, observer);
    } catch (const Error& e) {
        cert.failed_stage = std::string("simulation: ") + e.what();
        return cert;
    }
    const double t1 = first_crossing(srho, cert.eps);
    const double t2 = first_crossing(suh, cert.eps);
    const double t3 = first_crossing(su3, cert.eps);
    cert.crossings = t1 >= 0 && t2 >= 0 && t3 >= 0;
    if (!cert.crossings) {
        cert.failed_stage = "escape: an instability norm failed to cross eps";
        return cert;
    }
    cert.t_escape = std::max({t1, t2, t3});
    cert.pass = true;
    return cert;
}

std::string Certificate::to_json() const {
    json j;
    j["pass"] = pass;
    j["failed_stage"] = failed_stage;
    j["rt_condition"] = rt_condition;
    j["rt_witness"] = rt_witness;
    j["lambda_spectral"] = lambda_spectral;
    j["lambda_grid"] = lambda_grid;
    j["delta"] = delta;
    j["interior_residual"] = interior_residual;
    j["boundary_residual"] = boundary_residual;
    j["m0"] = m0;
    j["eps"] = eps;
    j["t_escape"] = t_escape;
    j["t_predicted"] = t_predicted;
    j["crossings"] = crossings;
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// CLI drivers
// ---------------------------------------------------------------------------

namespace {

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    ensure_directory(cfg.out_dir);
    return cfg.out_dir + "/" + name;
}

void write_bundle_dir(const ExperimentConfig& cfg, const MacGrid& g,
                      const InitialDataBundle& b, const std::string& dir) {
    ensure_directory(dir);
    write_field(dir + "/rho0.field", "rho0", "center", g, b.rho0);
    write_field(dir + "/u0_u1.field", "u0_u1", "u1", g, b.u0.u1);
    write_field(dir + "/u0_u3.field", "u0_u3", "u3", g, b.u0.u3);
    write_field(dir + "/q0.field", "q0", "center", g, b.q0);
    write_field(dir + "/upsilon_u1.field", "upsilon_u1", "u1", g, b.upsilon.u1);
    write_field(dir + "/upsilon_u3.field", "upsilon_u3", "u3", g, b.upsilon.u3);
    write_field(dir + "/ur_u1.field", "ur_u1", "u1", g, b.u_r.u1);
    write_field(dir + "/ur_u3.field", "ur_u3", "u3", g, b.u_r.u3);
    write_field(dir + "/qr.field", "qr", "center", g, b.q_r);
    if (b.has_magnetic) {
        write_field(dir + "/n0_n1.field", "n0_n1", "mag1", g, b.n0.n1);
        write_field(dir + "/n0_n3.field", "n0_n3", "mag3", g, b.n0.n3);
    }
    json meta;
    meta["delta"] = b.delta;
    meta["lambda_grid"] = b.mode.lambda;
    meta["iterations"] = b.iterations;
    meta["corrected"] = b.corrected;
    meta["interior_residual"] = b.compatibility.interior;
    meta["interior_residual_rel"] = b.compatibility.interior_rel;
    meta["boundary_residual"] = b.compatibility.boundary;
    meta["boundary_residual_rel"] = b.compatibility.boundary_rel;
    meta["momentum_identity_residual"] = b.compatibility.momentum_identity;
    meta["divn_max"] = b.divn_max;
    json diffs = json::array();
    for (double d : b.diff_history) diffs.push_back(d);
    meta["diff_history"] = diffs;
    write_text_file(dir + "/bundle.json", meta.dump(2));
}

} // namespace

std::string run_growth_command(const ExperimentConfig& cfg) {
    cfg.validate();
    DensityProfile profile = cfg.make_profile();
    PhysicalParams params = cfg.make_params();
    json verdict;
    if (cfg.layer()) {
        LayerModeSolver solver(profile, params, cfg.make_spectral_geometry());
        SweepResult sweep =
            params.M3 != 0.0
                ? solver.sweep_mhd(cfg.wavenumbers(), params.M3, params.lambda)
                : solver.sweep(cfg.wavenumbers());
        CsvWriter csv(out_path(cfg, "growth.csv"),
                      {"k", "Lambda", "alpha_at_0", "iterations", "converged"});
        for (const auto& m : sweep.table)
            csv.row({m.k, m.lambda, m.alpha_at_0, double(m.iterations),
                     m.converged ? 1.0 : 0.0});
        verdict["lambda_star"] = sweep.lambda_star;
        verdict["k_star"] = sweep.k_star;
    } else {
        BoxModeSolver solver(profile, params, cfg.make_spectral_geometry());
        ModeResult m = solver.solve();
        CsvWriter csv(out_path(cfg, "growth.csv"),
                      {"k", "Lambda", "alpha_at_0", "iterations", "converged"});
        csv.row({0.0, m.lambda, m.alpha_at_0, double(m.iterations),
                 m.converged ? 1.0 : 0.0});
        verdict["lambda_star"] = m.lambda;
        verdict["k_star"] = 0.0;
    }
    const std::string text = verdict.dump(2);
    write_text_file(out_path(cfg, "growth.json"), text);
    return text;
}

std::string run_critical_field_command(const ExperimentConfig& cfg) {
    cfg.validate();
    if (!cfg.layer())
        fail(ErrorCode::BadSpec, "critical-field needs layer-periodic geometry");
    DensityProfile profile = cfg.make_profile();
    PhysicalParams params = cfg.make_params();
    const double lambda_perm = cfg.lambda > 0.0 ? cfg.lambda : 1.0;
    LayerModeSolver solver(profile, params, cfg.make_spectral_geometry());
    auto rep = solver.critical_field(lambda_perm, cfg.wavenumbers());
    CsvWriter csv(out_path(cfg, "critical_field.csv"),
                  {"k", "m_star_k", "M3_threshold_k", "Lambda_hydro"});
    for (const auto& r : rep.rows)
        csv.row({r.k, r.m_star_k, r.threshold_k, r.lambda_hydro});
    json verdict;
    verdict["m_star"] = rep.m_star;
    verdict["threshold_field"] = rep.threshold_field;
    const std::string text = verdict.dump(2);
    write_text_file(out_path(cfg, "critical_field.json"), text);
    return text;
}

std::string run_make_initial_data_command(const ExperimentConfig& cfg) {
    cfg.validate();
    Pipeline p = make_pipeline(cfg, true);
    if (p.lambda_spectral <= 0.0)
        fail(ErrorCode::BadSpec, "initial data needs an unstable profile");
    InitialDataBuilder builder(p.grid, p.profile, p.params);
    InitialDataBundle bundle;
    if (p.params.M3 != 0.0)
        bundle = builder.mhd_initial_data_stub(p.mode, cfg.delta, p.params.M3,
                                               p.params.lambda);
    else
        bundle = builder.build(p.mode, cfg.delta, cfg.tol, cfg.max_iter);
    write_bundle_dir(cfg, p.grid, bundle, cfg.out_dir);
    std::ifstream in(cfg.out_dir + "/bundle.json");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string run_simulate_command(const ExperimentConfig& cfg) {
    cfg.validate();
    Pipeline p = make_pipeline(cfg, cfg.init == "eigenmode");
    Simulator::Config sc;
    sc.dt = cfg.dt;
    if (cfg.sim_mode == "nonlinear") sc.mode = SimMode::Nonlinear;
    else if (cfg.sim_mode == "linear") sc.mode = SimMode::Linear;
    else {
        sc.mode = SimMode::LinearMhd;
        sc.M3 = cfg.M3;
        sc.lambda = cfg.lambda;
    }
    Simulator sim(p.grid, p.profile, p.params, sc);
    FieldState s = sim.zero_state();
    if (cfg.init == "eigenmode") {
        if (p.lambda_spectral <= 0.0)
            fail(ErrorCode::BadSpec, "eigenmode init needs an unstable profile");
        s.rho = p.mode.rho_tilde;
        s.u = p.mode.u;
        scale(s.rho, cfg.delta);
        scale(s.u, cfg.delta);
        if (sc.mode == SimMode::LinearMhd && cfg.M3 != 0.0) {
            InitialDataBuilder builder(p.grid, p.profile, p.params);
            auto stub = builder.mhd_initial_data_stub(p.mode, cfg.delta,
                                                      cfg.M3, cfg.lambda);
            s.n = stub.n0;
        }
    } else {
        s.rho = read_field(cfg.init + "/rho0.field").data;
        s.u.u1 = read_field(cfg.init + "/u0_u1.field").data;
        s.u.u3 = read_field(cfg.init + "/u0_u3.field").data;
        s.q = read_field(cfg.init + "/q0.field").data;
        if (sc.mode == SimMode::LinearMhd) {
            s.n.n1 = read_field(cfg.init + "/n0_n1.field").data;
            s.n.n3 = read_field(cfg.init + "/n0_n3.field").data;
        }
    }

    ensure_directory(cfg.out_dir);
    CsvWriter csv(
        out_path(cfg, "energy.csv"),
        {"t",        "l1_rho",     "l1_uh",       "l1_u3",   "l2_rho",
         "l2_u",     "l2_rho_u",   "h1_u",        "h2_u",    "kinetic",
         "dissipation", "buoyancy_flux", "e_proxy", "d_proxy", "l1_nh",
         "l1_n3",    "mass",       "div_max"});
    int snapshot_index = 0;
    auto observer = [&](const FieldState& st, const EnergyRow& r) {
        csv.row({r.t, r.l1_rho, r.l1_uh, r.l1_u3, r.l2_rho, r.l2_u, r.l2_rho_u,
                 r.h1_u, r.h2_u_proxy, r.kinetic, r.dissipation,
                 r.buoyancy_flux, r.e_proxy, r.d_proxy, r.l1_nh, r.l1_n3,
                 r.mass, r.div_max});
        if (cfg.snapshot_every > 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "snap_%04d", snapshot_index++);
            write_field(out_path(cfg, std::string(name) + "_rho.field"), "rho",
                        "center", p.grid, st.rho, st.t);
            write_field(out_path(cfg, std::string(name) + "_u1.field"), "u1",
                        "u1", p.grid, st.u.u1, st.t);
            write_field(out_path(cfg, std::string(name) + "_u3.field"), "u3",
                        "u3", p.grid, st.u.u3, st.t);
        }
    };
    const double t_end = cfg.t_end > 0.0 ? cfg.t_end : 1.0;
    const int cadence = cfg.snapshot_every > 0
                            ? cfg.snapshot_every
                            : std::max(1, cfg.observe_every);
    auto [fs, rep] = sim.run(s, t_end, cadence, observer);
    json verdict;
    verdict["t_final"] = fs.t;
    verdict["rows"] = rep.rows.size();
    verdict["div_max_final"] = fs.div_max;
    const std::string text = verdict.dump(2);
    write_text_file(out_path(cfg, "simulate.json"), text);
    return text;
}

std::string run_escape_command(const ExperimentConfig& cfg) {
    EscapeResult res = escape_time_experiment(cfg);
    ensure_directory(cfg.out_dir);
    CsvWriter csv(out_path(cfg, "escape.csv"),
                  {"delta", "t_rho", "t_uh", "t_u3", "t_escape", "t_predicted",
                   "crossed"});
    for (const auto& r : res.rows)
        csv.row({r.delta, r.t_rho, r.t_uh, r.t_u3, r.t_escape, r.t_predicted,
                 r.crossed ? 1.0 : 0.0});
    const std::string text = res.to_json();
    write_text_file(out_path(cfg, "escape.json"), text);
    return text;
}

std::string run_error_scaling_command(const ExperimentConfig& cfg) {
    ErrorScalingResult res = error_scaling_experiment(cfg);
    ensure_directory(cfg.out_dir);
    CsvWriter csv(out_path(cfg, "error_scaling.csv"),
                  {"tau", "slope_l1", "r2_l1", "slope_l2", "r2_l2"});
    for (const auto& tf : res.fits)
        csv.row({tf.tau, tf.l1.slope, tf.l1.r2, tf.l2.slope, tf.l2.r2});
    const std::string text = res.to_json();
    write_text_file(out_path(cfg, "error_scaling.json"), text);
    return text;
}

std::string run_gronwall_command(const ExperimentConfig& cfg) {
    GronwallResult res = gronwall_property_check(cfg);
    ensure_directory(cfg.out_dir);
    const std::string text = res.to_json();
    write_text_file(out_path(cfg, "gronwall.json"), text);
    return text;
}

std::string run_mhd_threshold_command(const ExperimentConfig& cfg) {
    MhdThresholdResult res = mhd_threshold_experiment(cfg);
    ensure_directory(cfg.out_dir);
    CsvWriter csv(out_path(cfg, "mhd_threshold.csv"),
                  {"M3", "lambda_grid", "tail_slope", "growing"});
    for (const auto& r : res.rows)
        csv.row({r.M3, r.lambda_grid, r.tail_slope, r.growing ? 1.0 : 0.0});
    const std::string text = res.to_json();
    write_text_file(out_path(cfg, "mhd_threshold.json"), text);
    return text;
}

std::string run_certify_command(const ExperimentConfig& cfg) {
    Certificate cert = certify_instability(cfg);
    ensure_directory(cfg.out_dir);
    const std::string text = cert.to_json();
    write_text_file(out_path(cfg, "certificate.json"), text);
    return text;
}

std::string run_command(const std::string& name, const ExperimentConfig& cfg) {
    if (name == "growth") return run_growth_command(cfg);
    if (name == "critical-field") return run_critical_field_command(cfg);
    if (name == "make-initial-data") return run_make_initial_data_command(cfg);
    if (name == "simulate") return run_simulate_command(cfg);
    if (name == "escape") return run_escape_command(cfg);
    if (name == "error-scaling") return run_error_scaling_command(cfg);
    if (name == "gronwall") return run_gronwall_command(cfg);
    if (name == "mhd-threshold") return run_mhd_threshold_command(cfg);
    if (name == "certify") return run_certify_command(cfg);
    fail(ErrorCode::BadSpec, "unknown command '" + name + "'");
}

} // namespace rtlab
