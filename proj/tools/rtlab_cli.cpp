// Command-line front end; a thin client of the C API in rtlab/rtlab.h.
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rtlab/rtlab.h"

namespace {

using nlohmann::json;

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    int threads = 0;

    std::string family;
    std::vector<double> params;
    double height = 0.0;
    std::string profile_csv;

    std::string geometry;
    double L = 0.0;
    int nx = 0, nz = 0, n_modes = 0, n_modes_x = 0;

    double mu = 0.0, g = 0.0, lambda = 0.0, M3 = 0.0;

    std::vector<double> deltas;
    double delta = 0.0, eps0 = 0.0, dt = 0.0, t_end = 0.0, tol = 0.0;
    double k_max = 0.0;
    int k_count = 0, observe_every = 0, snapshot_every = 0, max_iter = 0;
    std::vector<double> k_grid;
    unsigned seed = 0;
    std::string sim_mode, init;
};

void add_common_flags(CLI::App* cmd, CliOptions& o) {
    cmd->add_option("--config", o.config_path, "JSON config file");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--threads", o.threads, "worker threads for sweeps");
    cmd->add_option("--family", o.family,
                    "profile family: affine | exponential | tanh-step");
    cmd->add_option("--params", o.params, "profile parameters");
    cmd->add_option("--height", o.height, "domain height h");
    cmd->add_option("--profile-csv", o.profile_csv,
                    "two-column CSV (x3, rho) for a tabulated profile");
    cmd->add_option("--geometry", o.geometry,
                    "box-clamped | layer-periodic");
    cmd->add_option("--L", o.L, "box width, or layer period scale L1");
    cmd->add_option("--nx", o.nx, "grid cells in x");
    cmd->add_option("--nz", o.nz, "grid cells in z");
    cmd->add_option("--n-modes", o.n_modes, "vertical spectral modes");
    cmd->add_option("--n-modes-x", o.n_modes_x, "horizontal spectral modes");
    cmd->add_option("--mu", o.mu, "shear viscosity");
    cmd->add_option("--g", o.g, "gravity");
    cmd->add_option("--lambda", o.lambda, "permeability factor");
    cmd->add_option("--M3", o.M3, "vertical background field");
    cmd->add_option("--delta", o.delta, "perturbation amplitude");
    cmd->add_option("--deltas", o.deltas, "amplitude sweep (descending)");
    cmd->add_option("--eps0", o.eps0, "escape amplitude ceiling");
    cmd->add_option("--dt", o.dt, "time step");
    cmd->add_option("--t-end", o.t_end, "integration time");
    cmd->add_option("--observe-every", o.observe_every, "observer cadence");
    cmd->add_option("--snapshot-every", o.snapshot_every,
                    "field snapshot cadence (0 = off)");
    cmd->add_option("--tol", o.tol, "corrector tolerance");
    cmd->add_option("--max-iter", o.max_iter, "corrector iteration cap");
    cmd->add_option("--k-grid", o.k_grid, "explicit wavenumbers");
    cmd->add_option("--k-max", o.k_max, "sweep upper wavenumber");
    cmd->add_option("--k-count", o.k_count, "sweep size");
    cmd->add_option("--seed", o.seed, "seed for randomized sweeps");
    cmd->add_option("--mode", o.sim_mode,
                    "simulate: nonlinear | linear | linear-mhd");
    cmd->add_option("--init", o.init,
                    "simulate: 'eigenmode' or a bundle directory");
}

json build_config(const CLI::App* cmd, const CliOptions& o) {
    json j;
    if (!o.config_path.empty()) {
        std::ifstream in(o.config_path);
        if (!in) {
            std::fprintf(stderr, "cannot open config %s\n",
                         o.config_path.c_str());
            std::exit(2);
        }
        std::stringstream ss;
        ss << in.rdbuf();
        j = json::parse(ss.str());
    }
    auto set_if = [&](const char* flag, auto&& write) {
        if (cmd->count(flag) > 0) write();
    };
    set_if("--out", [&] { j["out_dir"] = o.out_dir; });
    set_if("--threads", [&] { j["threads"] = o.threads; });
    set_if("--family", [&] { j["profile"]["family"] = o.family; });
    set_if("--params", [&] { j["profile"]["params"] = o.params; });
    set_if("--height", [&] { j["profile"]["height"] = o.height; });
    set_if("--profile-csv", [&] { j["profile"]["csv"] = o.profile_csv; });
    set_if("--geometry", [&] { j["geometry"]["kind"] = o.geometry; });
    set_if("--L", [&] { j["geometry"]["L"] = o.L; });
    set_if("--nx", [&] { j["geometry"]["nx"] = o.nx; });
    set_if("--nz", [&] { j["geometry"]["nz"] = o.nz; });
    set_if("--n-modes", [&] { j["geometry"]["n_modes_vertical"] = o.n_modes; });
    set_if("--n-modes-x",
           [&] { j["geometry"]["n_modes_horizontal"] = o.n_modes_x; });
    set_if("--mu", [&] { j["physics"]["mu"] = o.mu; });
    set_if("--g", [&] { j["physics"]["g"] = o.g; });
    set_if("--lambda", [&] { j["physics"]["lambda"] = o.lambda; });
    set_if("--M3", [&] { j["physics"]["M3"] = o.M3; });
    set_if("--delta", [&] { j["delta"] = o.delta; });
    set_if("--deltas", [&] { j["deltas"] = o.deltas; });
    set_if("--eps0", [&] { j["eps0"] = o.eps0; });
    set_if("--dt", [&] { j["dt"] = o.dt; });
    set_if("--t-end", [&] { j["t_end"] = o.t_end; });
    set_if("--observe-every", [&] { j["observe_every"] = o.observe_every; });
    set_if("--snapshot-every", [&] { j["snapshot_every"] = o.snapshot_every; });
    set_if("--tol", [&] { j["tol"] = o.tol; });
    set_if("--max-iter", [&] { j["max_iter"] = o.max_iter; });
    set_if("--k-grid", [&] { j["k_grid"] = o.k_grid; });
    set_if("--k-max", [&] { j["k_max"] = o.k_max; });
    set_if("--k-count", [&] { j["k_count"] = o.k_count; });
    set_if("--seed", [&] { j["seed"] = o.seed; });
    set_if("--mode", [&] { j["sim_mode"] = o.sim_mode; });
    set_if("--init", [&] { j["init"] = o.init; });
    return j;
}

int run(const std::string& name, const CLI::App* cmd, const CliOptions& o) {
    const json cfg = build_config(cmd, o);
    const std::string text = cfg.dump();
    char* verdict = nullptr;
    const rtlab_status status = rtlab_run(name.c_str(), text.c_str(), &verdict);
    if (status != RTLAB_OK) {
        std::fprintf(stderr, "error [%s]: %s\n", rtlab_status_name(status),
                     rtlab_last_error());
        return 1;
    }
    if (verdict) {
        std::printf("%s\n", verdict);
        rtlab_string_free(verdict);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"rtlab — Rayleigh-Taylor instability laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rtlab_version());

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"growth", "growth-rate sweep over wavenumbers"},
        {"critical-field", "magnetic stabilization threshold"},
        {"make-initial-data", "compatibility-corrected initial data bundle"},
        {"simulate", "time integration with energy diagnostics"},
        {"escape", "escape-time scaling experiment"},
        {"error-scaling", "nonlinear-vs-linear error scaling"},
        {"gronwall", "Gronwall-type energy inequality check"},
        {"mhd-threshold", "spectral vs dynamical stabilization threshold"},
        {"certify", "end-to-end instability certificate"},
    };

    std::vector<std::unique_ptr<CliOptions>> opts;
    for (const auto& [name, desc] : commands) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        opts.push_back(std::make_unique<CliOptions>());
        add_common_flags(cmd, *opts.back());
        CliOptions* o = opts.back().get();
        cmd->callback([name = name, cmd, o] {
            std::exit(run(name, cmd, *o));
        });
    }

    CLI11_PARSE(app, argc, argv);
    return 0;
}
