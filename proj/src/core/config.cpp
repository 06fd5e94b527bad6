#include "core/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "core/error.hpp"

namespace rtlab {

using nlohmann::json;

namespace {

template <typename T>
void load(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        fail(ErrorCode::BadSpec, std::string("config parse error: ") + e.what());
    }
    ExperimentConfig c;
    if (j.contains("profile")) {
        const json& p = j["profile"];
        load(p, "family", c.profile_family);
        load(p, "params", c.profile_params);
        load(p, "height", c.height);
        load(p, "csv", c.profile_csv);
    }
    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        load(g, "kind", c.geometry_kind);
        load(g, "L", c.L);
        load(g, "n_modes_vertical", c.n_modes_vertical);
        load(g, "n_modes_horizontal", c.n_modes_horizontal);
        load(g, "nx", c.nx);
        load(g, "nz", c.nz);
    }
    if (j.contains("physics")) {
        const json& p = j["physics"];
        load(p, "mu", c.mu);
        load(p, "g", c.g);
        load(p, "lambda", c.lambda);
        load(p, "M3", c.M3);
    }
    load(j, "deltas", c.deltas);
    load(j, "eps0", c.eps0);
    load(j, "k_grid", c.k_grid);
    load(j, "k_max", c.k_max);
    load(j, "k_count", c.k_count);
    load(j, "dt", c.dt);
    load(j, "t_end", c.t_end);
    load(j, "observe_every", c.observe_every);
    load(j, "snapshot_every", c.snapshot_every);
    load(j, "tol", c.tol);
    load(j, "max_iter", c.max_iter);
    load(j, "seed", c.seed);
    load(j, "threads", c.threads);
    load(j, "out_dir", c.out_dir);
    load(j, "init", c.init);
    load(j, "sim_mode", c.sim_mode);
    load(j, "delta", c.delta);
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["profile"] = {{"family", profile_family},
                    {"params", profile_params},
                    {"height", height}};
    if (!profile_csv.empty()) j["profile"]["csv"] = profile_csv;
    j["geometry"] = {{"kind", geometry_kind},
                     {"L", L},
                     {"n_modes_vertical", n_modes_vertical},
                     {"n_modes_horizontal", n_modes_horizontal},
                     {"nx", nx},
                     {"nz", nz}};
    j["physics"] = {{"mu", mu}, {"g", g}, {"lambda", lambda}, {"M3", M3}};
    j["deltas"] = deltas;
    j["eps0"] = eps0;
    if (!k_grid.empty()) j["k_grid"] = k_grid;
    j["k_max"] = k_max;
    j["k_count"] = k_count;
    j["dt"] = dt;
    j["t_end"] = t_end;
    j["observe_every"] = observe_every;
    j["snapshot_every"] = snapshot_every;
    j["tol"] = tol;
    j["max_iter"] = max_iter;
    j["seed"] = seed;
    j["threads"] = threads;
    j["out_dir"] = out_dir;
    j["init"] = init;
    j["sim_mode"] = sim_mode;
    j["delta"] = delta;
    return j.dump(2);
}

void ExperimentConfig::validate() const {
    if (deltas.empty()) fail(ErrorCode::BadSpec, "deltas must be nonempty");
    for (size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0))
            fail(ErrorCode::BadSpec, "deltas must be positive");
        if (i > 0 && !(deltas[i] < deltas[i - 1]))
            fail(ErrorCode::BadSpec, "deltas must be sorted descending");
    }
    if (!(eps0 > 0.0 && eps0 < 1.0))
        fail(ErrorCode::BadSpec, "eps0 must lie in (0, 1)");
    if (geometry_kind != "box-clamped" && geometry_kind != "layer-periodic")
        fail(ErrorCode::BadSpec, "geometry kind must be box-clamped or "
                                 "layer-periodic");
    if (sim_mode != "nonlinear" && sim_mode != "linear" &&
        sim_mode != "linear-mhd")
        fail(ErrorCode::BadSpec,
             "sim_mode must be nonlinear, linear or linear-mhd");
    if (threads < 1) fail(ErrorCode::BadSpec, "threads must be >= 1");
}

DensityProfile ExperimentConfig::make_profile() const {
    if (!profile_csv.empty() || profile_family == "tabulated") {
        if (profile_csv.empty())
            fail(ErrorCode::BadSpec, "tabulated profile needs a csv path");
        return load_profile_csv(profile_csv);
    }
    return DensityProfile::make(profile_family, profile_params, height);
}

PhysicalParams ExperimentConfig::make_params() const {
    PhysicalParams p;
    p.mu = mu;
    p.g = g;
    p.lambda = lambda;
    p.M3 = M3;
    p.validate();
    return p;
}

Geometry ExperimentConfig::make_spectral_geometry() const {
    if (layer()) return Geometry::layer(L, height, n_modes_vertical);
    return Geometry::box(L, height, n_modes_horizontal, n_modes_vertical);
}

std::vector<double> ExperimentConfig::wavenumbers() const {
    if (!k_grid.empty()) return k_grid;
    if (layer()) {
        const int count =
            std::max(1, static_cast<int>(std::floor(k_max * L + 1e-9)));
        return wavenumber_lattice(L, std::min(count, k_count));
    }
    std::vector<double> ks;
    for (int n = 1; n <= k_count; ++n)
        ks.push_back(k_max * n / static_cast<double>(k_count));
    return ks;
}

DensityProfile load_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open profile csv " + path);
    std::vector<double> xs, ys;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        for (char& ch : line)
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        std::istringstream ls(line);
        double x, y;
        if (ls >> x >> y) {
            xs.push_back(x);
            ys.push_back(y);
        }
    }
    if (xs.size() < 3)
        fail(ErrorCode::BadSpec, "profile csv needs at least 3 rows");
    return DensityProfile::tabulated(std::move(xs), std::move(ys));
}

} // namespace rtlab
