// Command-line runner: `qmap run`, `qmap spectrum-only`, `qmap mc-validate`.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "qmap/experiment.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kOutDirEnv = "QMAP_OUT_DIR";

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

const std::vector<Flag> kFlags = {
    {"--sites", "chain.sites", "number of sites (even)"},
    {"--g1", "chain.g1", "intra-dimer coupling"},
    {"--g2", "chain.g2", "inter-dimer coupling"},
    {"--boundary", "chain.boundary", "periodic or open"},
    {"--k-over-pi", "probe.k_over_pi", "probe wavenumber in units of pi"},
    {"--alpha", "probe.alpha", "probe phase"},
    {"--kappa1", "protocol.kappa1", "first light-system coupling"},
    {"--kappa2", "protocol.kappa2", "second light-system coupling"},
    {"--kappaR", "protocol.kappaR", "memory read coupling"},
    {"--kappaW", "protocol.kappaW", "memory write coupling"},
    {"--eta-mem", "protocol.eta_mem", "memory transmission in (0, 1]"},
    {"--scenario", "scenario.type", "equilibrium or quench"},
    {"--g1-init", "scenario.g1_init", "quench: initial g1"},
    {"--g2-init", "scenario.g2_init", "quench: initial g2"},
    {"--t-max", "grid.t_max", "time window in units of 1/g"},
    {"--samples", "grid.samples", "number of time samples"},
    {"--window", "analysis.window", "hann or rect"},
    {"--shots", "mc.shots", "Monte Carlo shots"},
    {"--seed", "mc.seed", "Monte Carlo seed"},
    {"--mc-times", "mc.times", "comma-separated Monte Carlo times"},
    {"--out", "output.dir", "output directory"},
};

struct Options {
    std::string config;
    std::map<std::string, std::string> values;  // flag name -> value
    std::vector<std::string> sets;
    bool compensate_loss = false;
};

void add_common(CLI::App* cmd, Options& opts) {
    cmd->add_option("-c,--config", opts.config, "INI config file")->check(CLI::ExistingFile);
    for (const auto& f : kFlags) cmd->add_option(f.name, opts.values[f.name], f.help);
    cmd->add_flag("--compensate-loss", opts.compensate_loss, "divide the recovered signal by sqrt(eta_mem)");
    cmd->add_option("--set", opts.sets, "override any config key, e.g. --set analysis.oversample=8");
}

qmap::ExperimentConfig resolve(const CLI::App* cmd, const Options& opts) {
    qmap::ExperimentConfig cfg;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) cfg.out_dir = env;
    if (!opts.config.empty()) {
        std::ifstream in(opts.config);
        if (!in) throw qmap::ValidationError("cannot open config file " + opts.config);
        qmap::apply_entries(cfg, qmap::parse_ini(in, opts.config), opts.config);
    }
    for (const auto& f : kFlags) {
        if (cmd->count(f.name) > 0) qmap::set_config_value(cfg, f.key, opts.values.at(f.name), f.name);
    }
    if (opts.compensate_loss) cfg.protocol.compensate_loss = true;
    for (const auto& s : opts.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw qmap::ValidationError("--set expects key=value, got '" + s + "'");
        qmap::set_config_value(cfg, qmap::detail::trim(s.substr(0, eq)), qmap::detail::trim(s.substr(eq + 1)), "--set");
    }
    cfg.validate();
    return cfg;
}

json config_json(const qmap::ExperimentConfig& cfg) {
    json j = json::object();
    for (const auto& [k, v] : qmap::config_echo(cfg)) j[k] = v;
    return j;
}

json base_manifest(const std::string& command, const qmap::ExperimentConfig& cfg) {
    json m;
    m["tool"] = "qmap";
    m["version"] = QMAP_VERSION;
    m["command"] = command;
    m["config"] = config_json(cfg);
    m["seed"] = cfg.mc.seed;
    return m;
}

json experiment_manifest(const std::string& command, const qmap::ExperimentResult& r) {
    const auto& cfg = r.config;
    json m = base_manifest(command, cfg);
    m["wall_clock_seconds"] = r.seconds;
    m["initial_state"] = r.initial_state;
    m["ground_energy"] = r.ground_energy;
    m["spectral_gap"] = r.spectral_gap;
    m["ground_degenerate"] = r.ground_degenerate;
    m["probe"] = {{"groups", r.n_groups}, {"ambiguous_grouping", r.ambiguous_grouping}};

    double max_fm = 0.0;
    for (double v : r.signals.f_m) max_fm = std::max(max_fm, std::abs(v));
    const auto& p = cfg.protocol;
    m["loss"] = {
        {"eta_mem", p.eta_mem},
        {"signal_scale", p.signal_scale()},
        {"compensate_loss", p.compensate_loss},
        {"vacuum_floor", p.vacuum_floor()},
        {"kappa_T", p.kappaT()},
        {"noise_to_signal", max_fm > 0.0 ? p.vacuum_floor() / (p.kappaT() * max_fm) : 0.0},
    };
    m["signal_variance"] = {
        {"F_M", r.var_f_m},
        {"F_S", r.var_f_s},
        {"ratio", r.var_f_s > 0.0 ? r.var_f_m / r.var_f_s : 0.0},
    };

    json peaks = json::array();
    for (const auto& pm : r.match.matches) {
        peaks.push_back({{"omega", pm.omega},
                         {"amplitude", pm.amplitude},
                         {"nearest_gap", pm.nearest_gap},
                         {"distance", pm.distance},
                         {"matched", pm.matched}});
    }
    m["spectrum"] = {
        {"window", qmap::to_string(r.c_m.window)},
        {"resolution", r.c_m.resolution},
        {"omega_min", r.omega_min},
        {"rel_threshold", cfg.analysis.rel_threshold},
        {"C_S_max", *std::max_element(r.c_s.amplitudes.begin(), r.c_s.amplitudes.end())},
        {"C_M_max", *std::max_element(r.c_m.amplitudes.begin(), r.c_m.amplitudes.end())},
    };
    m["peak_match"] = {
        {"reference", cfg.scenario == qmap::Scenario::equilibrium ? "E_n - E_0" : "F_M stick gaps"},
        {"peaks", peaks},
        {"unmatched", r.match.unmatched},
        {"matched_fraction", r.match.matched_fraction},
        {"first_gap_seen", r.first_gap_seen},
        {"stick_agreement",
         {{"strong_sticks", r.stick_check.strong_sticks},
          {"sticks_without_peak", r.stick_check.sticks_without_peak},
          {"peaks_without_stick", r.stick_check.peaks_without_stick},
          {"agree", r.stick_check.agree()}}},
    };
    m["eigenvalues"] = r.eigenvalues;
    return m;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

int run_command(const std::string& command, const qmap::ExperimentConfig& cfg) {
    const fs::path dir = cfg.out_dir;
    fs::create_directories(dir);
    if (command == "mc-validate") {
        const auto start = std::chrono::steady_clock::now();
        const auto rows = qmap::run_mc_validation(cfg);
        qmap::write_mc_csv(dir / "mc.csv", rows);
        json m = base_manifest(command, cfg);
        json entries = json::array();
        int within = 0;
        for (const auto& row : rows) {
            const bool ok_var = std::abs(row.variance_mc.value - row.variance_exact) <= 3.0 * row.variance_mc.standard_error;
            const bool ok_fs = std::abs(row.f_s_mc.value - row.f_s_exact) <= 3.0 * row.f_s_mc.standard_error;
            within += ok_var && ok_fs;
            entries.push_back({{"t", row.t}, {"variance_within_3se", ok_var}, {"F_S_within_3se", ok_fs}});
        }
        m["shots"] = cfg.mc.shots;
        m["rows"] = entries;
        m["rows_within_3se"] = within;
        m["wall_clock_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        m["files"] = {"mc.csv"};
        write_json(dir / "manifest.json", m);
        std::cout << "mc-validate: " << within << "/" << rows.size() << " times within 3 standard errors -> "
                  << dir.string() << '\n';
        return 0;
    }
    const bool spectrum_only = command == "spectrum-only";
    const auto r = qmap::run_experiment(cfg, spectrum_only);
    qmap::write_series_csv(dir / "series.csv", r);
    qmap::write_spectrum_csv(dir / "spectrum.csv", r);
    qmap::write_sticks_csv(dir / "sticks.csv", r);
    json m = experiment_manifest(command, r);
    m["files"] = {"series.csv", "spectrum.csv", "sticks.csv"};
    write_json(dir / "manifest.json", m);
    std::cout << command << ": " << r.peaks_m.size() << " C_M peaks, " << r.match.unmatched << " unmatched, F_M/F_S variance ratio "
              << (r.var_f_s > 0.0 ? r.var_f_m / r.var_f_s : 0.0) << ", " << r.seconds << " s -> " << dir.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulator of memory-assisted probing of spin-chain dynamics"};
    app.set_version_flag("--version", QMAP_VERSION);
    app.require_subcommand(1);

    Options run_opts, spec_opts, mc_opts;
    auto* run = app.add_subcommand("run", "full pipeline: signals, protocol variance, spectra");
    auto* spec = app.add_subcommand("spectrum-only", "signals and spectra without the protocol variance");
    auto* mc = app.add_subcommand("mc-validate", "Monte Carlo check of the homodyne variance and F_S");
    add_common(run, run_opts);
    add_common(spec, spec_opts);
    add_common(mc, mc_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return run_command("run", resolve(run, run_opts));
        if (spec->parsed()) return run_command("spectrum-only", resolve(spec, spec_opts));
        return run_command("mc-validate", resolve(mc, mc_opts));
    } catch (const qmap::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const qmap::CapacityError& e) {
        std::cerr << "capacity error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
