#pragma once

// Scenario configuration, the end-to-end pipeline, and CSV emission.
//
// Config files are flat INI: `[section]` headers, `key = value` lines, `#` or
// `;` comments. Every key can also be set from the command line; both routes
// go through `set_config_value` so errors name the offending line or flag.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qmap/correlators.hpp"
#include "qmap/gaussian.hpp"
#include "qmap/probe.hpp"
#include "qmap/spectra.hpp"
#include "qmap/spinchain.hpp"

namespace qmap {

enum class Scenario { equilibrium, quench };

inline const char* to_string(Scenario s) { return s == Scenario::equilibrium ? "equilibrium" : "quench"; }

struct QuenchSpec {
    double g1_init = 1.0;
    double g2_init = 0.0;
};

struct GridSpec {
    double t_max = 200.0;
    int n_samples = 2048;
};

struct AnalysisSpec {
    Window window = Window::hann;
    double rel_threshold = 0.1;
    double omega_min = -1.0;  // negative: twice the resolution
    int oversample = 4;
};

struct McSpec {
    std::uint64_t shots = 100000;
    std::uint64_t seed = 20240601;
    std::vector<double> times{0.0, 0.5, 1.0, 2.0, 5.0};
};

struct ExperimentConfig {
    SpinChainSpec chain;
    double k_over_pi = 0.5;
    double alpha = 0.0;
    double group_rel_tol = kDefaultGroupRelTolerance;
    ProtocolParams protocol;
    Scenario scenario = Scenario::equilibrium;
    QuenchSpec quench;
    GridSpec grid;
    AnalysisSpec analysis;
    McSpec mc;
    DiagonalizationOptions diag;
    std::string out_dir = "qmap_out";

    [[nodiscard]] ProbeGeometry probe() const {
        return {k_over_pi * std::numbers::pi, alpha, chain.n_sites};
    }

    [[nodiscard]] SpinChainSpec initial_chain() const {
        SpinChainSpec s = chain;
        s.g1 = quench.g1_init;
        s.g2 = quench.g2_init;
        return s;
    }

    /// Cross-field checks; single values are checked when they are set.
    void validate() const {
        chain.validate();
        protocol.validate();
        if (scenario == Scenario::quench && quench.g1_init == chain.g1 && quench.g2_init == chain.g2) {
            throw ValidationError("quench: the initial couplings equal the evolution couplings");
        }
        if (grid.n_samples < 2) throw ValidationError("grid.samples must be at least 2");
        if (!(grid.t_max > 0.0)) throw ValidationError("grid.t_max must be positive");
    }
};

// ---------------------------------------------------------------------------
// Parsing

struct ConfigEntry {
    std::string key;  // "section.name"
    std::string value;
    int line = 0;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

inline double parse_double(const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ValidationError("expected a finite number, got '" + v + "'");
    return out;
}

inline long long parse_int(const std::string& v) {
    long long out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ValidationError("expected an integer, got '" + v + "'");
    return out;
}

inline std::uint64_t parse_uint(const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) throw ValidationError("expected a non-negative integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError("expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
    if (out.empty()) throw ValidationError("expected a comma-separated list of numbers");
    return out;
}

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

}  // namespace detail

/// Reads `key = value` lines grouped under `[section]` headers.
inline std::vector<ConfigEntry> parse_ini(std::istream& in, const std::string& source = "config") {
    std::vector<ConfigEntry> entries;
    std::string section;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (text.empty()) continue;
        const std::string where = source + ":" + std::to_string(line);
        if (text.front() == '[') {
            if (text.back() != ']' || text.size() < 3) throw ValidationError(where + ": malformed section header");
            section = detail::trim(text.substr(1, text.size() - 2));
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ValidationError(where + ": expected 'key = value'");
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));
        if (key.empty()) throw ValidationError(where + ": missing key");
        if (section.empty()) throw ValidationError(where + ": key '" + key + "' outside any section");
        entries.push_back({section + "." + key, value, line});
    }
    return entries;
}

/// Sets one config key from its string form. Errors are prefixed with `where`.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                             const std::string& where) {
    using namespace detail;
    try {
        if (key == "chain.sites") {
            const long long n = parse_int(value);
            require(n >= 2 && n % 2 == 0, "chain.sites must be even and at least 2");
            // the cap itself is checked in validate(), after chain.max_sites is known
            require(n <= 62, "chain.sites is out of range");
            cfg.chain.n_sites = static_cast<int>(n);
        } else if (key == "chain.max_sites") {
            const long long n = parse_int(value);
            require(n >= 2 && n <= 30, "chain.max_sites must lie in [2, 30]");
            cfg.chain.max_sites = static_cast<int>(n);
        } else if (key == "chain.g1") {
            cfg.chain.g1 = parse_double(value);
        } else if (key == "chain.g2") {
            cfg.chain.g2 = parse_double(value);
        } else if (key == "chain.boundary") {
            require(value == "periodic" || value == "open", "chain.boundary must be periodic or open");
            cfg.chain.boundary = value == "periodic" ? Boundary::periodic : Boundary::open;
        } else if (key == "probe.k_over_pi") {
            cfg.k_over_pi = parse_double(value);
        } else if (key == "probe.alpha") {
            cfg.alpha = parse_double(value);
        } else if (key == "probe.group_tol") {
            cfg.group_rel_tol = parse_double(value);
            require(cfg.group_rel_tol > 0.0, "probe.group_tol must be positive");
        } else if (key == "protocol.kappa1" || key == "protocol.kappa2" || key == "protocol.kappaR" ||
                   key == "protocol.kappaW") {
            const double k = parse_double(value);
            require(k > 0.0, key + " must be positive");
            double& slot = key == "protocol.kappa1"   ? cfg.protocol.kappa1
                           : key == "protocol.kappa2" ? cfg.protocol.kappa2
                           : key == "protocol.kappaR" ? cfg.protocol.kappaR
                                                      : cfg.protocol.kappaW;
            slot = k;
        } else if (key == "protocol.eta_mem") {
            const double eta = parse_double(value);
            require(eta > 0.0 && eta <= 1.0, "protocol.eta_mem must lie in (0, 1]");
            cfg.protocol.eta_mem = eta;
        } else if (key == "protocol.compensate_loss") {
            cfg.protocol.compensate_loss = parse_bool(value);
        } else if (key == "scenario.type") {
            require(value == "equilibrium" || value == "quench", "scenario.type must be equilibrium or quench");
            cfg.scenario = value == "equilibrium" ? Scenario::equilibrium : Scenario::quench;
        } else if (key == "scenario.g1_init") {
            cfg.quench.g1_init = parse_double(value);
        } else if (key == "scenario.g2_init") {
            cfg.quench.g2_init = parse_double(value);
        } else if (key == "grid.t_max") {
            cfg.grid.t_max = parse_double(value);
            require(cfg.grid.t_max > 0.0, "grid.t_max must be positive");
        } else if (key == "grid.samples") {
            const long long n = parse_int(value);
            require(n >= 2, "grid.samples must be at least 2");
            if (n > 1'000'000) throw CapacityError(where + ": grid.samples exceeds 1000000");
            cfg.grid.n_samples = static_cast<int>(n);
        } else if (key == "analysis.window") {
            require(value == "hann" || value == "rect", "analysis.window must be hann or rect");
            cfg.analysis.window = value == "hann" ? Window::hann : Window::rect;
        } else if (key == "analysis.rel_threshold") {
            cfg.analysis.rel_threshold = parse_double(value);
            require(cfg.analysis.rel_threshold > 0.0 && cfg.analysis.rel_threshold < 1.0,
                    "analysis.rel_threshold must lie in (0, 1)");
        } else if (key == "analysis.omega_min") {
            cfg.analysis.omega_min = parse_double(value);
        } else if (key == "analysis.oversample") {
            const long long n = parse_int(value);
            require(n >= 1 && n <= 64, "analysis.oversample must lie in [1, 64]");
            cfg.analysis.oversample = static_cast<int>(n);
        } else if (key == "mc.shots") {
            cfg.mc.shots = parse_uint(value);
            require(cfg.mc.shots >= 2, "mc.shots must be at least 2");
        } else if (key == "mc.seed") {
            cfg.mc.seed = parse_uint(value);
        } else if (key == "mc.times") {
            cfg.mc.times = parse_list(value);
        } else if (key == "diag.method") {
            require(value == "automatic" || value == "dense" || value == "sz_blocks",
                    "diag.method must be automatic, dense or sz_blocks");
            cfg.diag.method = value == "automatic" ? DiagonalizationMethod::automatic
                              : value == "dense"   ? DiagonalizationMethod::dense
                                                   : DiagonalizationMethod::sz_blocks;
        } else if (key == "diag.max_block_dim") {
            const long long n = parse_int(value);
            require(n >= 1, "diag.max_block_dim must be positive");
            cfg.diag.max_block_dim = static_cast<std::size_t>(n);
        } else if (key == "output.dir") {
            require(!value.empty(), "output.dir must not be empty");
            cfg.out_dir = value;
        } else {
            throw ValidationError("unknown key '" + key + "'");
        }
    } catch (const CapacityError&) {
        throw;
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    }
}

/// Applies parsed entries and returns the source location of every key.
inline std::map<std::string, std::string> apply_entries(ExperimentConfig& cfg, const std::vector<ConfigEntry>& entries,
                                                        const std::string& source = "config") {
    std::map<std::string, std::string> where;
    for (const auto& e : entries) {
        const std::string loc = source + ":" + std::to_string(e.line);
        set_config_value(cfg, e.key, e.value, loc);
        where[e.key] = loc;
    }
    return where;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());
    ExperimentConfig cfg;
    apply_entries(cfg, parse_ini(in, path.string()), path.string());
    return cfg;
}

/// Flat key/value echo of the resolved configuration.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ExperimentConfig& c) {
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string times;
    for (std::size_t i = 0; i < c.mc.times.size(); ++i) times += (i ? "," : "") + num(c.mc.times[i]);
    const char* method = c.diag.method == DiagonalizationMethod::automatic ? "automatic"
                         : c.diag.method == DiagonalizationMethod::dense   ? "dense"
                                                                           : "sz_blocks";
    return {
        {"chain.sites", std::to_string(c.chain.n_sites)},
        {"chain.g1", num(c.chain.g1)},
        {"chain.g2", num(c.chain.g2)},
        {"chain.boundary", to_string(c.chain.boundary)},
        {"chain.max_sites", std::to_string(c.chain.max_sites)},
        {"probe.k_over_pi", num(c.k_over_pi)},
        {"probe.alpha", num(c.alpha)},
        {"probe.group_tol", num(c.group_rel_tol)},
        {"protocol.kappa1", num(c.protocol.kappa1)},
        {"protocol.kappa2", num(c.protocol.kappa2)},
        {"protocol.kappaR", num(c.protocol.kappaR)},
        {"protocol.kappaW", num(c.protocol.kappaW)},
        {"protocol.eta_mem", num(c.protocol.eta_mem)},
        {"protocol.compensate_loss", c.protocol.compensate_loss ? "true" : "false"},
        {"scenario.type", to_string(c.scenario)},
        {"scenario.g1_init", num(c.quench.g1_init)},
        {"scenario.g2_init", num(c.quench.g2_init)},
        {"grid.t_max", num(c.grid.t_max)},
        {"grid.samples", std::to_string(c.grid.n_samples)},
        {"analysis.window", to_string(c.analysis.window)},
        {"analysis.rel_threshold", num(c.analysis.rel_threshold)},
        {"analysis.omega_min", num(c.analysis.omega_min)},
        {"analysis.oversample", std::to_string(c.analysis.oversample)},
        {"mc.shots", std::to_string(c.mc.shots)},
        {"mc.seed", std::to_string(c.mc.seed)},
        {"mc.times", times},
        {"diag.method", method},
        {"diag.max_block_dim", std::to_string(c.diag.max_block_dim)},
        {"output.dir", c.out_dir},
    };
}

// ---------------------------------------------------------------------------
// Pipeline

struct StickCheck {
    std::size_t strong_sticks = 0;     // sticks above rel_threshold of the largest, outside omega_min
    std::size_t sticks_without_peak = 0;
    std::size_t peaks_without_stick = 0;
    [[nodiscard]] bool agree() const { return sticks_without_peak == 0 && peaks_without_stick == 0; }
};

struct ExperimentResult {
    ExperimentConfig config;
    bool spectrum_only = false;

    std::vector<double> eigenvalues;
    double ground_energy = 0.0;
    double spectral_gap = 0.0;
    bool ground_degenerate = false;
    std::string initial_state;
    std::size_t n_groups = 0;
    bool ambiguous_grouping = false;

    SignalSeries signals;
    std::vector<VarianceBreakdown> variance;
    std::vector<double> f_m_recovered;

    Spectrum c_s;
    Spectrum c_m;
    double omega_min = 0.0;
    std::vector<Stick> sticks_s;
    std::vector<Stick> sticks_m;
    std::vector<Peak> peaks_m;
    MatchReport match;
    StickCheck stick_check;
    bool first_gap_seen = false;

    double var_f_m = 0.0;
    double var_f_s = 0.0;
    double seconds = 0.0;
};

namespace detail {

inline double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(xs.size() - 1);
}

inline StickCheck compare_sticks(const std::vector<Stick>& sticks, const std::vector<Peak>& found, double rel_threshold,
                                 double omega_min, double tol) {
    StickCheck check;
    double wmax = 0.0;
    for (const auto& s : sticks) {
        if (std::abs(s.gap) > omega_min) wmax = std::max(wmax, std::abs(s.xi));
    }
    std::vector<double> strong;
    for (const auto& s : sticks) {
        if (s.gap > omega_min && std::abs(s.xi) > rel_threshold * wmax) strong.push_back(s.gap);
    }
    check.strong_sticks = strong.size();
    for (double g : strong) {
        const bool hit = std::any_of(found.begin(), found.end(), [&](const Peak& p) { return std::abs(std::abs(p.omega) - g) <= tol; });
        if (!hit) ++check.sticks_without_peak;
    }
    for (const auto& p : found) {
        const bool hit = std::any_of(strong.begin(), strong.end(), [&](double g) { return std::abs(std::abs(p.omega) - g) <= tol; });
        if (!hit) ++check.peaks_without_stick;
    }
    return check;
}

}  // namespace detail

struct Prepared {
    SpectralDecomposition decomp;
    ProbeObservable obs;
    ManyBodyState psi;
    std::string initial_state;
    GroundState ground;
};

/// Diagonalizes the evolution Hamiltonian and builds J and the initial state.
inline Prepared prepare(const ExperimentConfig& cfg) {
    cfg.validate();
    auto decomp = diagonalize(build_hamiltonian(cfg.chain), cfg.diag);
    auto obs = build_J(cfg.probe(), cfg.group_rel_tol);
    auto ground = ground_state(decomp);
    ManyBodyState psi;
    std::string label;
    if (cfg.scenario == Scenario::equilibrium) {
        psi = ground.state;
        label = "ground_state";
    } else if (cfg.quench.g2_init == 0.0 && cfg.quench.g1_init > 0.0) {
        psi = singlet_product_state(cfg.chain.n_sites);
        label = "singlet_product";
    } else {
        psi = ground_state(cfg.initial_chain(), cfg.diag).state;
        label = "initial_ground_state";
    }
    return {std::move(decomp), std::move(obs), std::move(psi), label, std::move(ground)};
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool spectrum_only = false) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentResult r;
    r.config = cfg;
    r.spectrum_only = spectrum_only;
    const Prepared prep = prepare(cfg);
    const auto& decomp = prep.decomp;
    const auto& obs = prep.obs;
    r.eigenvalues = decomp.eigenvalues();
    r.ground_energy = prep.ground.energy;
    r.spectral_gap = prep.ground.gap;
    r.ground_degenerate = prep.ground.degenerate;
    r.initial_state = prep.initial_state;
    r.n_groups = obs.groups().size();
    r.ambiguous_grouping = obs.ambiguous_grouping();

    const bool eq = cfg.scenario == Scenario::equilibrium;
    const auto times = eq ? time_grid(cfg.grid.t_max, cfg.grid.n_samples) : two_sided_grid(cfg.grid.t_max, cfg.grid.n_samples);
    r.signals = compute_signals(prep.psi, decomp, obs, times);

    if (!spectrum_only) {
        r.variance = variance_series(cfg.protocol, prep.psi, decomp, obs, times);
        std::vector<double> total(times.size()), var0(times.size());
        const auto& v = prep.psi.amplitudes();
        const double var_j0 = obs.expectation_squared(v) - std::pow(obs.expectation(v), 2);
        for (std::size_t i = 0; i < times.size(); ++i) {
            total[i] = r.variance[i].total;
            var0[i] = var_j0;
        }
        r.f_m_recovered = subtract_noise(total, r.signals.var_j, var0, cfg.protocol);
    }

    SpectrumOptions sopts;
    sopts.window = cfg.analysis.window;
    sopts.oversample = cfg.analysis.oversample;
    const Extension ext = eq ? Extension::even : Extension::two_sided;
    r.c_s = dft(r.signals.series(SignalKind::F_S), sopts, ext);
    r.c_m = dft(r.signals.series(SignalKind::F_M), sopts, ext);
    r.omega_min = cfg.analysis.omega_min < 0.0 ? 2.0 * r.c_m.resolution : cfg.analysis.omega_min;

    r.sticks_s = stick_cs(decomp, obs, prep.psi);
    r.sticks_m = eq ? stick_cm(decomp, obs, 0) : stick_fm(decomp, obs, prep.psi);

    r.peaks_m = peaks(r.c_m, {cfg.analysis.rel_threshold, r.omega_min});
    std::vector<double> gaps;
    if (eq) {
        gaps = energy_gaps(decomp, 0);
    } else {
        for (const auto& s : r.sticks_m) gaps.push_back(std::abs(s.gap));
    }
    r.match = match_peaks(r.peaks_m, gaps, r.c_m.resolution);
    r.stick_check = detail::compare_sticks(r.sticks_m, r.peaks_m, cfg.analysis.rel_threshold, r.omega_min, r.c_m.resolution);
    if (eq && !r.ground_degenerate) {
        const double gap = r.spectral_gap;
        r.first_gap_seen = std::any_of(r.peaks_m.begin(), r.peaks_m.end(),
                                       [&](const Peak& p) { return std::abs(std::abs(p.omega) - gap) <= r.c_m.resolution; });
    }

    r.var_f_m = detail::sample_variance(r.signals.f_m);
    r.var_f_s = detail::sample_variance(r.signals.f_s);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// ---------------------------------------------------------------------------
// Monte Carlo validation

struct McRow {
    double t;
    double variance_exact;
    McEstimate variance_mc;
    double f_s_exact;
    McEstimate f_s_mc;
};

inline std::vector<McRow> run_mc_validation(const ExperimentConfig& cfg) {
    const Prepared prep = prepare(cfg);
    if (cfg.mc.shots < 2) throw ValidationError("mc.shots must be at least 2");
    std::vector<McRow> rows;
    std::uint64_t k = 0;
    for (double t : cfg.mc.times) {
        McRow row{};
        row.t = t;
        row.variance_exact = variance(run_protocol(cfg.protocol, t), prep.psi, prep.decomp, prep.obs).total;
        row.variance_mc = mc_homodyne(cfg.protocol, prep.psi, prep.decomp, prep.obs, t, cfg.mc.shots,
                                      splitmix64(cfg.mc.seed + 2 * k), cfg.diag.max_block_dim);
        row.f_s_exact = f_s(prep.psi, prep.decomp, prep.obs, t);
        row.f_s_mc = mc_f_s(prep.psi, prep.decomp, prep.obs, t, cfg.mc.shots, splitmix64(cfg.mc.seed + 2 * k + 1));
        rows.push_back(row);
        ++k;
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

}  // namespace detail

inline void write_series_csv(const std::filesystem::path& path, const ExperimentResult& r) {
    auto out = detail::open_output(path);
    const bool full = !r.spectrum_only;
    out << "t,F_S,F_M" << (full ? ",variance_total,eta,F_M_recovered" : "") << '\n';
    for (std::size_t i = 0; i < r.signals.times.size(); ++i) {
        out << format_number(r.signals.times[i]) << ',' << format_number(r.signals.f_s[i]) << ','
            << format_number(r.signals.f_m[i]);
        if (full) {
            out << ',' << format_number(r.variance[i].total) << ',' << format_number(r.variance[i].eta()) << ','
                << format_number(r.f_m_recovered[i]);
        }
        out << '\n';
    }
}

inline void write_spectrum_csv(const std::filesystem::path& path, const ExperimentResult& r) {
    auto out = detail::open_output(path);
    out << "omega,C_S,C_M\n";
    for (std::size_t i = 0; i < r.c_m.omegas.size(); ++i) {
        out << format_number(r.c_m.omegas[i]) << ',' << format_number(r.c_s.amplitudes[i]) << ','
            << format_number(r.c_m.amplitudes[i]) << '\n';
    }
}

// xi is the real part; xi_imag carries the rest of the complex weight.
inline void write_sticks_csv(const std::filesystem::path& path, const ExperimentResult& r) {
    auto out = detail::open_output(path);
    out << "gap,xi,kind,xi_imag\n";
    auto emit = [&](const std::vector<Stick>& sticks, const char* kind) {
        for (const auto& s : sticks) {
            out << format_number(s.gap) << ',' << format_number(s.xi.real()) << ',' << kind << ','
                << format_number(s.xi.imag()) << '\n';
        }
    };
    emit(r.sticks_m, "C_M");
    emit(r.sticks_s, "C_S");
}

inline void write_mc_csv(const std::filesystem::path& path, const std::vector<McRow>& rows) {
    auto z = [](double estimate, double exact, double se) {
        const double diff = estimate - exact;
        if (se > 0.0) return diff / se;
        return diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    };
    auto out = detail::open_output(path);
    out << "t,variance_exact,variance_mc,variance_se,variance_z,F_S_exact,F_S_mc,F_S_se,F_S_z\n";
    for (const auto& row : rows) {
        out << format_number(row.t) << ',' << format_number(row.variance_exact) << ','
            << format_number(row.variance_mc.value) << ',' << format_number(row.variance_mc.standard_error) << ','
            << format_number(z(row.variance_mc.value, row.variance_exact, row.variance_mc.standard_error)) << ','
            << format_number(row.f_s_exact) << ',' << format_number(row.f_s_mc.value) << ','
            << format_number(row.f_s_mc.standard_error) << ','
            << format_number(z(row.f_s_mc.value, row.f_s_exact, row.f_s_mc.standard_error)) << '\n';
    }
}

}  // namespace qmap
