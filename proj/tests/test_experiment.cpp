#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qmap/experiment.hpp"

using namespace qmap;

namespace {

ExperimentConfig from_text(const std::string& text) {
    std::istringstream in(text);
    ExperimentConfig cfg;
    apply_entries(cfg, parse_ini(in, "t.ini"), "t.ini");
    return cfg;
}

std::string error_of(const std::string& text) {
    try {
        from_text(text);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

ExperimentConfig two_site() {
    return from_text(
        "[chain]\nsites = 2\ng1 = 1\ng2 = 0\nboundary = open\n"
        "[probe]\nk_over_pi = 0.5\n"
        "[grid]\nt_max = 20\nsamples = 401\n");
}

ExperimentConfig small_ring(int n) {
    ExperimentConfig cfg;
    cfg.chain.n_sites = n;
    cfg.grid.t_max = 40.0;
    cfg.grid.n_samples = 256;
    return cfg;
}

}  // namespace

TEST(Ini, sections_comments_and_lines) {
    std::istringstream in("# header\n\n[chain]\nsites = 8 ; trailing\n  g1=0.5\n[grid]\nt_max = 10\n");
    const auto entries = parse_ini(in);
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_EQ(entries[0].key, "chain.sites");
    EXPECT_EQ(entries[0].value, "8");
    EXPECT_EQ(entries[0].line, 4);
    EXPECT_EQ(entries[1].key, "chain.g1");
    EXPECT_EQ(entries[2].line, 7);
}

TEST(Ini, malformed_input_names_the_line) {
    EXPECT_NE(error_of("[chain\n").find("t.ini:1"), std::string::npos);
    EXPECT_NE(error_of("[chain]\nsites 8\n").find("t.ini:2"), std::string::npos);
    EXPECT_NE(error_of("sites = 8\n").find("outside any section"), std::string::npos);
}

TEST(Config, semantic_errors_name_the_line) {
    const auto odd = error_of("[chain]\n\nsites = 13\n");
    EXPECT_NE(odd.find("t.ini:3"), std::string::npos);
    EXPECT_NE(odd.find("even"), std::string::npos);
    EXPECT_NE(error_of("[chain]\nspin = 1\n").find("unknown key 'chain.spin'"), std::string::npos);
    EXPECT_NE(error_of("[protocol]\neta_mem = 1.5\n").find("t.ini:2"), std::string::npos);
    EXPECT_NE(error_of("[protocol]\nkappa1 = 0\n").find("kappa1"), std::string::npos);
    EXPECT_NE(error_of("[grid]\nsamples = many\n").find("integer"), std::string::npos);
    EXPECT_NE(error_of("[chain]\ng1 = nan\n").find("finite"), std::string::npos);
}

TEST(Config, cross_field_checks) {
    auto cfg = from_text("[chain]\nsites = 24\n");
    EXPECT_THROW(cfg.validate(), CapacityError);
    cfg = from_text("[chain]\nsites = 24\nmax_sites = 24\n");
    EXPECT_NO_THROW(cfg.validate());
    cfg = from_text("[scenario]\ntype = quench\ng1_init = 1\ng2_init = 1\n");
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Config, echo_round_trips) {
    auto cfg = from_text("[chain]\nsites = 6\ng2 = 0.25\nboundary = open\n[mc]\ntimes = 0, 1.5\n[protocol]\neta_mem = 0.9\n");
    ExperimentConfig again;
    for (const auto& [k, v] : config_echo(cfg)) set_config_value(again, k, v, "echo");
    EXPECT_EQ(config_echo(again), config_echo(cfg));
    EXPECT_EQ(again.mc.times.size(), 2u);
    EXPECT_EQ(again.chain.boundary, Boundary::open);
}

TEST(Pipeline, two_site_series_matches_cosine) {
    const auto r = run_experiment(two_site());
    EXPECT_EQ(r.initial_state, "ground_state");
    for (std::size_t i = 0; i < r.signals.times.size(); ++i) {
        const double t = r.signals.times[i];
        EXPECT_NEAR(r.signals.f_m[i], std::cos(t), 1e-10);
        EXPECT_NEAR(r.signals.f_s[i], std::cos(t) / 2, 1e-10);
        EXPECT_NEAR(r.f_m_recovered[i], r.signals.f_m[i], 1e-10);
    }

    const auto dir = std::filesystem::temp_directory_path() / "qmap_test_two_site";
    std::filesystem::create_directories(dir);
    write_series_csv(dir / "series.csv", r);
    std::ifstream in(dir / "series.csv");
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,F_S,F_M,variance_total,eta,F_M_recovered");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string t, fs, fm;
        std::getline(ss, t, ',');
        std::getline(ss, fs, ',');
        std::getline(ss, fm, ',');
        EXPECT_NEAR(std::stod(fm), std::cos(std::stod(t)), 1e-10);
        ++rows;
    }
    EXPECT_EQ(rows, 401u);
}

TEST(Pipeline, equilibrium_sticks_sit_on_eigenvalues) {
    const auto r = run_experiment(small_ring(8));
    ASSERT_FALSE(r.sticks_m.empty());
    for (const auto& s : r.sticks_m) {
        const double e = r.ground_energy + s.gap;
        const double nearest = *std::min_element(r.eigenvalues.begin(), r.eigenvalues.end(), [&](double a, double b) {
            return std::abs(a - e) < std::abs(b - e);
        });
        EXPECT_NEAR(nearest, e, 1e-9);
    }
    EXPECT_EQ(r.match.unmatched, 0u);
    EXPECT_TRUE(r.stick_check.agree());
}

TEST(Pipeline, loss_scales_recovered_signal) {
    auto cfg = small_ring(6);
    cfg.protocol.eta_mem = 0.9025;
    const auto r = run_experiment(cfg);
    for (std::size_t i = 0; i < r.signals.times.size(); i += 17) {
        EXPECT_NEAR(r.f_m_recovered[i], 0.95 * r.signals.f_m[i], 1e-10);
    }
    cfg.protocol.compensate_loss = true;
    const auto c = run_experiment(cfg);
    for (std::size_t i = 0; i < c.signals.times.size(); i += 17) EXPECT_NEAR(c.f_m_recovered[i], c.signals.f_m[i], 1e-10);
}

TEST(Pipeline, quench_is_nonstationary_but_time_reversal_even) {
    auto cfg = small_ring(8);
    cfg.scenario = Scenario::quench;
    const auto r = run_experiment(cfg);
    EXPECT_EQ(r.initial_state, "singlet_product");
    const std::size_t n = r.signals.times.size();
    ASSERT_EQ(n, 2u * 256 - 1);
    EXPECT_DOUBLE_EQ(r.signals.times[255], 0.0);
    // real state and real H: F_M(-t) = F_M(t) even away from equilibrium
    for (std::size_t k = 0; k < 256; ++k) EXPECT_NEAR(r.signals.f_m[255 + k], r.signals.f_m[255 - k], 1e-12);
    // but Var J(t) moves, unlike in an eigenstate
    const auto [lo, hi] = std::minmax_element(r.signals.var_j.begin(), r.signals.var_j.end());
    EXPECT_GT(*hi - *lo, 1e-2);
    const auto eq = run_experiment(small_ring(8), true);
    const auto [elo, ehi] = std::minmax_element(eq.signals.var_j.begin(), eq.signals.var_j.end());
    EXPECT_LT(*ehi - *elo, 1e-12);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(r.f_m_recovered[i], r.signals.f_m[i], 1e-10);

    cfg.quench.g1_init = 1.0;
    cfg.quench.g2_init = 0.3;
    EXPECT_EQ(run_experiment(cfg, true).initial_state, "initial_ground_state");
}

TEST(Pipeline, spectrum_only_skips_protocol) {
    const auto r = run_experiment(small_ring(6), true);
    EXPECT_TRUE(r.variance.empty());
    EXPECT_TRUE(r.f_m_recovered.empty());
    EXPECT_FALSE(r.c_m.amplitudes.empty());
}

TEST(Pipeline, monte_carlo_rows) {
    auto cfg = small_ring(6);
    cfg.mc.shots = 20000;
    cfg.mc.times = {0.0, 1.0};
    const auto rows = run_mc_validation(cfg);
    ASSERT_EQ(rows.size(), 2u);
    for (const auto& row : rows) {
        EXPECT_LT(std::abs(row.variance_mc.value - row.variance_exact), 4.0 * row.variance_mc.standard_error);
        EXPECT_LT(std::abs(row.f_s_mc.value - row.f_s_exact), 4.0 * row.f_s_mc.standard_error);
    }
}

TEST(Output, number_format_round_trips) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678901234567}) EXPECT_EQ(std::stod(format_number(v)), v);
}
