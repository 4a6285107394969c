#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qmap/gaussian.hpp"
#include "test_util.hpp"

using namespace qmap;
using std::numbers::pi;

namespace {

ProtocolParams params(double k1, double k2, double kr, double kw, double eta = 1.0) {
    ProtocolParams p;
    p.kappa1 = k1;
    p.kappa2 = k2;
    p.kappaR = kr;
    p.kappaW = kw;
    p.eta_mem = eta;
    return p;
}

struct System {
    SpectralDecomposition decomp;
    ProbeObservable obs;
};

System system(int n, double g1, double g2, const std::vector<double>& c) {
    return {diagonalize(build_hamiltonian(test::chain(n, g1, g2))), build_J(c, n)};
}

}  // namespace

TEST(Coupling, kappa_from_optical_depth) {
    CouplingSpec c{100.0, 0.1};
    EXPECT_NEAR(c.kappa(), std::sqrt(10.0), 1e-15);
    EXPECT_NEAR(c.kappa() * c.kappa(), c.d * c.eta_A, 1e-13);
    EXPECT_THROW(CouplingSpec({0.0, 0.1}).validate(), ValidationError);
    EXPECT_THROW(CouplingSpec({10.0, 1.5}).validate(), ValidationError);
}

TEST(Params, validation) {
    EXPECT_NO_THROW(params(1, 1, 1, 1).validate());
    EXPECT_THROW(params(0, 1, 1, 1).validate(), ValidationError);
    EXPECT_NO_THROW(params(0, 1, 1, 1).validate_non_negative());
    EXPECT_THROW(params(-1, 1, 1, 1).validate_non_negative(), ValidationError);
    EXPECT_THROW(params(1, 1, 1, 1, 0.0).validate_non_negative(), ValidationError);
    EXPECT_THROW(params(1, 1, 1, 1, 1.1).validate_non_negative(), ValidationError);
    EXPECT_DOUBLE_EQ(params(10, 10, 2, 2).kappaT(), 400.0);
}

TEST(Gates, faraday_shifts_x_only) {
    QuadratureNetwork net;
    const int s = net.register_slot(0.0);
    net.faraday(Mode::L1, 3.0, s);
    EXPECT_DOUBLE_EQ(net.x(Mode::L1).operator_coefficient(s), -3.0);
    EXPECT_DOUBLE_EQ(net.x(Mode::L1).vacuum_coefficient(Mode::L1, Quadrature::X), 1.0);
    EXPECT_TRUE(net.p(Mode::L1).operator_terms().empty());
    EXPECT_THROW(net.faraday(Mode::L1, 1.0, 5), StructuralError);
}

TEST(Gates, quarter_rotation_swaps_quadratures) {
    QuadratureNetwork net;
    net.rotate(Mode::M, pi / 2);
    EXPECT_EQ(net.x(Mode::M).vacuum_coefficient(Mode::M, Quadrature::X), 0.0);
    EXPECT_EQ(net.x(Mode::M).vacuum_coefficient(Mode::M, Quadrature::P), 1.0);
    EXPECT_EQ(net.p(Mode::M).vacuum_coefficient(Mode::M, Quadrature::X), -1.0);
    net.rotate(Mode::M, 0.3);
    net.rotate(Mode::M, -0.3);
    EXPECT_NEAR(net.x(Mode::M).vacuum_coefficient(Mode::M, Quadrature::P), 1.0, 1e-15);
    // rotations preserve the vacuum variance
    net.rotate(Mode::M, 0.77);
    EXPECT_NEAR(net.x(Mode::M).vacuum_variance(), 0.5, 1e-15);
}

TEST(Gates, write_then_read_adds_noise) {
    QuadratureNetwork net;
    net.write(Mode::L1, Mode::M, 1.0);
    EXPECT_DOUBLE_EQ(net.x(Mode::M).vacuum_coefficient(Mode::L1, Quadrature::P), 1.0);
    net.read(Mode::M, Mode::L2, 1.0);
    // X_L2 + P_M: two independent vacua
    EXPECT_DOUBLE_EQ(net.x(Mode::L2).vacuum_variance(), 1.0);
    QuadratureNetwork chain;
    chain.write(Mode::L1, Mode::M, 1.0);
    chain.rotate(Mode::M, pi / 2);
    chain.read(Mode::M, Mode::L2, 1.0);
    // X_L2 - X_M - P_L1
    EXPECT_DOUBLE_EQ(chain.x(Mode::L2).vacuum_variance(), 1.5);
}

TEST(Gates, memory_loss_is_a_beam_splitter) {
    QuadratureNetwork net;
    const int s = net.register_slot(0.0);
    net.faraday(Mode::L1, 1.0, s);
    net.rotate(Mode::L1, pi / 2);
    net.write(Mode::L1, Mode::M, 1.0);
    net.rotate(Mode::M, pi / 2);
    const double before = net.p(Mode::M).operator_coefficient(s);
    ASSERT_DOUBLE_EQ(before, -1.0);
    net.apply_memory_loss(0.81);
    EXPECT_NEAR(net.p(Mode::M).operator_coefficient(s), 0.9 * before, 1e-15);
    EXPECT_NEAR(net.x(Mode::M).vacuum_coefficient(Mode::V_loss, Quadrature::X), std::sqrt(0.19), 1e-15);
    EXPECT_NEAR(net.x(Mode::M).vacuum_variance(), 0.5, 1e-15);
    EXPECT_THROW(net.apply_memory_loss(0.0), ValidationError);
}

TEST(Protocol, lossless_closed_form) {
    const auto p = params(1.3, 0.7, 2.1, 0.4);
    const auto run = run_protocol(p, 1.5);
    const auto& f = run.measured;
    const double kt = p.kappaT();
    EXPECT_NEAR(f.vacuum_coefficient(Mode::L2, Quadrature::X), 1.0, 1e-15);
    EXPECT_NEAR(f.vacuum_coefficient(Mode::M, Quadrature::X), -p.kappaR, 1e-15);
    EXPECT_NEAR(f.vacuum_coefficient(Mode::L1, Quadrature::X), p.kappaR * p.kappaW, 1e-15);
    EXPECT_NEAR(f.operator_coefficient(run.slot_jt), -p.kappa2, 1e-15);
    EXPECT_NEAR(f.operator_coefficient(run.slot_j0), -kt / p.kappa2, 1e-14);
    EXPECT_EQ(f.vacuum_terms().size(), 3u);
    EXPECT_EQ(f.operator_terms().size(), 2u);
    EXPECT_NEAR(f.vacuum_variance(), p.vacuum_floor(), 1e-14);
    EXPECT_DOUBLE_EQ(run.slots[static_cast<std::size_t>(run.slot_jt)].time, 1.5);
}

TEST(Protocol, loss_scales_memory_path) {
    const auto p = params(10, 10, 2, 2, 0.9025);
    const auto lossless = run_protocol(params(10, 10, 2, 2), 0.0);
    const auto lossy = run_protocol(p, 0.0);
    EXPECT_NEAR(lossy.measured.operator_coefficient(lossy.slot_j0) / lossless.measured.operator_coefficient(lossless.slot_j0),
                0.95, 1e-14);
    EXPECT_NEAR(lossy.measured.operator_coefficient(lossy.slot_jt), -10.0, 1e-14);
    const double n_loss = (1 + 4 + 0.9025 * 16) / 2.0;
    EXPECT_NEAR(lossy.measured.vacuum_variance(), n_loss, 1e-12);
    EXPECT_NEAR(p.vacuum_floor(), n_loss, 1e-12);
    EXPECT_NEAR(p.signal_scale(), 0.95, 1e-15);
}

TEST(Protocol, pass_through_is_shot_noise) {
    const auto run = run_protocol(params(0, 0, 0, 0), 2.0);
    EXPECT_DOUBLE_EQ(run.measured.vacuum_variance(), 0.5);
    EXPECT_TRUE(run.measured.operator_terms().empty());
}

TEST(Variance, identity_holds_over_random_draws) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    std::uniform_real_distribution<double> ut(0.0, 10.0);
    for (int draw = 0; draw < 20; ++draw) {
        auto sys = system(4, 1.0, u(rng), modulation_coefficients({u(rng), u(rng), 4}));
        const auto psi = test::random_state(4, rng);
        const auto p = params(u(rng), u(rng), u(rng), u(rng));
        const double t = ut(rng);
        const auto b = variance(run_protocol(p, t), psi, sys.decomp, sys.obs);
        const double fm = f_m(psi, sys.decomp, sys.obs, t);
        EXPECT_NEAR(b.total - b.eta(), p.kappaT() * fm, 1e-10 * std::max(1.0, b.total));
        EXPECT_NEAR(b.vacuum_noise, p.vacuum_floor(), 1e-12);
        const StateVector vt = evolve(psi.amplitudes(), sys.decomp, t);
        const double var_t = sys.obs.expectation_squared(vt) - std::pow(sys.obs.expectation(vt), 2);
        EXPECT_NEAR(b.var_jt_term, p.kappa2 * p.kappa2 * var_t, 1e-10 * std::max(1.0, b.var_jt_term));
    }
}

TEST(Variance, series_matches_pointwise) {
    std::mt19937_64 rng(7);
    auto sys = system(6, 1.0, 0.5, modulation_coefficients({pi / 2, 0.0, 6}));
    const auto psi = test::random_state(6, rng);
    const auto p = params(10, 10, 2, 2, 0.9);
    std::vector<double> times{0.0, 0.5, 1.7, 3.1, 8.0};
    const auto series = variance_series(p, psi, sys.decomp, sys.obs, times, 2);
    ASSERT_EQ(series.size(), times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const auto b = variance(run_protocol(p, times[i]), psi, sys.decomp, sys.obs);
        EXPECT_NEAR(series[i].total, b.total, 1e-9 * b.total);
        EXPECT_NEAR(series[i].cross_term, b.cross_term, 1e-9 * b.total);
    }
}

TEST(Variance, noise_subtraction_recovers_signal) {
    std::mt19937_64 rng(41);
    auto sys = system(6, 1.0, 1.0, modulation_coefficients({pi / 2, 0.0, 6}));
    const auto psi = test::random_state(6, rng);
    const std::vector<double> times{0.0, 0.4, 1.9, 5.5};
    for (double eta : {1.0, 0.9025}) {
        for (bool compensate : {false, true}) {
            auto p = params(10, 10, 2, 2, eta);
            p.compensate_loss = compensate;
            std::vector<double> total, vt, v0;
            const auto series = variance_series(p, psi, sys.decomp, sys.obs, times);
            const auto& v = psi.amplitudes();
            const double var0 = sys.obs.expectation_squared(v) - std::pow(sys.obs.expectation(v), 2);
            for (std::size_t i = 0; i < times.size(); ++i) {
                total.push_back(series[i].total);
                const StateVector s = evolve(v, sys.decomp, times[i]);
                vt.push_back(sys.obs.expectation_squared(s) - std::pow(sys.obs.expectation(s), 2));
                v0.push_back(var0);
            }
            const auto rec = subtract_noise(total, vt, v0, p);
            const double expected_scale = compensate ? 1.0 : std::sqrt(eta);
            for (std::size_t i = 0; i < times.size(); ++i) {
                EXPECT_NEAR(rec[i], expected_scale * f_m(psi, sys.decomp, sys.obs, times[i]), 1e-9) << eta;
            }
        }
    }
    const std::vector<double> one{1.0};
    EXPECT_THROW(subtract_noise(one, std::vector<double>{}, one, params(1, 1, 1, 1)), ValidationError);
    EXPECT_THROW(subtract_noise(one, one, one, params(0, 1, 1, 1)), ValidationError);
}

TEST(Homodyne, converges_to_closed_form) {
    std::mt19937_64 rng(55);
    auto sys = system(4, 1.0, 0.8, modulation_coefficients({1.0, 0.0, 4}));
    const auto psi = test::random_state(4, rng);
    const auto p = params(2, 1.5, 1, 0.8, 0.9);
    for (double t : {0.0, 1.2, 3.7}) {
        const auto est = mc_homodyne(p, psi, sys.decomp, sys.obs, t, 100000, 9);
        const auto b = variance(run_protocol(p, t), psi, sys.decomp, sys.obs);
        EXPECT_LT(std::abs(est.value - b.total), 3.5 * est.standard_error) << t;
    }
}

TEST(Homodyne, eigenstate_of_static_probe) {
    // H = 0 and a J eigenstate: the outcome is a fixed shift plus vacuum noise
    auto sys = system(4, 0.0, 0.0, std::vector<double>(4, 2.0));
    StateVector v = StateVector::Zero(16);
    v[5] = 1.0;
    const ManyBodyState psi(4, v);
    const auto p = params(1, 1, 1, 1);
    const auto est = mc_homodyne(p, psi, sys.decomp, sys.obs, 0.7, 200000, 3);
    EXPECT_LT(std::abs(est.value - p.vacuum_floor()), 4.0 * est.standard_error);
}

TEST(Homodyne, standard_error_matches_spread_of_repeats) {
    std::mt19937_64 rng(66);
    auto sys = system(4, 1.0, 1.0, modulation_coefficients({pi / 2, 0.0, 4}));
    const auto psi = test::random_state(4, rng);
    const auto p = params(1, 1, 1, 1);
    std::vector<double> values;
    double se = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto est = mc_homodyne(p, psi, sys.decomp, sys.obs, 0.5, 2000, seed);
        values.push_back(est.value);
        se += est.standard_error / 40.0;
    }
    const auto spread = mean_estimate(values);
    const double empirical = spread.standard_error * std::sqrt(40.0);
    EXPECT_GT(empirical / se, 0.6);
    EXPECT_LT(empirical / se, 1.6);
}

TEST(Homodyne, argument_checks) {
    auto sys = system(4, 1.0, 1.0, std::vector<double>(4, 2.0));
    std::mt19937_64 rng(1);
    const auto psi = test::random_state(4, rng);
    EXPECT_THROW(mc_homodyne(params(1, 1, 1, 1), psi, sys.decomp, sys.obs, 0.0, 1, 0), ValidationError);
    EXPECT_NO_THROW(mc_homodyne(params(1, 1, 1, 1), psi, sys.decomp, sys.obs, 0.0, 2, 0));
    EXPECT_THROW(mc_homodyne(params(1, 1, 1, 1), psi, sys.decomp, sys.obs, 0.0, 10, 0, 3), CapacityError);
}
