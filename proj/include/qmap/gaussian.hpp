#pragma once

// Quadrature-level model of the memory-assisted probing chain.
//
// Every quadrature is tracked in the Heisenberg picture as a real linear form
// over the input vacuum quadratures of the light pulses L1, L2, the memory M
// and a loss port V, plus real weights on operator slots J(t_k) of the
// many-body system. Gates are the linear maps
//
//   faraday:  X_L -> X_L - kappa J(t_k)            P_L unchanged
//   rotate:   X -> cos(phi) X + sin(phi) P,        P -> cos(phi) P - sin(phi) X
//   write:    X_M -> X_M + kappa_W P_L
//   read:     X_L -> X_L + kappa_R P_M
//   loss:     Q_M -> sqrt(eta) Q_M + sqrt(1-eta) Q_V
//
// Inputs are vacuum/coherent: zero mean and variance 1/2 per quadrature.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qmap/correlators.hpp"
#include "qmap/probe.hpp"
#include "qmap/random.hpp"
#include "qmap/spinchain.hpp"

namespace qmap {

inline constexpr double kVacuumVariance = 0.5;

/// kappa = sqrt(d * eta_A) from optical depth and spontaneous-emission probability.
struct CouplingSpec {
    double d = 100.0;
    double eta_A = 0.1;

    void validate() const {
        if (!(d > 0.0)) throw ValidationError("optical depth d must be positive");
        if (!(eta_A > 0.0 && eta_A <= 1.0)) throw ValidationError("eta_A must lie in (0, 1]");
    }
    [[nodiscard]] double kappa() const {
        validate();
        return std::sqrt(d * eta_A);
    }
};

struct ProtocolParams {
    double kappa1 = 10.0;
    double kappa2 = 10.0;
    double kappaR = 2.0;
    double kappaW = 2.0;
    double eta_mem = 1.0;  // memory transmission
    bool compensate_loss = false;

    [[nodiscard]] double kappaT() const { return kappa1 * kappa2 * kappaR * kappaW; }

    // Strict check used for configured runs: every coupling positive.
    void validate() const {
        validate_non_negative();
        if (!(kappa1 > 0 && kappa2 > 0 && kappaR > 0 && kappaW > 0)) {
            throw ValidationError("all couplings kappa1, kappa2, kappaR, kappaW must be positive");
        }
    }
    // Lenient check for gate-level experiments where a coupling may be switched off.
    void validate_non_negative() const {
        for (double k : {kappa1, kappa2, kappaR, kappaW}) {
            if (!std::isfinite(k) || k < 0.0) throw ValidationError("couplings must be finite and non-negative");
        }
        if (!(eta_mem > 0.0 && eta_mem <= 1.0)) throw ValidationError("eta_mem must lie in (0, 1]");
    }

    /// Vacuum contribution to the output variance,
    /// [1 + kappaR^2 + eta_mem kappaR^2 kappaW^2] / 2.
    [[nodiscard]] double vacuum_floor() const {
        return kVacuumVariance * (1.0 + kappaR * kappaR + eta_mem * kappaR * kappaR * kappaW * kappaW);
    }
    /// Factor by which storage loss scales the recovered correlator.
    [[nodiscard]] double signal_scale() const { return std::sqrt(eta_mem); }
};

enum class Mode { L1, L2, M, V_loss };
enum class Quadrature { X, P };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::L1: return "L1";
        case Mode::L2: return "L2";
        case Mode::M: return "M";
        case Mode::V_loss: return "V_loss";
    }
    return "?";
}
inline const char* to_string(Quadrature q) { return q == Quadrature::X ? "X" : "P"; }

struct VacuumTerm {
    Mode mode;
    Quadrature quadrature;
    double coefficient;
};

struct OperatorTerm {
    int slot;
    double coefficient;
};

class HybridLinearForm {
public:
    HybridLinearForm() = default;

    static HybridLinearForm input(Mode mode, Quadrature q) {
        HybridLinearForm f;
        f.vacuum_[{mode, q}] = 1.0;
        return f;
    }

    HybridLinearForm& add(const HybridLinearForm& other, double scale) {
        if (scale == 0.0) return *this;
        for (const auto& [key, c] : other.vacuum_) vacuum_[key] += scale * c;
        for (const auto& [slot, c] : other.operators_) operators_[slot] += scale * c;
        return *this;
    }

    HybridLinearForm& scale(double s) {
        for (auto& [key, c] : vacuum_) c *= s;
        for (auto& [slot, c] : operators_) c *= s;
        return *this;
    }

    HybridLinearForm& add_operator(int slot, double coefficient) {
        operators_[slot] += coefficient;
        return *this;
    }

    [[nodiscard]] double vacuum_coefficient(Mode m, Quadrature q) const {
        auto it = vacuum_.find({m, q});
        return it == vacuum_.end() ? 0.0 : it->second;
    }
    [[nodiscard]] double operator_coefficient(int slot) const {
        auto it = operators_.find(slot);
        return it == operators_.end() ? 0.0 : it->second;
    }

    [[nodiscard]] std::vector<VacuumTerm> vacuum_terms() const {
        std::vector<VacuumTerm> out;
        for (const auto& [key, c] : vacuum_) {
            if (c != 0.0) out.push_back({key.first, key.second, c});
        }
        return out;
    }
    [[nodiscard]] std::vector<OperatorTerm> operator_terms() const {
        std::vector<OperatorTerm> out;
        for (const auto& [slot, c] : operators_) {
            if (c != 0.0) out.push_back({slot, c});
        }
        return out;
    }

    /// Sum of coefficient^2 * 1/2 over the independent vacuum inputs.
    [[nodiscard]] double vacuum_variance() const {
        double v = 0.0;
        for (const auto& [key, c] : vacuum_) v += c * c * kVacuumVariance;
        return v;
    }

private:
    std::map<std::pair<Mode, Quadrature>, double> vacuum_;
    std::map<int, double> operators_;
};

struct OperatorSlot {
    int id;
    double time;  // J(time) in units of 1/g
};

/// Current (X, P) forms of every mode plus the registered operator slots.
class QuadratureNetwork {
public:
    QuadratureNetwork() {
        for (Mode m : {Mode::L1, Mode::L2, Mode::M, Mode::V_loss}) {
            modes_[m] = {HybridLinearForm::input(m, Quadrature::X), HybridLinearForm::input(m, Quadrature::P)};
        }
    }

    int register_slot(double time) {
        const int id = static_cast<int>(slots_.size());
        slots_.push_back({id, time});
        return id;
    }

    [[nodiscard]] const std::vector<OperatorSlot>& slots() const { return slots_; }
    [[nodiscard]] const HybridLinearForm& x(Mode m) const { return modes_.at(m)[0]; }
    [[nodiscard]] const HybridLinearForm& p(Mode m) const { return modes_.at(m)[1]; }

    /// QND light-matter interaction: X_L -= kappa * J(slot).
    void faraday(Mode light, double kappa, int slot) {
        check_slot(slot);
        modes_.at(light)[0].add_operator(slot, -kappa);
    }

    void rotate(Mode mode, double phi) {
        const double c = snap(std::cos(phi));
        const double s = snap(std::sin(phi));
        auto& [x, p] = modes_.at(mode);
        HybridLinearForm nx = x;
        nx.scale(c).add(p, s);
        HybridLinearForm np = p;
        np.scale(c).add(x, -s);
        x = std::move(nx);
        p = std::move(np);
    }

    /// X_M -> X_M + kappa P_L
    void write(Mode light, Mode memory, double kappa) { modes_.at(memory)[0].add(modes_.at(light)[1], kappa); }

    /// X_L -> X_L + kappa P_M
    void read(Mode memory, Mode light, double kappa) { modes_.at(light)[0].add(modes_.at(memory)[1], kappa); }

    /// Beam-splitter admixture of the fresh vacuum port into both memory
    /// quadratures; the port receives the complementary combination.
    void apply_memory_loss(double eta, Mode memory = Mode::M, Mode port = Mode::V_loss) {
        if (!(eta > 0.0 && eta <= 1.0)) throw ValidationError("memory transmission must lie in (0, 1]");
        if (eta == 1.0) return;
        const double t = std::sqrt(eta);
        const double r = std::sqrt(1.0 - eta);
        for (int q = 0; q < 2; ++q) {
            HybridLinearForm& qm = modes_.at(memory)[static_cast<std::size_t>(q)];
            HybridLinearForm& qv = modes_.at(port)[static_cast<std::size_t>(q)];
            HybridLinearForm nm = qm;
            nm.scale(t).add(qv, r);
            HybridLinearForm nv = qv;
            nv.scale(t).add(qm, -r);
            qm = std::move(nm);
            qv = std::move(nv);
        }
    }

private:
    static double snap(double v) { return std::abs(v) < 1e-15 ? 0.0 : (std::abs(std::abs(v) - 1.0) < 1e-15 ? std::copysign(1.0, v) : v); }

    void check_slot(int slot) const {
        if (slot < 0 || slot >= static_cast<int>(slots_.size())) {
            throw StructuralError("operator slot " + std::to_string(slot) + " is not registered");
        }
    }

    std::map<Mode, std::array<HybridLinearForm, 2>> modes_;
    std::vector<OperatorSlot> slots_;
};

struct ProtocolRun {
    HybridLinearForm measured;  // X_L2 after the read
    std::vector<OperatorSlot> slots;
    int slot_j0 = 0;
    int slot_jt = 1;
    double t = 0.0;
};

/// Write J(0) into the memory through L1, let the system evolve for t, then
/// probe J(t) and read the memory with L2:
///   faraday(L1) -> rotate(L1, pi/2) -> write -> rotate(M, pi/2) -> [loss]
///   -> faraday(L2) -> read(L2).
inline ProtocolRun run_protocol(const ProtocolParams& params, double t) {
    params.validate_non_negative();
    QuadratureNetwork net;
    ProtocolRun run;
    run.t = t;
    run.slot_j0 = net.register_slot(0.0);
    run.slot_jt = net.register_slot(t);

    net.faraday(Mode::L1, params.kappa1, run.slot_j0);
    net.rotate(Mode::L1, std::numbers::pi / 2);
    net.write(Mode::L1, Mode::M, params.kappaW);
    net.rotate(Mode::M, std::numbers::pi / 2);
    net.apply_memory_loss(params.eta_mem);
    net.faraday(Mode::L2, params.kappa2, run.slot_jt);
    net.read(Mode::M, Mode::L2, params.kappaR);

    run.measured = net.x(Mode::L2);
    run.slots = net.slots();
    return run;
}

struct VarianceBreakdown {
    double total = 0.0;
    double vacuum_noise = 0.0;  // the N term
    double var_jt_term = 0.0;   // w_t^2 [Delta J(t)]^2
    double var_j0_term = 0.0;   // w_0^2 [Delta J(0)]^2
    double cross_term = 0.0;    // everything else: kappa_T F_M(t) for a lossless memory

    [[nodiscard]] double eta() const { return vacuum_noise + var_jt_term + var_j0_term; }
};

namespace detail {

// Column k: J(t_k)|psi> = U(-t_k) J U(t_k) |psi>, one column per slot time.
inline Eigen::MatrixXcd heisenberg_columns(const StateVector& v, const SpectralDecomposition& decomp,
                                           const ProbeObservable& obs, std::span<const double> times) {
    const auto nt = static_cast<Eigen::Index>(times.size());
    Eigen::MatrixXcd cols = Propagator(decomp, v).at(times);
    for (Eigen::Index j = 0; j < nt; ++j) cols.col(j) = obs.apply(cols.col(j));
    std::vector<double> back(times.size());
    for (std::size_t j = 0; j < times.size(); ++j) back[j] = -times[j];
    return evolve_columns(cols, decomp, back);
}

inline VarianceBreakdown breakdown_from(const HybridLinearForm& form, const std::vector<OperatorSlot>& slots,
                                        int slot_j0, int slot_jt, const StateVector& v,
                                        const Eigen::MatrixXcd& j_cols) {
    // j_cols.col(k) = J(t_k)|psi> for slot k
    StateVector xi = StateVector::Zero(v.size());
    std::vector<double> weight(slots.size(), 0.0);
    for (const auto& term : form.operator_terms()) {
        if (term.slot < 0 || term.slot >= static_cast<int>(slots.size())) {
            throw StructuralError("linear form references unregistered slot " + std::to_string(term.slot));
        }
        weight[static_cast<std::size_t>(term.slot)] = term.coefficient;
        xi += term.coefficient * j_cols.col(term.slot);
    }
    const double mean = v.dot(xi).real();
    const double op_var = xi.squaredNorm() - mean * mean;

    VarianceBreakdown out;
    out.vacuum_noise = form.vacuum_variance();
    auto slot_term = [&](int k) {
        const auto col = static_cast<Eigen::Index>(k);
        const double m1 = v.dot(j_cols.col(col)).real();
        const double m2 = j_cols.col(col).squaredNorm();
        return weight[static_cast<std::size_t>(k)] * weight[static_cast<std::size_t>(k)] * (m2 - m1 * m1);
    };
    out.var_j0_term = slot_term(slot_j0);
    out.var_jt_term = slot_term(slot_jt);
    // any further slots stay inside the cross term
    out.cross_term = op_var - out.var_j0_term - out.var_jt_term;
    out.total = out.vacuum_noise + op_var;
    return out;
}

}  // namespace detail

/// Variance of the measured quadrature on |psi> with vacuum inputs: vacuum part
/// plus Var_psi(sum_k w_k J(t_k)), the operator part taken on the true
/// many-body state (the noncommuting slots enter through the anticommutator).
inline VarianceBreakdown variance(const ProtocolRun& run, const ManyBodyState& psi, const SpectralDecomposition& decomp,
                                  const ProbeObservable& obs) {
    detail::check_compatible(psi, decomp, obs);
    std::vector<double> times;
    for (const auto& s : run.slots) times.push_back(s.time);
    const Eigen::MatrixXcd cols = detail::heisenberg_columns(psi.amplitudes(), decomp, obs, times);
    return detail::breakdown_from(run.measured, run.slots, run.slot_j0, run.slot_jt, psi.amplitudes(), cols);
}

/// Protocol variance on a grid, batching the propagation over times.
inline std::vector<VarianceBreakdown> variance_series(const ProtocolParams& params, const ManyBodyState& psi,
                                                      const SpectralDecomposition& decomp, const ProbeObservable& obs,
                                                      std::span<const double> times, std::size_t chunk = 256) {
    detail::check_compatible(psi, decomp, obs);
    const StateVector& v = psi.amplitudes();
    std::vector<VarianceBreakdown> out;
    out.reserve(times.size());
    const double zero = 0.0;
    const Eigen::MatrixXcd j0 = detail::heisenberg_columns(v, decomp, obs, std::span<const double>(&zero, 1));
    for (std::size_t start = 0; start < times.size(); start += chunk) {
        const std::size_t count = std::min(chunk, times.size() - start);
        const auto slice = times.subspan(start, count);
        const Eigen::MatrixXcd jt = detail::heisenberg_columns(v, decomp, obs, slice);
        Eigen::MatrixXcd cols(v.size(), 2);
        for (std::size_t j = 0; j < count; ++j) {
            const ProtocolRun run = run_protocol(params, slice[j]);
            cols.col(run.slot_j0) = j0.col(0);
            cols.col(run.slot_jt) = jt.col(static_cast<Eigen::Index>(j));
            out.push_back(detail::breakdown_from(run.measured, run.slots, run.slot_j0, run.slot_jt, v, cols));
        }
    }
    return out;
}

/// Inverts the variance identity using independently measured Var J(t) and
/// Var J(0). The J(0) weight is the one the lossy memory actually applies,
/// eta_mem (kappa_T/kappa_2)^2, so without compensation the result is
/// sqrt(eta_mem) F_M; with compensation it is divided by sqrt(eta_mem).
inline std::vector<double> subtract_noise(std::span<const double> total, std::span<const double> var_jt,
                                          std::span<const double> var_j0, const ProtocolParams& params) {
    if (total.size() != var_jt.size() || total.size() != var_j0.size()) {
        throw ValidationError("subtract_noise: series lengths differ");
    }
    params.validate_non_negative();
    const double kt = params.kappaT();
    if (kt == 0.0) throw ValidationError("kappa_T = 0: the correlator does not reach the output");
    const double w0_sq = params.eta_mem * (kt / params.kappa2) * (kt / params.kappa2);
    const double floor = params.vacuum_floor();
    const double rescale = params.compensate_loss ? 1.0 / params.signal_scale() : 1.0;
    std::vector<double> out(total.size());
    for (std::size_t i = 0; i < total.size(); ++i) {
        out[i] = (total[i] - floor - params.kappa2 * params.kappa2 * var_jt[i] - w0_sq * var_j0[i]) / kt * rescale;
    }
    return out;
}

/// Homodyne Monte Carlo of the measured quadrature: the operator part
/// K = sum_k w_k J(t_k) is diagonalized per S^z sector and Born-sampled, the
/// vacuum part is an independent Gaussian. Returns the sample variance.
inline McEstimate mc_homodyne(const ProtocolParams& params, const ManyBodyState& psi,
                              const SpectralDecomposition& decomp, const ProbeObservable& obs, double t,
                              std::uint64_t shots, std::uint64_t seed, std::size_t max_block_dim = 5000) {
    detail::check_compatible(psi, decomp, obs);
    if (shots < 2) throw ValidationError("mc_homodyne needs at least two shots");
    const ProtocolRun run = run_protocol(params, t);
    const double sigma = std::sqrt(run.measured.vacuum_variance());
    if (!(sigma > 0.0)) throw ValidationError("measured quadrature carries no vacuum noise");

    std::vector<double> outcomes_k;
    std::vector<double> probs;
    for (std::size_t b = 0; b < decomp.blocks().size(); ++b) {
        const auto& blk = decomp.blocks()[b];
        const StateVector local = decomp.gather(psi.amplitudes(), b);
        if (local.squaredNorm() == 0.0) continue;
        const auto d = static_cast<Eigen::Index>(blk.basis.size());
        if (static_cast<std::size_t>(d) > max_block_dim) {
            throw CapacityError("homodyne operator block of dimension " + std::to_string(d) + " exceeds the cap");
        }
        RealVector jdiag(d);
        for (Eigen::Index i = 0; i < d; ++i) jdiag[i] = obs.diag()[blk.basis[static_cast<std::size_t>(i)]];
        const Eigen::MatrixXcd vb = blk.vectors.cast<Complex>();
        const Eigen::MatrixXcd j_eig = (blk.vectors.transpose() * jdiag.asDiagonal() * blk.vectors).cast<Complex>();
        Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(d, d);
        for (const auto& term : run.measured.operator_terms()) {
            const double ts = run.slots.at(static_cast<std::size_t>(term.slot)).time;
            Eigen::VectorXcd ph(d);
            for (Eigen::Index n = 0; n < d; ++n) ph[n] = std::polar(1.0, blk.energies[n] * ts);
            // J(t) in the eigenbasis: e^{iEt} J e^{-iEt}
            const Eigen::MatrixXcd jt_eig = ph.asDiagonal() * j_eig * ph.conjugate().asDiagonal();
            k.noalias() += term.coefficient * (vb * jt_eig * vb.transpose());
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(k);
        if (solver.info() != Eigen::Success) throw std::runtime_error("homodyne eigensolver failed");
        const Eigen::VectorXcd amps = solver.eigenvectors().adjoint() * local;
        for (Eigen::Index n = 0; n < d; ++n) {
            outcomes_k.push_back(solver.eigenvalues()[n]);
            probs.push_back(std::norm(amps[n]));
        }
    }
    std::discrete_distribution<std::size_t> born(probs.begin(), probs.end());
    std::vector<double> samples(shots);
    for_each_shot_block(shots, seed, [&](std::mt19937_64& engine, std::uint64_t offset, std::uint64_t count) {
        std::normal_distribution<double> vacuum(0.0, sigma);
        for (std::uint64_t i = 0; i < count; ++i) samples[offset + i] = outcomes_k[born(engine)] + vacuum(engine);
    });
    return variance_estimate(samples);
}

}  // namespace qmap
