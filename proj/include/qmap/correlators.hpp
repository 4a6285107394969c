#pragma once

// Two-time signals of the probe observable J:
//
//   F_S(t) = sum_i a_i <psi| P_i J(t) P_i |psi>        (sequential projective outcomes)
//   F_M(t) = <{J(t), J(0)}> - 2 <J(t)><J(0)>             (memory-assisted, symmetrized)
//
// Pointwise evaluators evolve vectors directly; `compute_signals` evaluates a
// whole time grid through eigenbasis bilinear forms and batched propagation.

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "qmap/probe.hpp"
#include "qmap/random.hpp"
#include "qmap/spinchain.hpp"

namespace qmap {

enum class SignalKind { F_S, F_M };

inline const char* to_string(SignalKind k) { return k == SignalKind::F_S ? "F_S" : "F_M"; }

struct CorrelatorSeries {
    std::vector<double> times;
    std::vector<double> values;
    SignalKind kind = SignalKind::F_M;
};

namespace detail {

inline void check_compatible(const ManyBodyState& psi, const SpectralDecomposition& decomp, const ProbeObservable& obs) {
    if (psi.dim() != decomp.dim() || obs.dim() != decomp.dim()) {
        throw ValidationError("state, Hamiltonian and observable dimensions differ");
    }
}

}  // namespace detail

/// sum_i a_i <P_i psi(t)| J |P_i psi(t)>, kept complex so callers can check
/// the imaginary residue.
inline Complex f_s_complex(const ManyBodyState& psi, const SpectralDecomposition& decomp, const ProbeObservable& obs,
                           double t) {
    detail::check_compatible(psi, decomp, obs);
    Complex sum = 0.0;
    for (std::size_t i = 0; i < obs.groups().size(); ++i) {
        const StateVector collapsed = obs.project(psi.amplitudes(), i);
        if (collapsed.squaredNorm() == 0.0) continue;
        const StateVector evolved = evolve(collapsed, decomp, t);
        sum += obs.groups()[i].value * evolved.dot(obs.apply(evolved));
    }
    return sum;
}

inline double f_s(const ManyBodyState& psi, const SpectralDecomposition& decomp, const ProbeObservable& obs, double t) {
    return f_s_complex(psi, decomp, obs, t).real();
}

/// <J(t)J(0)> + <J(0)J(t)> - 2<J(t)><J(0)> with both orderings evaluated
/// separately (no symmetrization by taking a real part).
inline Complex f_m_complex(const ManyBodyState& psi, const SpectralDecomposition& decomp, const ProbeObservable& obs,
                           double t) {
    detail::check_compatible(psi, decomp, obs);
    const StateVector& v = psi.amplitudes();
    const StateVector v_t = evolve(v, decomp, t);
    const StateVector jv_t = evolve(obs.apply(v), decomp, t);
    // <psi|J(t) J|psi> = <psi(t)| J |(J psi)(t)>
    const Complex forward = v_t.dot(obs.apply(jv_t));
    // <psi|J J(t)|psi> = <(J psi)(t)| J |psi(t)>
    const Complex backward = jv_t.dot(obs.apply(v_t));
    const double mean_t = obs.expectation(v_t);
    const double mean_0 = obs.expectation(v);
    return forward + backward - 2.0 * mean_t * mean_0;
}

inline double f_m(const ManyBodyState& psi, const SpectralDecomposition& decomp, const ProbeObservable& obs, double t) {
    detail::check_compatible(psi, decomp, obs);
    const StateVector& v = psi.amplitudes();
    const StateVector v_t = evolve(v, decomp, t);
    const StateVector jv_t = evolve(obs.apply(v), decomp, t);
    return 2.0 * v_t.dot(obs.apply(jv_t)).real() - 2.0 * obs.expectation(v_t) * obs.expectation(v);
}

/// Diagonal of j^z_site.
inline RealVector site_sz_diagonal(int n_sites, int site) {
    const std::size_t dim = std::size_t{1} << n_sites;
    RealVector d(static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < dim; ++s) d[static_cast<Eigen::Index>(s)] = ((s >> site) & 1u) ? 0.5 : -0.5;
    return d;
}

/// (G_mn(t, t'), G_nm(t', t)) with
/// G_mn(t, t') = <j^z_m(t) j^z_n(t')> - <j^z_m(t)><j^z_n(t')>.
inline std::pair<Complex, Complex> g_mn(const ManyBodyState& psi, const SpectralDecomposition& decomp, int m, int n,
                                        double t, double tp) {
    if (psi.dim() != decomp.dim()) throw ValidationError("state and Hamiltonian dimensions differ");
    const int sites = psi.n_sites();
    if (m < 0 || n < 0 || m >= sites || n >= sites) throw ValidationError("site index out of range");
    const RealVector zm = site_sz_diagonal(sites, m);
    const RealVector zn = site_sz_diagonal(sites, n);
    const StateVector& v = psi.amplitudes();
    const StateVector v_t = evolve(v, decomp, t);
    const StateVector v_tp = evolve(v, decomp, tp);
    const StateVector zm_v_t = zm.cast<Complex>().cwiseProduct(v_t);
    const StateVector zn_v_tp = zn.cast<Complex>().cwiseProduct(v_tp);
    const double mean_m = zm.dot(v_t.cwiseAbs2());
    const double mean_n = zn.dot(v_tp.cwiseAbs2());
    // <psi|U^dag(t) z_m U(t) U^dag(t') z_n U(t')|psi> = <z_m psi(t)| U(t-t') |z_n psi(t')>
    const Complex mn = zm_v_t.dot(evolve(zn_v_tp, decomp, t - tp)) - mean_m * mean_n;
    const Complex nm = zn_v_tp.dot(evolve(zm_v_t, decomp, tp - t)) - mean_n * mean_m;
    return {mn, nm};
}

/// Monte Carlo of the repeated-measurement experiment behind F_S: outcome a_i
/// at t=0 (Born rule), collapse, evolve by t, outcome a_j; average a_i a_j.
inline McEstimate mc_f_s(const ManyBodyState& psi, const SpectralDecomposition& decomp, const ProbeObservable& obs,
                         double t, std::uint64_t shots, std::uint64_t seed) {
    detail::check_compatible(psi, decomp, obs);
    if (shots < 1) throw ValidationError("mc_f_s needs at least one shot");
    constexpr double kMinProbability = 1e-14;
    const auto& groups = obs.groups();
    const std::size_t ng = groups.size();

    std::vector<double> first(ng, 0.0);
    std::vector<std::vector<double>> second(ng);
    for (std::size_t i = 0; i < ng; ++i) {
        const StateVector collapsed = obs.project(psi.amplitudes(), i);
        const double p = collapsed.squaredNorm();
        if (p < kMinProbability) continue;
        first[i] = p;
        const StateVector evolved = evolve(StateVector(collapsed / std::sqrt(p)), decomp, t);
        second[i].resize(ng);
        for (std::size_t j = 0; j < ng; ++j) {
            double q = 0.0;
            for (BasisIndex s : groups[j].indices) q += std::norm(evolved[s]);
            second[i][j] = q;
        }
    }
    std::discrete_distribution<std::size_t> pick_first(first.begin(), first.end());
    std::vector<std::discrete_distribution<std::size_t>> pick_second(ng);
    for (std::size_t i = 0; i < ng; ++i) {
        if (!second[i].empty()) pick_second[i] = std::discrete_distribution<std::size_t>(second[i].begin(), second[i].end());
    }

    std::vector<double> products(shots);
    for_each_shot_block(shots, seed, [&](std::mt19937_64& engine, std::uint64_t offset, std::uint64_t count) {
        for (std::uint64_t k = 0; k < count; ++k) {
            const std::size_t i = pick_first(engine);
            const std::size_t j = pick_second[i](engine);
            products[offset + k] = groups[i].value * groups[j].value;
        }
    });
    return mean_estimate(products);
}

// ---------------------------------------------------------------------------
// Grid evaluation

struct SignalSeries {
    std::vector<double> times;
    std::vector<double> f_s;
    std::vector<double> f_m;
    std::vector<double> mean_j;  // <J>_{psi(t)}
    std::vector<double> var_j;   // [Delta J(t)]^2

    [[nodiscard]] CorrelatorSeries series(SignalKind kind) const {
        return {times, kind == SignalKind::F_S ? f_s : f_m, kind};
    }
};

namespace detail {

// F_S(t) = sum_b u_b(t)^H A_b u_b(t), u_n(t) = exp(-i E_n t), with
// A_nm = J_nm sum_i a_i conj(beta_in) beta_im and beta_i = V^T P_i psi.
struct FsKernel {
    std::size_t block;
    Eigen::MatrixXcd a;
};

inline std::vector<FsKernel> build_fs_kernels(const ManyBodyState& psi, const SpectralDecomposition& decomp,
                                              const ProbeObservable& obs) {
    std::vector<FsKernel> kernels;
    const auto& blocks = decomp.blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        const StateVector local = decomp.gather(psi.amplitudes(), b);
        if (local.squaredNorm() == 0.0) continue;
        const auto d = static_cast<Eigen::Index>(blk.basis.size());
        RealVector jdiag(d);
        for (Eigen::Index i = 0; i < d; ++i) jdiag[i] = obs.diag()[blk.basis[static_cast<std::size_t>(i)]];
        const Eigen::MatrixXd j_eig = blk.vectors.transpose() * jdiag.asDiagonal() * blk.vectors;

        // group label of each basis state in this block
        std::vector<std::size_t> group_of(static_cast<std::size_t>(d));
        for (std::size_t g = 0; g < obs.groups().size(); ++g) {
            for (BasisIndex s : obs.groups()[g].indices) {
                if (decomp.block_of(s) == static_cast<std::int32_t>(b)) group_of[static_cast<std::size_t>(decomp.position_in_block(s))] = g;
            }
        }
        Eigen::MatrixXcd weight = Eigen::MatrixXcd::Zero(d, d);
        for (std::size_t g = 0; g < obs.groups().size(); ++g) {
            StateVector projected = StateVector::Zero(d);
            bool any = false;
            for (Eigen::Index i = 0; i < d; ++i) {
                if (group_of[static_cast<std::size_t>(i)] == g && local[i] != 0.0) {
                    projected[i] = local[i];
                    any = true;
                }
            }
            if (!any) continue;
            StateVector beta(d);
            beta.real() = blk.vectors.transpose() * projected.real();
            beta.imag() = blk.vectors.transpose() * projected.imag();
            weight.noalias() += obs.groups()[g].value * (beta.conjugate() * beta.transpose());
        }
        kernels.push_back({b, weight.cwiseProduct(j_eig.cast<Complex>())});
    }
    return kernels;
}

}  // namespace detail

/// F_S, F_M, <J>(t) and Var J(t) on a time grid. Work is chunked over times.
inline SignalSeries compute_signals(const ManyBodyState& psi, const SpectralDecomposition& decomp,
                                    const ProbeObservable& obs, std::span<const double> times,
                                    std::size_t chunk = 256) {
    detail::check_compatible(psi, decomp, obs);
    SignalSeries out;
    out.times.assign(times.begin(), times.end());
    const std::size_t nt = times.size();
    out.f_s.resize(nt);
    out.f_m.resize(nt);
    out.mean_j.resize(nt);
    out.var_j.resize(nt);

    const StateVector& v = psi.amplitudes();
    const double mean_0 = obs.expectation(v);
    const Propagator prop_v(decomp, v);
    const Propagator prop_jv(decomp, obs.apply(v));
    const auto kernels = detail::build_fs_kernels(psi, decomp, obs);
    const RealVector& jd = obs.diag();
    const RealVector jd2 = jd.cwiseAbs2();

    for (std::size_t start = 0; start < nt; start += chunk) {
        const std::size_t count = std::min(chunk, nt - start);
        const auto slice = times.subspan(start, count);
        const Eigen::MatrixXcd vt = prop_v.at(slice);
        const Eigen::MatrixXcd jvt = prop_jv.at(slice);
        for (std::size_t j = 0; j < count; ++j) {
            const auto col = static_cast<Eigen::Index>(j);
            const RealVector prob = vt.col(col).cwiseAbs2();
            const double m1 = jd.dot(prob);
            const double m2 = jd2.dot(prob);
            const Complex cross = vt.col(col).dot(jd.cast<Complex>().cwiseProduct(jvt.col(col)));
            out.mean_j[start + j] = m1;
            out.var_j[start + j] = m2 - m1 * m1;
            out.f_m[start + j] = 2.0 * cross.real() - 2.0 * m1 * mean_0;
        }
        std::vector<double> fs(count, 0.0);
        for (const auto& kernel : kernels) {
            const auto& blk = decomp.blocks()[kernel.block];
            const Eigen::Index d = blk.energies.size();
            Eigen::MatrixXcd u(d, static_cast<Eigen::Index>(count));
            for (std::size_t j = 0; j < count; ++j) {
                for (Eigen::Index k = 0; k < d; ++k) u(k, static_cast<Eigen::Index>(j)) = std::polar(1.0, -blk.energies[k] * slice[j]);
            }
            const Eigen::MatrixXcd w = kernel.a * u;
            for (std::size_t j = 0; j < count; ++j) {
                fs[j] += u.col(static_cast<Eigen::Index>(j)).dot(w.col(static_cast<Eigen::Index>(j))).real();
            }
        }
        std::copy(fs.begin(), fs.end(), out.f_s.begin() + static_cast<std::ptrdiff_t>(start));
    }
    return out;
}

}  // namespace qmap
