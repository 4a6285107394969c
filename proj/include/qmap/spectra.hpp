#pragma once

// Fourier analysis of correlator series, C(w) = int dt e^{iwt} F(t), and the
// exact stick spectra it is compared against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qmap/correlators.hpp"
#include "qmap/probe.hpp"
#include "qmap/spinchain.hpp"

namespace qmap {

enum class Window { rect, hann };
enum class SpectrumKind { C_S, C_M };
// even: F(-t) = F(t) is assumed and only t >= 0 is sampled (eigenstate input).
// two_sided: the series itself covers [-T, T].
enum class Extension { even, two_sided };

inline const char* to_string(Window w) { return w == Window::rect ? "rect" : "hann"; }
inline const char* to_string(SpectrumKind k) { return k == SpectrumKind::C_S ? "C_S" : "C_M"; }

struct Spectrum {
    std::vector<double> omegas;
    std::vector<double> amplitudes;
    SpectrumKind kind = SpectrumKind::C_M;
    Window window = Window::hann;
    double resolution = 0.0;  // 2 pi / t_max
};

struct SpectrumOptions {
    Window window = Window::hann;
    double omega_max = 0.0;  // 0: Nyquist frequency of the grid
    int oversample = 4;      // frequency bins per resolution cell
};

/// f(t_k) on t_k = k t_max / (n_samples - 1).
inline CorrelatorSeries sample_series(const std::function<double(double)>& f, double t_max, int n_samples,
                                      SignalKind kind = SignalKind::F_M) {
    if (n_samples < 2) throw ValidationError("need at least two samples");
    if (!(t_max > 0.0)) throw ValidationError("t_max must be positive");
    CorrelatorSeries s;
    s.kind = kind;
    for (int k = 0; k < n_samples; ++k) {
        const double t = t_max * k / (n_samples - 1);
        s.times.push_back(t);
        s.values.push_back(f(t));
    }
    return s;
}

/// Uniform grid on [0, t_max] with n_samples points.
inline std::vector<double> time_grid(double t_max, int n_samples) {
    if (n_samples < 2) throw ValidationError("need at least two samples");
    std::vector<double> t(static_cast<std::size_t>(n_samples));
    for (int k = 0; k < n_samples; ++k) t[static_cast<std::size_t>(k)] = t_max * k / (n_samples - 1);
    return t;
}

/// Symmetric grid on [-t_max, t_max] with 2 n_samples - 1 points.
inline std::vector<double> two_sided_grid(double t_max, int n_samples) {
    const auto half = time_grid(t_max, n_samples);
    std::vector<double> t;
    for (auto it = half.rbegin(); it != half.rend(); ++it) t.push_back(-*it);
    t.insert(t.end(), half.begin() + 1, half.end());
    return t;
}

inline double window_value(Window w, double t, double t_max) {
    if (w == Window::rect) return 1.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * t / t_max));
}

inline std::vector<double> omega_grid(double omega_max, double step) {
    const int half = static_cast<int>(std::floor(omega_max / step + 1e-9));
    std::vector<double> w;
    for (int j = -half; j <= half; ++j) w.push_back(j * step);
    return w;
}

/// Windowed trapezoidal approximation of int dt e^{iwt} F(t); amplitudes are |C(w)|.
inline Spectrum dft(const CorrelatorSeries& series, const SpectrumOptions& opts = {},
                    Extension ext = Extension::even) {
    const auto& t = series.times;
    const auto& f = series.values;
    if (t.size() < 2 || t.size() != f.size()) throw ValidationError("dft needs a series with at least two samples");
    const double dt = t[1] - t[0];
    for (std::size_t k = 1; k < t.size(); ++k) {
        if (std::abs((t[k] - t[k - 1]) - dt) > 1e-9 * std::max(1.0, std::abs(dt))) {
            throw ValidationError("dft needs a uniform time grid");
        }
    }
    double t_max = 0.0;
    if (ext == Extension::even) {
        if (std::abs(t.front()) > 1e-12) throw ValidationError("even extension needs a grid starting at t=0");
        t_max = t.back();
    } else {
        if (std::abs(t.front() + t.back()) > 1e-9 * std::abs(t.back())) {
            throw ValidationError("two-sided transform needs a grid symmetric about t=0");
        }
        t_max = t.back();
    }
    if (opts.oversample < 1) throw ValidationError("oversample must be >= 1");

    Spectrum out;
    out.kind = series.kind == SignalKind::F_S ? SpectrumKind::C_S : SpectrumKind::C_M;
    out.window = opts.window;
    out.resolution = 2.0 * std::numbers::pi / t_max;
    const double nyquist = std::numbers::pi / dt;
    const double wmax = opts.omega_max > 0.0 ? std::min(opts.omega_max, nyquist) : nyquist;
    out.omegas = omega_grid(wmax, out.resolution / opts.oversample);

    const std::size_t n = t.size();
    std::vector<double> weighted(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double trap = (k == 0 || k == n - 1) ? 0.5 : 1.0;
        weighted[k] = trap * dt * window_value(opts.window, t[k], t_max) * f[k];
    }
    out.amplitudes.reserve(out.omegas.size());
    for (double w : out.omegas) {
        double re = 0.0, im = 0.0;
        if (ext == Extension::even) {
            for (std::size_t k = 0; k < n; ++k) re += 2.0 * weighted[k] * std::cos(w * t[k]);
        } else {
            for (std::size_t k = 0; k < n; ++k) {
                re += weighted[k] * std::cos(w * t[k]);
                im += weighted[k] * std::sin(w * t[k]);
            }
        }
        out.amplitudes.push_back(std::hypot(re, im));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Stick spectra

struct Stick {
    double gap;  // stick position in omega
    Complex xi;  // weight; F(t) = sum xi exp(-i gap t)
};

namespace detail {

inline double gap_merge_tolerance(const SpectralDecomposition& decomp) {
    return 1e-9 * std::max(1.0, decomp.spectral_norm());
}

inline std::vector<Stick> merge_sticks(std::vector<Stick> raw, double tol, double drop_below) {
    std::sort(raw.begin(), raw.end(), [](const Stick& a, const Stick& b) { return a.gap < b.gap; });
    std::vector<Stick> out;
    for (const auto& s : raw) {
        if (!out.empty() && s.gap - out.back().gap <= tol) {
            out.back().xi += s.xi;
        } else {
            out.push_back(s);
        }
    }
    std::erase_if(out, [&](const Stick& s) { return std::abs(s.xi) <= drop_below; });
    return out;
}

}  // namespace detail

/// Exact sticks of F_M for the eigenstate |E_g>:
/// F_M(t) = sum_{n != g} xi_n cos((E_n - E_g) t), xi_n = 2 |<E_n|J|E_g>|^2.
/// Degenerate levels are merged.
inline std::vector<Stick> stick_cm(const SpectralDecomposition& decomp, const ProbeObservable& obs,
                                   std::size_t ground_index = 0) {
    if (obs.dim() != decomp.dim()) throw ValidationError("observable and Hamiltonian dimensions differ");
    const StateVector ground = decomp.eigenvector(ground_index);
    const StateVector jg = obs.apply(ground);
    const double e0 = decomp.eigenvalues().at(ground_index);
    const auto& gref = decomp.level(ground_index);

    std::vector<Stick> raw;
    for (std::size_t b = 0; b < decomp.blocks().size(); ++b) {
        const auto& blk = decomp.blocks()[b];
        const StateVector local = decomp.gather(jg, b);
        if (local.squaredNorm() == 0.0) continue;
        const RealVector re = blk.vectors.transpose() * local.real();
        const RealVector im = blk.vectors.transpose() * local.imag();
        for (Eigen::Index k = 0; k < re.size(); ++k) {
            if (b == gref.block && k == gref.local) continue;
            const double w = 2.0 * (re[k] * re[k] + im[k] * im[k]);
            raw.push_back({blk.energies[k] - e0, w});
        }
    }
    double wmax = 0.0;
    for (const auto& s : raw) wmax = std::max(wmax, std::abs(s.xi));
    return detail::merge_sticks(std::move(raw), detail::gap_merge_tolerance(decomp), 1e-14 * wmax);
}

/// Exact sticks of F_S for an arbitrary state:
/// F_S(t) = sum_{n,m} xi_nm exp(i (E_n - E_m) t),
/// xi_nm = sum_i a_i <psi|P_i|E_n><E_n|J|E_m><E_m|P_i|psi>,
/// reported at omega = E_m - E_n and merged over degenerate gaps.
inline std::vector<Stick> stick_cs(const SpectralDecomposition& decomp, const ProbeObservable& obs,
                                   const ManyBodyState& psi) {
    detail::check_compatible(psi, decomp, obs);
    const auto kernels = detail::build_fs_kernels(psi, decomp, obs);
    std::vector<Stick> raw;
    for (const auto& kernel : kernels) {
        const auto& e = decomp.blocks()[kernel.block].energies;
        for (Eigen::Index n = 0; n < kernel.a.rows(); ++n) {
            for (Eigen::Index m = 0; m < kernel.a.cols(); ++m) {
                const Complex xi = kernel.a(n, m);
                if (xi == 0.0) continue;
                raw.push_back({e[m] - e[n], xi});
            }
        }
    }
    double wmax = 0.0;
    for (const auto& s : raw) wmax = std::max(wmax, std::abs(s.xi));
    return detail::merge_sticks(std::move(raw), detail::gap_merge_tolerance(decomp), 1e-14 * wmax);
}

/// Two-sided sticks of F_M for an arbitrary state,
/// F_M(t) = 2 Re <psi|J(t) J|psi> - 2 <J>_0 <J>_t, so that
/// F_M(t) = sum xi exp(-i gap t) with conjugate pairs at +-gap.
/// For an eigenstate this is stick_cm split evenly over +-gap.
inline std::vector<Stick> stick_fm(const SpectralDecomposition& decomp, const ProbeObservable& obs,
                                   const ManyBodyState& psi) {
    detail::check_compatible(psi, decomp, obs);
    const StateVector& v = psi.amplitudes();
    const StateVector jv = obs.apply(v);
    const double mean0 = obs.expectation(v);
    std::vector<Stick> raw;
    for (std::size_t b = 0; b < decomp.blocks().size(); ++b) {
        const auto& blk = decomp.blocks()[b];
        const StateVector local = decomp.gather(v, b);
        if (local.squaredNorm() == 0.0) continue;
        const auto d = static_cast<Eigen::Index>(blk.basis.size());
        RealVector jdiag(d);
        for (Eigen::Index i = 0; i < d; ++i) jdiag[i] = obs.diag()[blk.basis[static_cast<std::size_t>(i)]];
        const Eigen::MatrixXd j_eig = blk.vectors.transpose() * jdiag.asDiagonal() * blk.vectors;
        const StateVector jlocal = decomp.gather(jv, b);
        StateVector alpha(d), gamma(d);
        alpha.real() = blk.vectors.transpose() * local.real();
        alpha.imag() = blk.vectors.transpose() * local.imag();
        gamma.real() = blk.vectors.transpose() * jlocal.real();
        gamma.imag() = blk.vectors.transpose() * jlocal.imag();
        for (Eigen::Index n = 0; n < d; ++n) {
            for (Eigen::Index m = 0; m < d; ++m) {
                if (j_eig(n, m) == 0.0) continue;
                const Complex pair = std::conj(alpha[n]) * j_eig(n, m) * gamma[m];
                const Complex mean = std::conj(alpha[n]) * j_eig(n, m) * alpha[m];
                const double w = blk.energies[m] - blk.energies[n];
                raw.push_back({w, pair - mean0 * mean});
                raw.push_back({-w, std::conj(pair) - mean0 * std::conj(mean)});
            }
        }
    }
    double wmax = 0.0;
    for (const auto& s : raw) wmax = std::max(wmax, std::abs(s.xi));
    return detail::merge_sticks(std::move(raw), detail::gap_merge_tolerance(decomp), 1e-14 * wmax);
}

/// Evaluates sum xi exp(-i gap t) (real part) for oracle comparisons.
inline double stick_signal(const std::vector<Stick>& sticks, double t) {
    double out = 0.0;
    for (const auto& s : sticks) out += (s.xi * std::polar(1.0, -s.gap * t)).real();
    return out;
}

// ---------------------------------------------------------------------------
// Peaks

struct Peak {
    double omega;
    double amplitude;
};

struct PeakOptions {
    double rel_threshold = 0.1;
    double omega_min = 0.0;  // peaks with |omega| <= omega_min are dropped; 0 keeps all
};

/// Local maxima above rel_threshold * (global max amplitude), outside |w| <= omega_min.
inline std::vector<Peak> peaks(const Spectrum& spectrum, const PeakOptions& opts = {}) {
    const auto& a = spectrum.amplitudes;
    if (a.empty()) throw ValidationError("empty spectrum");
    if (!(opts.rel_threshold > 0.0 && opts.rel_threshold < 1.0)) {
        throw ValidationError("rel_threshold must lie in (0, 1)");
    }
    const double cut = opts.rel_threshold * *std::max_element(a.begin(), a.end());
    std::vector<Peak> out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool left = i == 0 || a[i] > a[i - 1];
        const bool right = i + 1 == a.size() || a[i] >= a[i + 1];
        if (!(left && right) || a[i] < cut) continue;
        if (opts.omega_min > 0.0 && std::abs(spectrum.omegas[i]) <= opts.omega_min) continue;
        out.push_back({spectrum.omegas[i], a[i]});
    }
    return out;
}

struct PeakMatch {
    double omega;
    double amplitude;
    double nearest_gap;
    double distance;
    bool matched;
};

struct MatchReport {
    std::vector<PeakMatch> matches;
    std::size_t unmatched = 0;
    double matched_fraction = 0.0;
};

/// Maps every peak (by |omega|) to its nearest gap; matched when within tol.
inline MatchReport match_peaks(const std::vector<Peak>& found, std::vector<double> gaps, double tol) {
    if (gaps.empty()) throw ValidationError("no gaps to match against");
    if (!(tol > 0.0)) throw ValidationError("match tolerance must be positive");
    std::sort(gaps.begin(), gaps.end());
    MatchReport report;
    for (const auto& p : found) {
        const double w = std::abs(p.omega);
        auto it = std::lower_bound(gaps.begin(), gaps.end(), w);
        double best = it == gaps.end() ? gaps.back() : *it;
        if (it != gaps.begin() && (it == gaps.end() || std::abs(*(it - 1) - w) < std::abs(best - w))) best = *(it - 1);
        const double dist = std::abs(best - w);
        report.matches.push_back({p.omega, p.amplitude, best, dist, dist <= tol});
        if (dist > tol) ++report.unmatched;
    }
    report.matched_fraction =
        found.empty() ? 1.0 : static_cast<double>(found.size() - report.unmatched) / static_cast<double>(found.size());
    return report;
}

/// E_n - E_ref for every level.
inline std::vector<double> energy_gaps(const SpectralDecomposition& decomp, std::size_t ref = 0) {
    std::vector<double> g;
    const double e0 = decomp.eigenvalues().at(ref);
    for (double e : decomp.eigenvalues()) g.push_back(e - e0);
    return g;
}

}  // namespace qmap
