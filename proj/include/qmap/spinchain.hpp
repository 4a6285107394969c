#pragma once

// Spin-1/2 superlattice chain: Hamiltonian construction, exact
// diagonalization (dense or per total-S^z sector) and spectral propagation.
//
// Basis convention: bit b of a basis index is the z-state of site b,
// bit set <=> j^z_b = +1/2.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qmap/errors.hpp"

namespace qmap {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using BasisIndex = std::uint32_t;

inline constexpr int kDefaultMaxSites = 20;

enum class Boundary { periodic, open };

inline std::string to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "open"; }

struct Bond {
    int a;
    int b;
    double coupling;
};

struct SpinChainSpec {
    int n_sites = 12;
    double g1 = 1.0;  // even-odd bonds (2n, 2n+1)
    double g2 = 1.0;  // odd-even bonds (2n+1, 2n+2)
    Boundary boundary = Boundary::periodic;
    int max_sites = kDefaultMaxSites;

    void validate() const {
        if (n_sites < 2 || n_sites % 2 != 0) {
            throw ValidationError("n_sites must be an even integer >= 2, got " +
                                  std::to_string(n_sites));
        }
        if (n_sites > max_sites) {
            throw CapacityError("n_sites=" + std::to_string(n_sites) +
                                " exceeds the configured site cap of " + std::to_string(max_sites));
        }
        if (!std::isfinite(g1) || !std::isfinite(g2)) {
            throw ValidationError("couplings g1, g2 must be finite");
        }
    }

    [[nodiscard]] std::size_t dim() const { return std::size_t{1} << n_sites; }

    // Bond list of H = sum_n [g1 j_{2n}.j_{2n+1} + g2 j_{2n+1}.j_{2n+2}].
    // The open chain drops the wrap-around g2 bond.
    [[nodiscard]] std::vector<Bond> bonds() const {
        std::vector<Bond> out;
        const int cells = n_sites / 2;
        for (int n = 0; n < cells; ++n) {
            out.push_back({2 * n, 2 * n + 1, g1});
        }
        for (int n = 0; n < cells; ++n) {
            if (boundary == Boundary::open && n == cells - 1) break;
            out.push_back({2 * n + 1, (2 * n + 2) % n_sites, g2});
        }
        return out;
    }
};

/// Normalized amplitude vector over the 2^n_sites z-basis.
class ManyBodyState {
public:
    static constexpr double kNormTolerance = 1e-12;

    ManyBodyState() = default;

    ManyBodyState(int n_sites, StateVector amplitudes)
        : n_sites_(n_sites), amplitudes_(std::move(amplitudes)) {
        if (static_cast<std::size_t>(amplitudes_.size()) != (std::size_t{1} << n_sites_)) {
            throw ValidationError("state dimension does not match 2^n_sites");
        }
        if (std::abs(amplitudes_.norm() - 1.0) > kNormTolerance) {
            throw ValidationError("state is not normalized (norm=" +
                                  std::to_string(amplitudes_.norm()) + ")");
        }
    }

    // Normalizes `amplitudes` first; rejects the zero vector.
    static ManyBodyState normalized(int n_sites, StateVector amplitudes) {
        const double nrm = amplitudes.norm();
        if (nrm == 0.0) throw ValidationError("cannot normalize the zero vector");
        amplitudes /= nrm;
        return {n_sites, std::move(amplitudes)};
    }

    [[nodiscard]] int n_sites() const { return n_sites_; }
    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(amplitudes_.size()); }
    [[nodiscard]] const StateVector& amplitudes() const { return amplitudes_; }

private:
    int n_sites_ = 0;
    StateVector amplitudes_;
};

// ---------------------------------------------------------------------------
// Hamiltonian

namespace detail {

inline int bit(BasisIndex s, int site) { return static_cast<int>((s >> site) & 1u); }

// j_a . j_b acting on basis state s: diagonal +-1/4, spin flip with amplitude 1/2.
template <class Emit>
void heisenberg_bond(BasisIndex s, int a, int b, double g, Emit&& emit) {
    if (g == 0.0) return;
    if (bit(s, a) == bit(s, b)) {
        emit(s, 0.25 * g);
    } else {
        emit(s, -0.25 * g);
        emit(s ^ ((BasisIndex{1} << a) | (BasisIndex{1} << b)), 0.5 * g);
    }
}

}  // namespace detail

/// Real-symmetric sparse Hamiltonian of the coupled double-well chain.
inline SparseMatrix build_hamiltonian(const SpinChainSpec& spec) {
    spec.validate();
    const auto dim = static_cast<Eigen::Index>(spec.dim());
    const auto bonds = spec.bonds();

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(dim) * (bonds.size() + 1));
    for (BasisIndex s = 0; s < static_cast<BasisIndex>(dim); ++s) {
        for (const Bond& bond : bonds) {
            detail::heisenberg_bond(s, bond.a, bond.b, bond.coupling, [&](BasisIndex row, double v) {
                triplets.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(s), v);
            });
        }
    }
    SparseMatrix h(dim, dim);
    h.setFromTriplets(triplets.begin(), triplets.end());
    h.makeCompressed();
    h.prune(0.0);
    return h;
}

/// Diagonal of sum_n j^z_n.
inline RealVector total_sz_diagonal(int n_sites) {
    const std::size_t dim = std::size_t{1} << n_sites;
    RealVector d(static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < dim; ++s) {
        d[static_cast<Eigen::Index>(s)] = 0.5 * (2.0 * std::popcount(s) - n_sites);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Spectral decomposition

enum class DiagonalizationMethod { automatic, dense, sz_blocks };

struct DiagonalizationOptions {
    DiagonalizationMethod method = DiagonalizationMethod::automatic;
    // automatic: dense up to this many sites, S^z blocks above
    int dense_max_sites = 8;
    // largest block handed to the dense symmetric eigensolver
    std::size_t max_block_dim = 5000;
    double hermiticity_tolerance = 1e-10;
};

// One diagonalized sector. `basis` lists the z-basis indices spanned by the
// block in increasing order; `vectors` columns are eigenvectors in that basis.
struct SectorBlock {
    int up_count = -1;  // -1 for the dense (unsectored) path
    std::vector<BasisIndex> basis;
    RealVector energies;
    Eigen::MatrixXd vectors;
};

struct LevelRef {
    std::size_t block;
    Eigen::Index local;
};

class SpectralDecomposition {
public:
    SpectralDecomposition(std::size_t dim, std::vector<SectorBlock> blocks) : dim_(dim), blocks_(std::move(blocks)) {
        block_of_.assign(dim_, -1);
        position_.assign(dim_, -1);
        for (std::size_t b = 0; b < blocks_.size(); ++b) {
            const auto& blk = blocks_[b];
            for (std::size_t i = 0; i < blk.basis.size(); ++i) {
                block_of_[blk.basis[i]] = static_cast<std::int32_t>(b);
                position_[blk.basis[i]] = static_cast<std::int32_t>(i);
            }
            for (Eigen::Index k = 0; k < blk.energies.size(); ++k) levels_.push_back({b, k});
        }
        // stable: ties keep (block, local) order, which fixes "lowest index"
        std::stable_sort(levels_.begin(), levels_.end(), [&](const LevelRef& x, const LevelRef& y) {
            return energy(x) < energy(y);
        });
        eigenvalues_.reserve(levels_.size());
        for (const auto& l : levels_) eigenvalues_.push_back(energy(l));
    }

    [[nodiscard]] std::size_t dim() const { return dim_; }
    [[nodiscard]] const std::vector<SectorBlock>& blocks() const { return blocks_; }
    [[nodiscard]] const std::vector<double>& eigenvalues() const { return eigenvalues_; }
    [[nodiscard]] const LevelRef& level(std::size_t n) const { return levels_.at(n); }
    [[nodiscard]] std::int32_t block_of(BasisIndex s) const { return block_of_[s]; }
    [[nodiscard]] std::int32_t position_in_block(BasisIndex s) const { return position_[s]; }

    // max |E_n|, the spectral norm of H
    [[nodiscard]] double spectral_norm() const {
        double m = 0.0;
        for (double e : eigenvalues_) m = std::max(m, std::abs(e));
        return m;
    }

    /// |E_n> in the full z-basis (n counts levels in ascending energy order).
    [[nodiscard]] StateVector eigenvector(std::size_t n) const {
        const auto& ref = level(n);
        const auto& blk = blocks_[ref.block];
        StateVector v = StateVector::Zero(static_cast<Eigen::Index>(dim_));
        for (std::size_t i = 0; i < blk.basis.size(); ++i) {
            v[blk.basis[i]] = blk.vectors(static_cast<Eigen::Index>(i), ref.local);
        }
        return v;
    }

    // Full V with columns ordered as eigenvalues(). Intended for small systems.
    [[nodiscard]] Eigen::MatrixXd dense_eigenvectors() const {
        const auto d = static_cast<Eigen::Index>(dim_);
        Eigen::MatrixXd v = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t n = 0; n < levels_.size(); ++n) {
            const auto& ref = levels_[n];
            const auto& blk = blocks_[ref.block];
            for (std::size_t i = 0; i < blk.basis.size(); ++i) {
                v(blk.basis[i], static_cast<Eigen::Index>(n)) = blk.vectors(static_cast<Eigen::Index>(i), ref.local);
            }
        }
        return v;
    }

    // Restriction of a full vector onto block b (gather).
    [[nodiscard]] StateVector gather(const StateVector& full, std::size_t b) const {
        const auto& basis = blocks_[b].basis;
        StateVector out(static_cast<Eigen::Index>(basis.size()));
        for (std::size_t i = 0; i < basis.size(); ++i) out[static_cast<Eigen::Index>(i)] = full[basis[i]];
        return out;
    }

private:
    [[nodiscard]] double energy(const LevelRef& l) const { return blocks_[l.block].energies[l.local]; }

    std::size_t dim_;
    std::vector<SectorBlock> blocks_;
    std::vector<LevelRef> levels_;
    std::vector<double> eigenvalues_;
    std::vector<std::int32_t> block_of_;
    std::vector<std::int32_t> position_;
};

namespace detail {

inline double max_asymmetry(const SparseMatrix& h) {
    SparseMatrix ht = h.transpose();
    SparseMatrix diff = h - ht;
    double m = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(diff, k); it; ++it) m = std::max(m, std::abs(it.value()));
    }
    return m;
}

inline SectorBlock solve_block(const SparseMatrix& h, std::vector<BasisIndex> basis, int up_count,
                               const DiagonalizationOptions& opts) {
    if (basis.size() > opts.max_block_dim) {
        throw CapacityError("eigensolver block of dimension " + std::to_string(basis.size()) +
                            " exceeds max_block_dim=" + std::to_string(opts.max_block_dim));
    }
    const auto n = static_cast<Eigen::Index>(basis.size());
    std::vector<std::int32_t> local(static_cast<std::size_t>(h.rows()), -1);
    for (Eigen::Index i = 0; i < n; ++i) local[basis[static_cast<std::size_t>(i)]] = static_cast<std::int32_t>(i);

    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (SparseMatrix::InnerIterator it(h, basis[static_cast<std::size_t>(j)]); it; ++it) {
            const auto i = local[static_cast<std::size_t>(it.row())];
            if (i < 0) {
                throw StructuralError("Hamiltonian couples different total-S^z sectors");
            }
            dense(i, j) = it.value();
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed to converge");
    return SectorBlock{up_count, std::move(basis), solver.eigenvalues(), solver.eigenvectors()};
}

}  // namespace detail

/// Full diagonalization of a real-symmetric H. Above `dense_max_sites` the
/// problem is split into total-S^z sectors; both paths return the same pairs.
inline SpectralDecomposition diagonalize(const SparseMatrix& h, const DiagonalizationOptions& opts = {}) {
    if (h.rows() != h.cols() || h.rows() == 0) throw ValidationError("Hamiltonian must be square and non-empty");
    const double asym = detail::max_asymmetry(h);
    if (asym > opts.hermiticity_tolerance) {
        throw ValidationError("Hamiltonian is not Hermitian (max asymmetry " + std::to_string(asym) + ")");
    }
    const auto dim = static_cast<std::size_t>(h.rows());
    const bool power_of_two = std::has_single_bit(dim);

    bool blocked = false;
    switch (opts.method) {
        case DiagonalizationMethod::dense: blocked = false; break;
        case DiagonalizationMethod::sz_blocks: blocked = true; break;
        case DiagonalizationMethod::automatic:
            blocked = power_of_two && dim > (std::size_t{1} << opts.dense_max_sites);
            break;
    }
    if (blocked && !power_of_two) throw ValidationError("S^z blocking requires a 2^n dimensional space");

    std::vector<SectorBlock> blocks;
    if (!blocked) {
        std::vector<BasisIndex> all(dim);
        std::iota(all.begin(), all.end(), BasisIndex{0});
        blocks.push_back(detail::solve_block(h, std::move(all), -1, opts));
    } else {
        const int n_sites = std::countr_zero(dim);
        std::vector<std::vector<BasisIndex>> sectors(static_cast<std::size_t>(n_sites) + 1);
        for (std::size_t s = 0; s < dim; ++s) sectors[static_cast<std::size_t>(std::popcount(s))].push_back(static_cast<BasisIndex>(s));
        for (int up = 0; up <= n_sites; ++up) {
            blocks.push_back(detail::solve_block(h, std::move(sectors[static_cast<std::size_t>(up)]), up, opts));
        }
    }
    return SpectralDecomposition(dim, std::move(blocks));
}

// ---------------------------------------------------------------------------
// States

struct GroundState {
    ManyBodyState state;
    double energy = 0.0;
    double gap = 0.0;  // E_1 - E_0
    bool degenerate = false;
};

inline constexpr double kDegeneracyRelTolerance = 1e-9;

inline GroundState ground_state(const SpectralDecomposition& decomp) {
    const auto& e = decomp.eigenvalues();
    const int n_sites = std::countr_zero(decomp.dim());
    GroundState gs{ManyBodyState::normalized(n_sites, decomp.eigenvector(0)), e.front(), 0.0, false};
    if (e.size() > 1) {
        gs.gap = e[1] - e[0];
        gs.degenerate = gs.gap <= kDegeneracyRelTolerance * decomp.spectral_norm();
    }
    return gs;
}

inline GroundState ground_state(const SpinChainSpec& spec, const DiagonalizationOptions& opts = {}) {
    return ground_state(diagonalize(build_hamiltonian(spec), opts));
}

/// prod_n (|up>_{2n}|down>_{2n+1} - |down>_{2n}|up>_{2n+1}) / sqrt(2)
inline ManyBodyState singlet_product_state(int n_sites) {
    if (n_sites < 2 || n_sites % 2 != 0) {
        throw ValidationError("singlet product state needs an even number of sites, got " + std::to_string(n_sites));
    }
    const std::size_t dim = std::size_t{1} << n_sites;
    const int pairs = n_sites / 2;
    const double amp = std::pow(0.5, 0.5 * pairs);
    StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(dim));
    // each pair contributes either "up on the even site" (+) or "up on the odd site" (-)
    for (std::uint32_t choice = 0; choice < (1u << pairs); ++choice) {
        BasisIndex s = 0;
        double sign = 1.0;
        for (int p = 0; p < pairs; ++p) {
            if ((choice >> p) & 1u) {
                s |= BasisIndex{1} << (2 * p + 1);
                sign = -sign;
            } else {
                s |= BasisIndex{1} << (2 * p);
            }
        }
        psi[s] = sign * amp;
    }
    return ManyBodyState::normalized(n_sites, std::move(psi));
}

// ---------------------------------------------------------------------------
// Time evolution, psi(t) = V exp(-iEt) V^T psi

/// Eigenbasis coefficients of a fixed vector, kept per S^z block so repeated
/// evaluation at many times costs one back-transform each.
class Propagator {
public:
    Propagator(const SpectralDecomposition& decomp, const StateVector& psi) : decomp_(&decomp) {
        if (static_cast<std::size_t>(psi.size()) != decomp.dim()) throw ValidationError("vector dimension mismatch");
        const auto& blocks = decomp.blocks();
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            StateVector local = decomp.gather(psi, b);
            if (local.squaredNorm() == 0.0) continue;
            StateVector coeff(local.size());
            coeff.real() = blocks[b].vectors.transpose() * local.real();
            coeff.imag() = blocks[b].vectors.transpose() * local.imag();
            active_.push_back({b, std::move(coeff)});
        }
    }

    [[nodiscard]] StateVector at(double t) const {
        StateVector out = StateVector::Zero(static_cast<Eigen::Index>(decomp_->dim()));
        for (const auto& [b, coeff] : active_) {
            const auto& blk = decomp_->blocks()[b];
            StateVector phased(coeff.size());
            for (Eigen::Index k = 0; k < coeff.size(); ++k) phased[k] = coeff[k] * std::polar(1.0, -blk.energies[k] * t);
            RealVector re = blk.vectors * phased.real();
            RealVector im = blk.vectors * phased.imag();
            for (std::size_t i = 0; i < blk.basis.size(); ++i) {
                out[blk.basis[i]] = Complex(re[static_cast<Eigen::Index>(i)], im[static_cast<Eigen::Index>(i)]);
            }
        }
        return out;
    }

    /// Column j holds the vector evolved to times[j].
    [[nodiscard]] Eigen::MatrixXcd at(std::span<const double> times) const {
        const auto nt = static_cast<Eigen::Index>(times.size());
        Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(decomp_->dim()), nt);
        for (const auto& [b, coeff] : active_) {
            const auto& blk = decomp_->blocks()[b];
            const Eigen::Index d = coeff.size();
            Eigen::MatrixXd pre(d, nt), pim(d, nt);
            for (Eigen::Index j = 0; j < nt; ++j) {
                for (Eigen::Index k = 0; k < d; ++k) {
                    const Complex c = coeff[k] * std::polar(1.0, -blk.energies[k] * times[static_cast<std::size_t>(j)]);
                    pre(k, j) = c.real();
                    pim(k, j) = c.imag();
                }
            }
            Eigen::MatrixXd re = blk.vectors * pre;
            Eigen::MatrixXd im = blk.vectors * pim;
            for (std::size_t i = 0; i < blk.basis.size(); ++i) {
                const auto li = static_cast<Eigen::Index>(i);
                for (Eigen::Index j = 0; j < nt; ++j) out(blk.basis[i], j) = Complex(re(li, j), im(li, j));
            }
        }
        return out;
    }

private:
    struct ActiveBlock {
        std::size_t block;
        StateVector coeff;
    };
    const SpectralDecomposition* decomp_;
    std::vector<ActiveBlock> active_;
};

inline StateVector evolve(const StateVector& psi, const SpectralDecomposition& decomp, double t) {
    return Propagator(decomp, psi).at(t);
}

inline ManyBodyState evolve(const ManyBodyState& psi, const SpectralDecomposition& decomp, double t) {
    // the constructor enforces the 1e-12 norm invariant on the result
    return {psi.n_sites(), evolve(psi.amplitudes(), decomp, t)};
}

/// Evolves column j of `vecs` by times[j]. Each S^z block is handled with
/// two real matrix-matrix products per direction.
inline Eigen::MatrixXcd evolve_columns(const Eigen::MatrixXcd& vecs, const SpectralDecomposition& decomp,
                                       std::span<const double> times) {
    if (static_cast<std::size_t>(vecs.rows()) != decomp.dim() || static_cast<std::size_t>(vecs.cols()) != times.size()) {
        throw ValidationError("evolve_columns: shape mismatch");
    }
    const Eigen::Index nt = vecs.cols();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(vecs.rows(), nt);
    for (const auto& blk : decomp.blocks()) {
        const auto d = static_cast<Eigen::Index>(blk.basis.size());
        Eigen::MatrixXd re(d, nt), im(d, nt);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < nt; ++j) {
                const Complex v = vecs(blk.basis[static_cast<std::size_t>(i)], j);
                re(i, j) = v.real();
                im(i, j) = v.imag();
            }
        }
        if (re.squaredNorm() + im.squaredNorm() == 0.0) continue;
        Eigen::MatrixXd cre = blk.vectors.transpose() * re;
        Eigen::MatrixXd cim = blk.vectors.transpose() * im;
        for (Eigen::Index j = 0; j < nt; ++j) {
            for (Eigen::Index k = 0; k < d; ++k) {
                const Complex c = Complex(cre(k, j), cim(k, j)) * std::polar(1.0, -blk.energies[k] * times[static_cast<std::size_t>(j)]);
                cre(k, j) = c.real();
                cim(k, j) = c.imag();
            }
        }
        re.noalias() = blk.vectors * cre;
        im.noalias() = blk.vectors * cim;
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < nt; ++j) out(blk.basis[static_cast<std::size_t>(i)], j) = Complex(re(i, j), im(i, j));
        }
    }
    return out;
}

/// U(t) = exp(-iHt) as a dense matrix. Small systems only.
inline Eigen::MatrixXcd dense_propagator(const SpectralDecomposition& decomp, double t) {
    const auto d = static_cast<Eigen::Index>(decomp.dim());
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(d, d);
    for (const auto& blk : decomp.blocks()) {
        const auto n = static_cast<Eigen::Index>(blk.basis.size());
        Eigen::VectorXcd phases(n);
        for (Eigen::Index k = 0; k < n; ++k) phases[k] = std::polar(1.0, -blk.energies[k] * t);
        Eigen::MatrixXcd ub = blk.vectors.cast<Complex>() * phases.asDiagonal() * blk.vectors.transpose().cast<Complex>();
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) u(blk.basis[static_cast<std::size_t>(i)], blk.basis[static_cast<std::size_t>(j)]) = ub(i, j);
        }
    }
    return u;
}

/// Heisenberg picture O(t) = U^dagger(t) O U(t).
inline Eigen::MatrixXcd heisenberg(const Eigen::MatrixXcd& op, const SpectralDecomposition& decomp, double t) {
    if (static_cast<std::size_t>(op.rows()) != decomp.dim() || op.rows() != op.cols()) {
        throw ValidationError("operator dimension mismatch");
    }
    const Eigen::MatrixXcd u = dense_propagator(decomp, t);
    return u.adjoint() * op * u;
}

inline Complex inner(const StateVector& a, const StateVector& b) { return a.dot(b); }

}  // namespace qmap
