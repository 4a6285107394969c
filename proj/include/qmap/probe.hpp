#pragma once

// Standing-wave modulated magnetization J = (1/sqrt(N)) sum_n c_n j^z_n and
// its eigenspace (projector) structure. J is diagonal in the z-basis.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qmap/spinchain.hpp"

namespace qmap {

struct ProbeGeometry {
    double k = M_PI / 2.0;  // wavenumber in units of 1/a
    double alpha = 0.0;     // standing-wave phase shift
    int n_sites = 12;
};

/// c_n = 2 cos^2(k n - alpha), lattice spacing a = 1.
inline std::vector<double> modulation_coefficients(const ProbeGeometry& geom) {
    if (geom.n_sites < 1) throw ValidationError("probe needs at least one site");
    if (!std::isfinite(geom.k) || !std::isfinite(geom.alpha)) throw ValidationError("probe k and alpha must be finite");
    std::vector<double> c(static_cast<std::size_t>(geom.n_sites));
    for (int n = 0; n < geom.n_sites; ++n) {
        const double cs = std::cos(geom.k * n - geom.alpha);
        c[static_cast<std::size_t>(n)] = 2.0 * cs * cs;
    }
    return c;
}

// Eigenspace of J: eigenvalue a_i (group mean) and the z-basis states spanning it.
struct EigenGroup {
    double value = 0.0;
    std::vector<BasisIndex> indices;
};

struct Grouping {
    std::vector<EigenGroup> groups;
    // set when some adjacent gap sits within a decade of the tolerance, or a
    // group chains wider than the tolerance; the grouping is still deterministic
    bool ambiguous = false;
};

inline constexpr double kDefaultGroupRelTolerance = 1e-9;

/// Groups equal diagonal values: sort, then split wherever the gap to the
/// previous value reaches `group_tol`.
inline Grouping eigengroups(const RealVector& diag, double group_tol) {
    const auto dim = static_cast<std::size_t>(diag.size());
    std::vector<BasisIndex> order(dim);
    std::iota(order.begin(), order.end(), BasisIndex{0});
    std::stable_sort(order.begin(), order.end(), [&](BasisIndex a, BasisIndex b) { return diag[a] < diag[b]; });

    Grouping out;
    for (std::size_t i = 0; i < dim; ++i) {
        const double v = diag[order[i]];
        if (i == 0 || v - diag[order[i - 1]] >= group_tol) {
            if (i > 0 && v - diag[order[i - 1]] < 10.0 * group_tol) out.ambiguous = true;
            out.groups.push_back({});
        } else if (v - diag[order[i - 1]] > 0.1 * group_tol) {
            out.ambiguous = true;
        }
        out.groups.back().indices.push_back(order[i]);
    }
    for (auto& g : out.groups) {
        double sum = 0.0;
        double lo = diag[g.indices.front()], hi = lo;
        for (BasisIndex s : g.indices) {
            sum += diag[s];
            lo = std::min(lo, diag[s]);
            hi = std::max(hi, diag[s]);
        }
        g.value = sum / static_cast<double>(g.indices.size());
        if (hi - lo >= group_tol) out.ambiguous = true;
        std::sort(g.indices.begin(), g.indices.end());
    }
    return out;
}

class ProbeObservable {
public:
    ProbeObservable(int n_sites, std::vector<double> coefficients, RealVector diag, Grouping grouping, double group_tol)
        : n_sites_(n_sites),
          coefficients_(std::move(coefficients)),
          diag_(std::move(diag)),
          grouping_(std::move(grouping)),
          group_tol_(group_tol) {}

    [[nodiscard]] int n_sites() const { return n_sites_; }
    [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(diag_.size()); }
    [[nodiscard]] const std::vector<double>& coefficients() const { return coefficients_; }
    [[nodiscard]] const RealVector& diag() const { return diag_; }
    [[nodiscard]] const std::vector<EigenGroup>& groups() const { return grouping_.groups; }
    [[nodiscard]] bool ambiguous_grouping() const { return grouping_.ambiguous; }
    [[nodiscard]] double group_tol() const { return group_tol_; }

    [[nodiscard]] double max_abs_eigenvalue() const { return diag_.cwiseAbs().maxCoeff(); }

    [[nodiscard]] StateVector apply(const StateVector& v) const { return diag_.cast<Complex>().cwiseProduct(v); }
    [[nodiscard]] StateVector apply_squared(const StateVector& v) const {
        return diag_.cwiseAbs2().cast<Complex>().cwiseProduct(v);
    }

    // <v|J|v> for an arbitrary (not necessarily normalized) vector
    [[nodiscard]] double expectation(const StateVector& v) const { return diag_.dot(v.cwiseAbs2()); }
    [[nodiscard]] double expectation_squared(const StateVector& v) const {
        return diag_.cwiseAbs2().dot(v.cwiseAbs2());
    }

    [[nodiscard]] Eigen::MatrixXcd dense() const { return diag_.cast<Complex>().asDiagonal(); }

    /// P_i v: keep only the components in group i.
    [[nodiscard]] StateVector project(const StateVector& v, std::size_t group) const {
        StateVector out = StateVector::Zero(v.size());
        for (BasisIndex s : grouping_.groups.at(group).indices) out[s] = v[s];
        return out;
    }

private:
    int n_sites_;
    std::vector<double> coefficients_;
    RealVector diag_;
    Grouping grouping_;
    double group_tol_;
};

/// J on the z-basis with N = n_sites. `rel_group_tol` is in units of max|diag|.
inline ProbeObservable build_J(const std::vector<double>& c, int n_sites,
                               double rel_group_tol = kDefaultGroupRelTolerance) {
    if (static_cast<int>(c.size()) != n_sites) throw ValidationError("need one modulation coefficient per site");
    if (n_sites < 1 || n_sites > 30) throw CapacityError("probe observable size out of range");
    const std::size_t dim = std::size_t{1} << n_sites;
    const double norm = 1.0 / std::sqrt(static_cast<double>(n_sites));
    RealVector diag(static_cast<Eigen::Index>(dim));
    for (std::size_t s = 0; s < dim; ++s) {
        double v = 0.0;
        for (int n = 0; n < n_sites; ++n) v += c[static_cast<std::size_t>(n)] * (((s >> n) & 1u) ? 0.5 : -0.5);
        diag[static_cast<Eigen::Index>(s)] = norm * v;
    }
    const double scale = diag.size() ? diag.cwiseAbs().maxCoeff() : 0.0;
    // an all-zero J is a single group regardless of the tolerance
    const double tol = scale > 0.0 ? rel_group_tol * scale : 1.0;
    Grouping grouping = eigengroups(diag, tol);
    return {n_sites, c, std::move(diag), std::move(grouping), tol};
}

inline ProbeObservable build_J(const ProbeGeometry& geom, double rel_group_tol = kDefaultGroupRelTolerance) {
    return build_J(modulation_coefficients(geom), geom.n_sites, rel_group_tol);
}

}  // namespace qmap
