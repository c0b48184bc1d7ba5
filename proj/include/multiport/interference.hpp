#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "multiport/matrix.hpp"

namespace multiport {

/// Canonical port-pair order used for visibility rows (input pairs) and
/// columns (output pairs).
inline constexpr std::array<std::pair<int, int>, 3> kPortPairs{{{0, 1}, {0, 2}, {1, 2}}};

inline constexpr double kCoincidenceEps = 1e-12;

enum class NormAxis { col, row };

/// Single-photon output probabilities probs(k, i) = |u(k, i)|^2, same
/// row=output / col=input orientation as the matrix itself. `axis` records
/// which direction is normalized: `col` means each input's outputs sum to 1
/// (the model-generated case); measured data may be closer to row-stochastic
/// and the loader records what it found.
struct AmplitudeDistribution {
    RMatrix probs;
    std::optional<RMatrix> sigma;
    NormAxis axis = NormAxis::col;

    int dim() const { return static_cast<int>(probs.rows()); }
};

struct VisibilityMatrix {
    RMatrix vals;                         // rows = input pairs, cols = output pairs
    std::array<std::array<bool, 3>, 3> undefined{};  // flagged-zero entries
    std::optional<RMatrix> sigma;

    bool any_undefined() const {
        for (const auto& row : undefined)
            for (bool u : row)
                if (u) return true;
        return false;
    }
};

inline AmplitudeDistribution amplitude_distribution(const TransferMatrix& u) {
    AmplitudeDistribution a;
    a.probs = u.entries().cwiseAbs2();
    return a;
}

namespace detail {
inline void require_pair(const TransferMatrix& u, int i, int j, const char* what) {
    if (i < 0 || j < 0 || i >= u.dim() || j >= u.dim())
        throw std::out_of_range(std::string(what) + ": port index out of range");
    if (i == j) throw std::invalid_argument(std::string(what) + ": ports must be distinct");
}
}  // namespace detail

/// Two distinguishable photons into ports i,j; coincidence at outputs k,l:
/// the two assignment probabilities add with no interference.
inline double coincidence_distinguishable(const TransferMatrix& u, int i, int j, int k, int l) {
    detail::require_pair(u, i, j, "coincidence: inputs");
    detail::require_pair(u, k, l, "coincidence: outputs");
    double t1 = std::norm(u(k, i) * u(l, j));
    double t2 = std::norm(u(l, i) * u(k, j));
    return t1 + t2;
}

/// Indistinguishable photons: the two assignment amplitudes add coherently.
inline double coincidence_indistinguishable(const TransferMatrix& u, int i, int j, int k, int l) {
    detail::require_pair(u, i, j, "coincidence: inputs");
    detail::require_pair(u, k, l, "coincidence: outputs");
    return std::norm(u(k, i) * u(l, j) + u(l, i) * u(k, j));
}

struct Visibility {
    double value = 0.0;
    bool undefined = false;
};

/// (c - q) / c. Positive = dip, negative = peak. When c is numerically zero
/// the ratio is undefined; we report 0 with a flag instead of NaN so that
/// downstream sums stay finite.
inline Visibility visibility(double c, double q) {
    if (c <= kCoincidenceEps) return {0.0, true};
    return {(c - q) / c, false};
}

inline VisibilityMatrix visibility_matrix(const TransferMatrix& u) {
    detail::require_dim(u, 3, "visibility_matrix");
    VisibilityMatrix vm;
    vm.vals = RMatrix::Zero(3, 3);
    for (int r = 0; r < 3; ++r) {
        auto [i, j] = kPortPairs[r];
        for (int c = 0; c < 3; ++c) {
            auto [k, l] = kPortPairs[c];
            Visibility v = visibility(coincidence_distinguishable(u, i, j, k, l),
                                      coincidence_indistinguishable(u, i, j, k, l));
            vm.vals(r, c) = v.value;
            vm.undefined[r][c] = v.undefined;
        }
    }
    return vm;
}

/// Gaussian envelope in the relative delay. The width default interprets a
/// 440 um coherence length as the FWHM of the envelope. This envelope shape
/// is a modeling choice; only the asymptotes (rate*Q at zero delay, rate*C
/// far away) are constrained by the coincidence model.
struct FringeModel {
    double coherence_sigma = 440.0 / (2.0 * std::sqrt(2.0 * std::log(2.0)));  // um
    double rate = 1.0;  // expected coincidences per delay point at full distinguishability

    void validate() const {
        if (!(coherence_sigma > 0.0)) throw std::invalid_argument("fringe: coherence_sigma must be > 0");
        if (!(rate > 0.0)) throw std::invalid_argument("fringe: rate must be > 0");
    }
};

struct FringePoint {
    double delay_um;
    double expected;
};

/// expected(delay) = rate * (C - (C - Q) * exp(-delay^2 / (2 sigma^2))).
inline std::vector<FringePoint> fringe(const TransferMatrix& u, int i, int j, int k, int l,
                                       const std::vector<double>& delays_um, const FringeModel& fm) {
    fm.validate();
    double c = coincidence_distinguishable(u, i, j, k, l);
    double q = coincidence_indistinguishable(u, i, j, k, l);
    std::vector<FringePoint> out;
    out.reserve(delays_um.size());
    for (double d : delays_um) {
        double env = std::exp(-d * d / (2.0 * fm.coherence_sigma * fm.coherence_sigma));
        out.push_back({d, fm.rate * (c - (c - q) * env)});
    }
    return out;
}

}  // namespace multiport
