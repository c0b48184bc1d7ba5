#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "multiport/interference.hpp"
#include "multiport/matrix.hpp"

namespace multiport {

struct EmptyInput : std::runtime_error {
    explicit EmptyInput(int input)
        : std::runtime_error("normalize_counts: input " + std::to_string(input) +
                             " has zero total singles"),
          input_port(input) {}
    int input_port;
};

/// Raw detection counts. singles[i][k] = singles at output k when feeding
/// input i — each row is one measurement run, which is why this table is
/// indexed [input][output] while every probability matrix in the library is
/// [output][input]. Coincidence counts are stored per (input pair, output
/// pair) in the canonical pair order, one table for distinguishable photons
/// and one for indistinguishable.
struct CountTable {
    std::array<std::array<std::int64_t, 3>, 3> singles{};
    std::array<std::array<std::int64_t, 3>, 3> dist{};    // [input pair][output pair]
    std::array<std::array<std::int64_t, 3>, 3> indist{};
};

/// probs(k, i) = singles[i][k] / sum_k singles[i][k]: each input's outputs
/// normalized to 1 (column-stochastic in the matrix orientation).
inline AmplitudeDistribution normalize_counts(const CountTable& c) {
    AmplitudeDistribution a;
    a.probs = RMatrix::Zero(3, 3);
    a.axis = NormAxis::col;
    for (int i = 0; i < 3; ++i) {
        std::int64_t total = 0;
        for (int k = 0; k < 3; ++k) {
            if (c.singles[i][k] < 0) throw std::invalid_argument("normalize_counts: negative count");
            total += c.singles[i][k];
        }
        if (total == 0) throw EmptyInput(i);
        for (int k = 0; k < 3; ++k)
            a.probs(k, i) = static_cast<double>(c.singles[i][k]) / static_cast<double>(total);
    }
    return a;
}

/// Synthetic measurement of a known device. Singles means are
/// totals * |u(k,i)|^2; coincidence means are totals * C and totals * Q per
/// pair. poisson=true samples each count independently (no multinomial
/// coupling across detectors — each pair rate is treated on its own);
/// poisson=false writes the rounded means. Deterministic for a given seed.
inline CountTable synth_counts(const TransferMatrix& u, std::int64_t totals, std::uint64_t seed,
                               bool poisson) {
    detail::require_dim(u, 3, "synth_counts");
    if (totals <= 0) throw std::invalid_argument("synth_counts: totals must be > 0");
    std::mt19937_64 rng(seed);
    auto draw = [&](double mean) -> std::int64_t {
        if (!poisson) return static_cast<std::int64_t>(std::llround(mean));
        if (mean <= 0.0) return 0;
        std::poisson_distribution<std::int64_t> p(mean);
        return p(rng);
    };
    CountTable t;
    AmplitudeDistribution a = amplitude_distribution(u);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k)
            t.singles[i][k] = draw(static_cast<double>(totals) * a.probs(k, i));
    for (int r = 0; r < 3; ++r) {
        auto [i, j] = kPortPairs[r];
        for (int c = 0; c < 3; ++c) {
            auto [k, l] = kPortPairs[c];
            t.dist[r][c] = draw(static_cast<double>(totals) * coincidence_distinguishable(u, i, j, k, l));
            t.indist[r][c] = draw(static_cast<double>(totals) * coincidence_indistinguishable(u, i, j, k, l));
        }
    }
    return t;
}

}  // namespace multiport
