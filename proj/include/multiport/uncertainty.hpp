#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>
#include <vector>

#include "multiport/reconstruction.hpp"

namespace multiport {

struct UncertaintyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UncertaintyEstimate {
    SigmaBlock sigma;        // per-entry magnitude / phase spreads
    int samples = 0;
    int converged_samples = 0;
};

/// Monte-Carlo error propagation through the reconstruction: perturb every
/// visibility entry (clamped to [-1,1]) and amplitude entry (clamped to
/// >= 0) by Gaussian noise of its stated sigma, re-run reconstruct_direct,
/// and report per-entry standard deviations of the real-bordered result.
///
/// Every sample runs with the same cfg (same solver start sequence), so the
/// spread measures the data perturbation, not solver randomness; with all
/// input sigma zero the output sigma is exactly zero. Each sample is aligned
/// to the unperturbed reconstruction over the conjugation twin before the
/// statistics, since conjugate solutions are equally valid. Phase spreads
/// are circular standard deviations, sqrt(-2 ln |mean unit phasor|).
inline UncertaintyEstimate estimate_uncertainty(const VisibilityMatrix& target,
                                                const AmplitudeDistribution& amp,
                                                const OptimizerConfig& cfg, int samples) {
    if (!target.sigma) throw UncertaintyError("estimate_uncertainty: target has no sigma field");
    if (!amp.sigma) throw UncertaintyError("estimate_uncertainty: amplitude has no sigma field");
    if (samples < 10) throw UncertaintyError("estimate_uncertainty: need at least 10 samples");

    ReconstructionResult central = reconstruct_direct(target, amp, cfg);

    std::vector<CMatrix> aligned;
    aligned.reserve(static_cast<std::size_t>(samples));
    int converged = 0;
    for (int s = 0; s < samples; ++s) {
        std::mt19937_64 rng(cfg.seed ^
                            (0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(s) + 1)));
        std::normal_distribution<double> gauss(0.0, 1.0);

        VisibilityMatrix vt = target;
        vt.sigma.reset();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                if (vt.undefined[r][c]) continue;
                double v = vt.vals(r, c) + gauss(rng) * (*target.sigma)(r, c);
                vt.vals(r, c) = std::clamp(v, -1.0, 1.0);
            }
        AmplitudeDistribution at = amp;
        at.sigma.reset();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                at.probs(r, c) = std::max(at.probs(r, c) + gauss(rng) * (*amp.sigma)(r, c), 0.0);

        ReconstructionResult rec = reconstruct_direct(vt, at, cfg);
        if (rec.converged) ++converged;
        GaugeComparison cmp = compare_up_to_gauge(central.matrix, rec.matrix);
        aligned.push_back(cmp.conjugated ? rec.matrix.entries().conjugate().eval()
                                         : rec.matrix.entries());
    }

    if (2 * (samples - converged) > samples)
        throw UncertaintyError("estimate_uncertainty: more than half of the samples did not converge (" +
                               std::to_string(samples - converged) + " of " + std::to_string(samples) + ")");

    UncertaintyEstimate est;
    est.samples = samples;
    est.converged_samples = converged;
    est.sigma.mag = RMatrix::Zero(3, 3);
    est.sigma.phase = RMatrix::Zero(3, 3);
    // bit-identical samples (e.g. all input sigma zero) must report exactly
    // zero spread; the mean/variance and phasor passes would leave rounding dust
    bool all_same = true;
    for (const CMatrix& m : aligned)
        if ((m - aligned.front()).cwiseAbs().maxCoeff() != 0.0) {
            all_same = false;
            break;
        }
    if (all_same) return est;
    const double n = static_cast<double>(aligned.size());
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            double mean = 0.0;
            for (const CMatrix& m : aligned) mean += std::abs(m(r, c));
            mean /= n;
            double var = 0.0;
            for (const CMatrix& m : aligned) {
                double d = std::abs(m(r, c)) - mean;
                var += d * d;
            }
            est.sigma.mag(r, c) = std::sqrt(var / std::max(n - 1.0, 1.0));

            Complex phasor(0.0, 0.0);
            for (const CMatrix& m : aligned) {
                Complex e = m(r, c);
                double a = std::abs(e);
                phasor += a > 1e-300 ? e / a : Complex(1.0, 0.0);
            }
            double rbar = std::min(std::abs(phasor) / n, 1.0);
            est.sigma.phase(r, c) = rbar > 1e-12 ? std::sqrt(-2.0 * std::log(rbar)) : M_PI;
        }
    }
    return est;
}

}  // namespace multiport
