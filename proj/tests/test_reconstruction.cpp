#include <catch2/catch_amalgamated.hpp>

#include "multiport/interference.hpp"
#include "multiport/matrix.hpp"
#include "multiport/reconstruction.hpp"

using namespace multiport;
using Catch::Matchers::WithinAbs;

namespace {

RealBorderedParams tritter_params() {
    RealBorderedParams p;
    p.mags.fill(1.0 / std::sqrt(3.0));
    p.phases = {2.0 * M_PI / 3.0, -2.0 * M_PI / 3.0, -2.0 * M_PI / 3.0, 2.0 * M_PI / 3.0};
    return p;
}

AmplitudeDistribution amp_of(const TransferMatrix& u) { return amplitude_distribution(u); }

}  // namespace

TEST_CASE("params round-trip through the canonical-gauge matrix", "[reconstruction]") {
    TransferMatrix t = params_to_matrix(tritter_params());
    CHECK((t.entries() - ideal_tritter().entries()).cwiseAbs().maxCoeff() <= 1e-12);

    // magnitudes are taken as |.|, so sign excursions cannot corrupt entries
    RealBorderedParams p = tritter_params();
    p.mags[4] = -p.mags[4];
    CHECK((params_to_matrix(p).entries() - t.entries()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("visibility residual objective", "[reconstruction]") {
    VisibilityMatrix zero;
    zero.vals = RMatrix::Zero(3, 3);
    // tritter visibilities are 0.5 everywhere: 9 entries * 0.25
    CHECK_THAT(rms_objective(tritter_params(), zero), WithinAbs(2.25, 1e-12));

    VisibilityMatrix self = visibility_matrix(params_to_matrix(tritter_params()));
    CHECK_THAT(rms_objective(tritter_params(), self), WithinAbs(0.0, 1e-15));

    // flagged entries are excluded no matter what value they hold
    zero.undefined[1][1] = true;
    zero.vals(1, 1) = 999.0;
    CHECK_THAT(rms_objective(tritter_params(), zero), WithinAbs(2.0, 1e-12));
}

TEST_CASE("similarity score", "[reconstruction]") {
    RMatrix a = RMatrix::Constant(3, 3, 1.0);
    CHECK_THAT(similarity(a, a), WithinAbs(1.0, 0.0));
    CHECK_THAT(similarity(a, RMatrix::Constant(3, 3, -1.0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(similarity(a, RMatrix::Zero(3, 3)), WithinAbs(0.5, 1e-15));
    CHECK_THROWS_AS(similarity(a, RMatrix::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("gauge-aware comparison detects the conjugate twin", "[reconstruction]") {
    TransferMatrix u = random_unitary(3, 55);
    GaugeComparison same = compare_up_to_gauge(u, u);
    CHECK_THAT(same.fid, WithinAbs(1.0, 1e-12));
    CHECK_FALSE(same.conjugated);

    GaugeComparison twin = compare_up_to_gauge(u, u.conjugated());
    CHECK_THAT(twin.fid, WithinAbs(1.0, 1e-12));
    CHECK(twin.conjugated);

    // gauge phases on either side do not reduce the score
    CMatrix d = CMatrix::Identity(3, 3);
    d(1, 1) = std::polar(1.0, 0.7);
    d(2, 2) = std::polar(1.0, -1.9);
    GaugeComparison gauged = compare_up_to_gauge(u, TransferMatrix(d * u.entries()));
    CHECK_THAT(gauged.fid, WithinAbs(1.0, 1e-12));
}

TEST_CASE("phase-only reconstruction recovers a known device exactly", "[reconstruction]") {
    TransferMatrix u = compose_unbiased(ideal_tritter(), {0.383 * M_PI, -0.596 * M_PI});
    VisibilityMatrix vis = visibility_matrix(u);

    OptimizerConfig cfg;
    cfg.restarts = 8;
    cfg.stage = Stage::phases_only;
    ReconstructionResult res = reconstruct_direct(vis, amp_of(u), cfg);

    CHECK(res.converged);
    CHECK(res.objective <= 100.0 * cfg.ftol);
    CHECK(res.restarts_used == 81 + 8);
    CHECK(res.target_entries_used == 9);
    CHECK_THAT(res.similarity, WithinAbs(1.0, 1e-6));
    CHECK(compare_up_to_gauge(res.matrix, u).fid >= 0.9999);

    // phases_only must not touch the measured magnitudes
    CHECK((res.matrix.entries().cwiseAbs() - u.entries().cwiseAbs()).maxCoeff() <= 1e-12);
}

TEST_CASE("two-stage reconstruction round-trips a random unitary", "[reconstruction]") {
    TransferMatrix u = random_unitary(3, 123);
    OptimizerConfig cfg;
    cfg.restarts = 8;
    cfg.stage = Stage::both;
    ReconstructionResult res = reconstruct_direct(visibility_matrix(u), amp_of(u), cfg);

    CHECK(res.converged);
    CHECK(res.restarts_used == 81 + 8 + 1);  // phase starts plus one full refine
    CHECK(compare_up_to_gauge(res.matrix, u).fid >= 0.99);

    // the refined magnitudes stay row-normalized
    for (int k = 0; k < 3; ++k)
        CHECK_THAT(res.matrix.entries().row(k).norm(), WithinAbs(1.0, 1e-9));
}

TEST_CASE("all-parameter single-stage search reproduces the visibilities", "[reconstruction]") {
    TransferMatrix u = compose_unbiased(ideal_tritter(), {0.25 * M_PI, 0.75 * M_PI});
    OptimizerConfig cfg;
    cfg.restarts = 1;
    cfg.stage = Stage::full;
    cfg.max_iters = 4000;
    ReconstructionResult res = reconstruct_direct(visibility_matrix(u), amp_of(u), cfg);
    CHECK(res.restarts_used == 81 + 1);
    CHECK(res.converged);
    CHECK(res.objective <= 1e-8);
    CHECK(similarity(visibility_matrix(res.matrix), visibility_matrix(u)) >= 1.0 - 1e-5);
    // visibilities alone underdetermine the magnitudes; the fit stays near the
    // device only because it starts at the measured amplitudes
    CHECK(compare_up_to_gauge(res.matrix, u).fid >= 0.95);
}

TEST_CASE("undefined target entries are excluded from the fit", "[reconstruction]") {
    TransferMatrix u = compose_unbiased(ideal_tritter(), {0.5, -1.1});
    VisibilityMatrix vis = visibility_matrix(u);
    vis.undefined[2][1] = true;
    vis.vals(2, 1) = 0.0;

    OptimizerConfig cfg;
    cfg.restarts = 8;
    cfg.stage = Stage::phases_only;
    ReconstructionResult res = reconstruct_direct(vis, amp_of(u), cfg);
    CHECK(res.target_entries_used == 8);
    CHECK(res.converged);
    CHECK(compare_up_to_gauge(res.matrix, u).fid >= 0.999);
}

TEST_CASE("a target with no usable entries fails loudly but finitely", "[reconstruction]") {
    VisibilityMatrix vis;
    vis.vals = RMatrix::Zero(3, 3);
    for (auto& row : vis.undefined)
        for (auto& f : row) f = true;
    ReconstructionResult res = reconstruct_direct(vis, amp_of(ideal_tritter()));
    CHECK_FALSE(res.converged);
    CHECK(res.restarts_used == 0);
    CHECK(res.target_entries_used == 0);
    CHECK(res.objective == 0.0);
}

TEST_CASE("noisy data is reported as non-converged at a strict tolerance", "[reconstruction]") {
    TransferMatrix u = compose_unbiased(ideal_tritter(), {1.2, -0.4});
    VisibilityMatrix vis = visibility_matrix(u);
    vis.vals(0, 0) += 0.15;  // one badly-off measurement

    OptimizerConfig cfg;
    cfg.restarts = 4;
    cfg.stage = Stage::phases_only;
    ReconstructionResult res = reconstruct_direct(vis, amp_of(u), cfg);
    CHECK_FALSE(res.converged);
    CHECK(res.objective > 1e-4);
    CHECK(res.similarity > 0.9);  // the fit itself is still close
}

TEST_CASE("reconstruction input validation", "[reconstruction]") {
    VisibilityMatrix vis = visibility_matrix(ideal_tritter());
    AmplitudeDistribution amp = amp_of(ideal_tritter());

    AmplitudeDistribution neg = amp;
    neg.probs(1, 1) = -0.1;
    CHECK_THROWS_AS(reconstruct_direct(vis, neg), std::invalid_argument);

    AmplitudeDistribution wide;
    wide.probs = RMatrix::Zero(3, 4);
    CHECK_THROWS_AS(reconstruct_direct(vis, wide), DimensionMismatch);

    OptimizerConfig bad;
    bad.restarts = 0;
    CHECK_THROWS_AS(reconstruct_direct(vis, amp, bad), std::invalid_argument);
    bad = OptimizerConfig{};
    bad.ftol = 0.0;
    CHECK_THROWS_AS(reconstruct_direct(vis, amp, bad), std::invalid_argument);
}

TEST_CASE("composed-device phase fit recovers injected mirror phases", "[reconstruction]") {
    TransferMatrix f = ideal_tritter();
    PhaseShifts truth{0.3 * M_PI, -0.6 * M_PI};
    VisibilityMatrix target = visibility_matrix(compose_unbiased(f, truth));

    OptimizerConfig cfg;
    cfg.max_iters = 500;
    ComposedReconstruction fit = reconstruct_composed(f, backward(f), target, cfg);

    CHECK(fit.diagnostics.converged);
    CHECK(fit.diagnostics.objective <= 100.0 * cfg.ftol);
    CHECK(fit.diagnostics.restarts_used == 24 * 24);
    CHECK_THAT(fit.phases.phi1, WithinAbs(truth.phi1, 2e-3));
    CHECK_THAT(fit.phases.phi2, WithinAbs(truth.phi2, 2e-3));

    // the assembled matrix matches the true device up to gauge
    TransferMatrix w_true = compose_unbiased(f, truth);
    CHECK(compare_up_to_gauge(fit.w, w_true).fid >= 0.999);
    CHECK_THAT(similarity(visibility_matrix(fit.w), target), WithinAbs(1.0, 1e-6));
}

TEST_CASE("composed fit weights residuals by inverse variance but reports them unweighted",
          "[reconstruction]") {
    TransferMatrix f = ideal_tritter();
    PhaseShifts truth{0.45 * M_PI, 0.8 * M_PI};
    VisibilityMatrix target = visibility_matrix(compose_unbiased(f, truth));

    // corrupt one entry, then declare it nearly worthless via its sigma
    target.vals(0, 2) += 0.1;
    target.sigma = RMatrix::Constant(3, 3, 1e-3);
    (*target.sigma)(0, 2) = 1e3;

    OptimizerConfig cfg;
    cfg.max_iters = 500;
    ComposedReconstruction fit = reconstruct_composed(f, backward(f), target, cfg);

    CHECK_THAT(fit.phases.phi1, WithinAbs(truth.phi1, 5e-3));
    CHECK_THAT(fit.phases.phi2, WithinAbs(truth.phi2, 5e-3));
    // unweighted objective still sees the corrupted entry
    CHECK_THAT(fit.diagnostics.objective, WithinAbs(0.01, 2e-3));
    CHECK_FALSE(fit.diagnostics.converged);  // honest: the data do not fit
}

TEST_CASE("composed fit with no usable entries", "[reconstruction]") {
    VisibilityMatrix vis;
    vis.vals = RMatrix::Zero(3, 3);
    for (auto& row : vis.undefined)
        for (auto& f : row) f = true;
    TransferMatrix f = ideal_tritter();
    ComposedReconstruction fit = reconstruct_composed(f, backward(f), vis);
    CHECK_FALSE(fit.diagnostics.converged);
    CHECK(fit.diagnostics.restarts_used == 0);
    CHECK(fit.phases.phi1 == 0.0);
    CHECK(fit.phases.phi2 == 0.0);
}

TEST_CASE("mirror phases normalize into the principal interval", "[reconstruction]") {
    PhaseShifts ph{2.5 * M_PI, -3.0 * M_PI};
    PhaseShifts c = ph.canonical();
    CHECK_THAT(c.phi1, WithinAbs(0.5 * M_PI, 1e-12));
    CHECK_THAT(c.phi2, WithinAbs(M_PI, 1e-12));
}
