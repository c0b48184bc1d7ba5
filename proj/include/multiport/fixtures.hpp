#pragma once

#include <string>
#include <vector>

#include "multiport/interference.hpp"
#include "multiport/io.hpp"
#include "multiport/matrix.hpp"
#include "multiport/reconstruction.hpp"

// Bundled reference dataset: the published measurement tables and
// reconstructed matrices for one hardware run of a 3-port device, stored
// with exactly the printed digits (3 decimals, phases in pi units). These
// are data, not derived values; every acceptance check runs against them.

namespace multiport::fixtures {

namespace detail {

inline RMatrix grid3(const double (&v)[3][3]) {
    RMatrix m(3, 3);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = v[r][c];
    return m;
}

inline RMatrix pi_grid3(const double (&v)[3][3]) { return grid3(v) * M_PI; }

/// Entry (k,i) = mag[k][i] * e^{i pi phase_pi[k][i]}.
inline TransferMatrix magphase(const double (&mag)[3][3], const double (&phase_pi)[3][3]) {
    CMatrix m(3, 3);
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 3; ++i) m(k, i) = std::polar(mag[k][i], phase_pi[k][i] * M_PI);
    return TransferMatrix(std::move(m));
}

}  // namespace detail

struct MatrixFixture {
    TransferMatrix matrix;
    SigmaBlock sigma;
};

struct PhasesFixture {
    PhaseShifts value;
    PhaseShifts sigma;
};

/// v_m: measured two-photon visibility matrix of the assembled multiport.
inline VisibilityMatrix measured_visibility() {
    VisibilityMatrix v;
    v.vals = detail::grid3({{-0.176, 0.455, 0.164}, {0.509, 0.222, -0.210}, {0.217, -0.06, 0.450}});
    v.sigma = detail::grid3({{0.061, 0.067, 0.015}, {0.083, 0.018, 0.049}, {0.019, 0.046, 0.055}});
    return v;
}

/// u_m: measured single-photon amplitude distribution of the assembled
/// multiport. The printed grid is row-normalized.
inline AmplitudeDistribution measured_amplitude() {
    AmplitudeDistribution a;
    a.probs = detail::grid3({{0.220, 0.131, 0.648}, {0.150, 0.610, 0.241}, {0.679, 0.190, 0.131}});
    a.sigma = detail::grid3({{0.001, 0.001, 0.002}, {0.001, 0.002, 0.001}, {0.001, 0.001, 0.001}});
    a.axis = NormAxis::row;
    return a;
}

/// v: transfer matrix recovered directly from v_m and u_m.
inline MatrixFixture direct_matrix() {
    return {detail::magphase({{0.466, 0.358, 0.807}, {0.382, 0.783, 0.487}, {0.826, 0.433, 0.357}},
                             {{0, 0, 0}, {0, 0.437, -0.694}, {0, -0.682, 0.870}}),
            {detail::grid3({{0.001, 0.002, 0.001}, {0.002, 0.001, 0.001}, {0.001, 0.001, 0.001}}),
             detail::pi_grid3({{0, 0, 0}, {0, 0.028, 0.031}, {0, 0.027, 0.096}})}};
}

/// u_f: transfer matrix of the bare splitter, forward direction.
inline MatrixFixture forward_matrix() {
    return {detail::magphase({{0.579, 0.525, 0.612}, {0.626, 0.598, 0.528}, {0.531, 0.583, 0.594}},
                             {{0, 0, 0}, {0, 0.671, -0.607}, {0, -0.711, 0.706}}),
            {detail::grid3({{0.034, 0.023, 0.023}, {0.019, 0.026, 0.025}, {0.026, 0.027, 0.028}}),
             detail::pi_grid3({{0, 0, 0}, {0, 0.008, 0.008}, {0, 0.007, 0.007}})}};
}

/// u_b: transfer matrix of the bare splitter, backward direction.
inline MatrixFixture backward_matrix() {
    return {detail::magphase({{0.567, 0.602, 0.552}, {0.549, 0.583, 0.590}, {0.603, 0.541, 0.597}},
                             {{0, 0, 0}, {0, 0.654, -0.692}, {0, -0.648, 0.670}}),
            {detail::grid3({{0.026, 0.028, 0.030}, {0.032, 0.033, 0.027}, {0.030, 0.029, 0.025}}),
             detail::pi_grid3({{0, 0, 0}, {0, 0.008, 0.007}, {0, 0.006, 0.005}})}};
}

/// w: composed-model transfer matrix at the fitted mirror phases.
inline MatrixFixture composed_matrix() {
    return {detail::magphase({{0.383, 0.314, 0.903}, {0.314, 0.888, 0.316}, {0.903, 0.265, 0.203}},
                             {{0, 0, 0}, {0, -0.407, -0.722}, {0, -0.662, 0.920}}),
            {detail::grid3({{0.014, 0.012, 0.008}, {0.011, 0.008, 0.015}, {0.009, 0.015, 0.010}}),
             detail::pi_grid3({{0, 0, 0}, {0, 0.024, 0.020}, {0, 0.022, 0.297}})}};
}

/// v_f: measured visibility matrix of the bare splitter, forward direction.
inline VisibilityMatrix forward_visibility() {
    VisibilityMatrix v;
    v.vals = detail::grid3({{0.499, 0.617, 0.323}, {0.213, 0.501, 0.384}, {0.454, 0.155, 0.400}});
    v.sigma = detail::grid3({{0.038, 0.021, 0.025}, {0.028, 0.012, 0.014}, {0.047, 0.023, 0.025}});
    return v;
}

/// u_f2: measured amplitude distribution of the bare splitter, forward.
inline AmplitudeDistribution forward_amplitude() {
    AmplitudeDistribution a;
    a.probs = detail::grid3({{0.348, 0.305, 0.347}, {0.362, 0.331, 0.307}, {0.310, 0.361, 0.329}});
    a.sigma = detail::grid3({{0.017, 0.016, 0.017}, {0.017, 0.016, 0.015}, {0.017, 0.015, 0.016}});
    a.axis = NormAxis::row;
    return a;
}

/// v_b: measured visibility matrix of the bare splitter, backward direction.
inline VisibilityMatrix backward_visibility() {
    VisibilityMatrix v;
    v.vals = detail::grid3({{0.442, 0.417, 0.556}, {0.574, 0.511, 0.427}, {0.450, 0.513, 0.478}});
    v.sigma = detail::grid3({{0.035, 0.014, 0.024}, {0.028, 0.011, 0.021}, {0.040, 0.014, 0.027}});
    return v;
}

/// u_b2: measured amplitude distribution of the bare splitter, backward.
inline AmplitudeDistribution backward_amplitude() {
    AmplitudeDistribution a;
    a.probs = detail::grid3({{0.340, 0.342, 0.318}, {0.312, 0.331, 0.357}, {0.343, 0.317, 0.340}});
    a.sigma = detail::grid3({{0.014, 0.014, 0.017}, {0.015, 0.015, 0.015}, {0.017, 0.015, 0.014}});
    a.axis = NormAxis::row;
    return a;
}

/// phases: fitted mirror phases of the composed model.
inline PhasesFixture fitted_phases() {
    return {{0.383 * M_PI, -0.596 * M_PI}, {0.014 * M_PI, 0.010 * M_PI}};
}

struct Entry {
    const char* name;
    const char* file;
    const char* kind;
    const char* description;
};

inline const std::vector<Entry>& catalog() {
    static const std::vector<Entry> entries{
        {"v_m", "v_m.json", "visibility",
         "measured two-photon visibility matrix of the assembled multiport"},
        {"u_m", "u_m.json", "amplitude",
         "measured single-photon amplitude distribution of the assembled multiport"},
        {"v", "v.json", "matrix",
         "transfer matrix recovered directly from v_m and u_m, with entry spreads"},
        {"u_f", "u_f.json", "matrix",
         "transfer matrix of the bare splitter, forward direction, with entry spreads"},
        {"u_b", "u_b.json", "matrix",
         "transfer matrix of the bare splitter, backward direction, with entry spreads"},
        {"w", "w.json", "matrix",
         "composed-model transfer matrix at the fitted mirror phases, with entry spreads"},
        {"v_f", "v_f.json", "visibility",
         "measured visibility matrix of the bare splitter, forward direction"},
        {"u_f2", "u_f2.json", "amplitude",
         "measured amplitude distribution of the bare splitter, forward direction"},
        {"v_b", "v_b.json", "visibility",
         "measured visibility matrix of the bare splitter, backward direction"},
        {"u_b2", "u_b2.json", "amplitude",
         "measured amplitude distribution of the bare splitter, backward direction"},
        {"phases", "phases.json", "phases",
         "fitted mirror phases of the composed model, with one-sigma spreads"},
    };
    return entries;
}

/// Canonical JSON for a named fixture; unknown names throw IoError.
inline io::json fixture_json(const std::string& name) {
    if (name == "v_m") return io::visibility_to_json(measured_visibility());
    if (name == "u_m") return io::amplitude_to_json(measured_amplitude());
    if (name == "v") {
        MatrixFixture f = direct_matrix();
        return io::matrix_to_json(f.matrix, &f.sigma);
    }
    if (name == "u_f") {
        MatrixFixture f = forward_matrix();
        return io::matrix_to_json(f.matrix, &f.sigma);
    }
    if (name == "u_b") {
        MatrixFixture f = backward_matrix();
        return io::matrix_to_json(f.matrix, &f.sigma);
    }
    if (name == "w") {
        MatrixFixture f = composed_matrix();
        return io::matrix_to_json(f.matrix, &f.sigma);
    }
    if (name == "v_f") return io::visibility_to_json(forward_visibility());
    if (name == "u_f2") return io::amplitude_to_json(forward_amplitude());
    if (name == "v_b") return io::visibility_to_json(backward_visibility());
    if (name == "u_b2") return io::amplitude_to_json(backward_amplitude());
    if (name == "phases") {
        PhasesFixture f = fitted_phases();
        return io::phases_to_json(f.value, &f.sigma);
    }
    throw io::IoError("unknown fixture '" + name + "'");
}

}  // namespace multiport::fixtures
