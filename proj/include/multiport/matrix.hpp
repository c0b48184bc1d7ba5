#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace multiport {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kUnitaryTol = 1e-9;
inline constexpr double kGaugeTol = 1e-12;

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A border entry needed for gauge fixing has (numerically) zero magnitude,
/// so its phase is undefined.
struct DegenerateGauge : std::runtime_error {
    DegenerateGauge(int row_, int col_)
        : std::runtime_error("degenerate gauge: entry (" + std::to_string(row_) + "," +
                             std::to_string(col_) + ") has magnitude below 1e-12"),
          row(row_), col(col_) {}
    int row;
    int col;
};

/// Wrap an angle to the canonical range (-pi, pi].
inline double wrap_angle(double a) {
    double y = std::fmod(a + M_PI, 2.0 * M_PI);
    if (y <= 0.0) y += 2.0 * M_PI;
    return y - M_PI;
}

/// Mirror phases of modes 1 and 2, in radians. Mode 0 is the phase reference
/// and is fixed at zero.
struct PhaseShifts {
    double phi1 = 0.0;
    double phi2 = 0.0;

    PhaseShifts canonical() const { return {wrap_angle(phi1), wrap_angle(phi2)}; }
};

/// Diagonal phase freedom removed by real-bordering: one phase per output
/// port (left) and one per input port except port 0 (right).
struct GaugePhases {
    std::vector<double> left;
    std::vector<double> right;
};

/// Complex transfer matrix of a linear-optical device.
///
/// Index convention is entry(k, i) = amplitude from input port i to output
/// port k, i.e. row = output, column = input. All serialized forms state
/// this convention explicitly.
///
/// The `unitary` flag marks matrices constructed to be unitary (ideal
/// devices, compositions of flagged inputs, random unitaries); matrices
/// loaded from measured or reconstructed data carry no flag and may deviate
/// from unitarity.
class TransferMatrix {
  public:
    explicit TransferMatrix(CMatrix entries, bool unitary = false)
        : m_(std::move(entries)), unitary_(unitary) {
        if (m_.rows() != m_.cols() || m_.rows() < 2)
            throw DimensionMismatch("transfer matrix must be square with dim >= 2");
        if (!m_.allFinite())
            throw std::invalid_argument("transfer matrix entries must be finite");
        if (unitary_ && unitarity_deviation() > kUnitaryTol)
            throw std::invalid_argument("matrix flagged unitary deviates from unitarity by more than 1e-9");
    }

    static TransferMatrix identity(int dim) {
        return TransferMatrix(CMatrix::Identity(dim, dim), true);
    }

    int dim() const { return static_cast<int>(m_.rows()); }
    const CMatrix& entries() const { return m_; }
    Complex operator()(int out, int in) const { return m_(out, in); }
    bool unitary_hint() const { return unitary_; }

    /// Entrywise max of |U†U - I|.
    double unitarity_deviation() const {
        CMatrix d = m_.adjoint() * m_ - CMatrix::Identity(m_.rows(), m_.cols());
        return d.cwiseAbs().maxCoeff();
    }

    TransferMatrix conjugated() const { return TransferMatrix(m_.conjugate(), unitary_); }

  private:
    CMatrix m_;
    bool unitary_;
};

/// Ideal symmetric 3x3 beam splitter: the 3-mode DFT matrix.
inline TransferMatrix ideal_tritter() {
    const Complex w = std::polar(1.0, 2.0 * M_PI / 3.0);
    const Complex wb = std::conj(w);
    CMatrix m(3, 3);
    m << 1, 1, 1,
         1, w, wb,
         1, wb, w;
    return TransferMatrix(m / std::sqrt(3.0), true);
}

/// diag(1, e^{i phi1}, e^{i phi2}).
inline TransferMatrix phase_matrix(const PhaseShifts& ph) {
    CMatrix m = CMatrix::Zero(3, 3);
    m(0, 0) = 1.0;
    m(1, 1) = std::polar(1.0, ph.phi1);
    m(2, 2) = std::polar(1.0, ph.phi2);
    return TransferMatrix(m, true);
}

/// Backward propagation through a device is the plain transpose of the
/// forward matrix (no conjugation): amplitude(in j backward -> out m) equals
/// amplitude(in m forward -> out j) by reciprocity.
inline TransferMatrix backward(const TransferMatrix& uf) {
    return TransferMatrix(uf.entries().transpose(), uf.unitary_hint());
}

namespace detail {
inline void require_dim(const TransferMatrix& u, int dim, const char* what) {
    if (u.dim() != dim)
        throw DimensionMismatch(std::string(what) + ": expected " + std::to_string(dim) + "x" +
                                std::to_string(dim) + " matrix, got dim " + std::to_string(u.dim()));
}
}  // namespace detail

/// Input and output ports distinct: two passes through the same device with
/// phase shifts in between (expanded Mach-Zehnder).
inline TransferMatrix compose_biased(const TransferMatrix& uf, const PhaseShifts& ph) {
    detail::require_dim(uf, 3, "compose_biased");
    CMatrix m = uf.entries() * phase_matrix(ph).entries() * uf.entries();
    return TransferMatrix(std::move(m), uf.unitary_hint());
}

/// Ports serve as both input and output: forward pass, mirror phases, then
/// the same device traversed backward (expanded Michelson).
inline TransferMatrix compose_unbiased(const TransferMatrix& uf, const PhaseShifts& ph) {
    detail::require_dim(uf, 3, "compose_unbiased");
    CMatrix m = uf.entries().transpose() * phase_matrix(ph).entries() * uf.entries();
    return TransferMatrix(std::move(m), uf.unitary_hint());
}

/// ub . Phi . uf with independently supplied backward matrix (which need not
/// equal uf^T when both were measured separately).
inline TransferMatrix compose_general(const TransferMatrix& ub, const PhaseShifts& ph,
                                      const TransferMatrix& uf) {
    detail::require_dim(ub, 3, "compose_general");
    detail::require_dim(uf, 3, "compose_general");
    CMatrix m = ub.entries() * phase_matrix(ph).entries() * uf.entries();
    return TransferMatrix(std::move(m), ub.unitary_hint() && uf.unitary_hint());
}

/// |Tr(a^dagger b)| / dim.
inline double fidelity(const TransferMatrix& a, const TransferMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("fidelity: dimension mismatch");
    Complex tr = (a.entries().adjoint() * b.entries()).trace();
    return std::abs(tr) / static_cast<double>(a.dim());
}

struct RealBordered {
    TransferMatrix matrix;
    GaugePhases gauge;
};

/// Canonical gauge representative: diagonal phase matrices on both sides are
/// chosen so that row 0 and column 0 become real and non-negative. The
/// first right phase is fixed to zero, so the left phases are
///   left[k]  = -arg(u(k,0))
/// and the remaining right phases
///   right[i] = -arg(u(0,i)) - left[0],  i >= 1.
/// Making the border non-negative (not merely real) removes the residual
/// sign freedom and yields a unique representative.
inline RealBordered real_border(const TransferMatrix& u) {
    const int n = u.dim();
    const CMatrix& m = u.entries();
    for (int k = 0; k < n; ++k)
        if (std::abs(m(k, 0)) < kGaugeTol) throw DegenerateGauge(k, 0);
    for (int i = 1; i < n; ++i)
        if (std::abs(m(0, i)) < kGaugeTol) throw DegenerateGauge(0, i);

    GaugePhases g;
    g.left.resize(n);
    g.right.resize(n - 1);
    for (int k = 0; k < n; ++k) g.left[k] = wrap_angle(-std::arg(m(k, 0)));
    for (int i = 1; i < n; ++i) g.right[i - 1] = wrap_angle(-std::arg(m(0, i)) - g.left[0]);

    CMatrix out(n, n);
    for (int k = 0; k < n; ++k) {
        for (int i = 0; i < n; ++i) {
            double phase = g.left[k] + (i == 0 ? 0.0 : g.right[i - 1]);
            out(k, i) = m(k, i) * std::polar(1.0, phase);
        }
    }
    // border entries are |m| exactly; assign to clear rounding dust
    for (int k = 0; k < n; ++k) out(k, 0) = std::abs(m(k, 0));
    for (int i = 1; i < n; ++i) out(0, i) = std::abs(m(0, i));
    return {TransferMatrix(std::move(out), u.unitary_hint()), std::move(g)};
}

/// Haar-like random unitary: QR of a complex Ginibre matrix with the R
/// diagonal phases folded into Q so the factorization is unique.
/// Deterministic for a given seed.
inline TransferMatrix random_unitary(int dim, std::uint64_t seed) {
    if (dim < 2) throw std::invalid_argument("random_unitary: dim must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix z(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            double re = gauss(rng);
            double im = gauss(rng);
            z(r, c) = Complex(re, im) / std::sqrt(2.0);
        }
    Eigen::HouseholderQR<CMatrix> qr(z);
    CMatrix q = qr.householderQ();
    CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < dim; ++c) {
        Complex d = r(c, c);
        Complex lambda = std::abs(d) > 1e-300 ? d / std::abs(d) : Complex(1.0, 0.0);
        q.col(c) *= lambda;
    }
    return TransferMatrix(std::move(q), true);
}

}  // namespace multiport
