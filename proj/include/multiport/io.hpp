#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "multiport/counts.hpp"
#include "multiport/interference.hpp"
#include "multiport/matrix.hpp"
#include "multiport/reconstruction.hpp"

namespace multiport::io {

using json = nlohmann::ordered_json;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PhaseFormatError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline constexpr const char* kMatrixConvention = "row=output,col=input";
inline constexpr double kMeasuredSumTol = 0.05;

// ---------------------------------------------------------------------------
// primitives

/// FNV-1a 64-bit content digest, rendered as "fnv1a64:<16 hex digits>".
inline std::string fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out = "fnv1a64:";
    for (int shift = 60; shift >= 0; shift -= 4) out += hex[(h >> shift) & 0xf];
    return out;
}

/// Phases are accepted either as plain radians ("1.2") or in pi units with a
/// "pi" suffix ("0.383pi", "-0.596pi", "pi"), matching how such phases are
/// usually quoted.
inline double parse_phase(const std::string& text) {
    std::string s = text;
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    if (s.empty()) throw PhaseFormatError("empty phase literal");

    bool pi = false;
    if (s.size() >= 2) {
        char a = static_cast<char>(std::tolower(static_cast<unsigned char>(s[s.size() - 2])));
        char b = static_cast<char>(std::tolower(static_cast<unsigned char>(s[s.size() - 1])));
        if (a == 'p' && b == 'i') {
            pi = true;
            s.erase(s.size() - 2);
        }
    }
    double factor = 1.0;
    if (pi && (s.empty() || s == "+" || s == "-")) {
        factor = s == "-" ? -1.0 : 1.0;
    } else {
        std::size_t pos = 0;
        try {
            factor = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw PhaseFormatError("bad phase literal: '" + text + "'");
        }
        if (pos != s.size()) throw PhaseFormatError("bad phase literal: '" + text + "'");
    }
    return pi ? factor * M_PI : factor;
}

inline std::string render(const json& j) { return j.dump(2) + "\n"; }

inline json parse(const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError(origin + ": not valid JSON");
    return j;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("error reading " + path);
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << bytes;
    if (!out.good()) throw IoError("error writing " + path);
}

inline json load_file(const std::string& path) { return parse(read_file(path), path); }

// ---------------------------------------------------------------------------
// field helpers

namespace detail {

inline const json& field(const json& j, const char* key, const std::string& origin) {
    auto it = j.find(key);
    if (it == j.end()) throw IoError(origin + ": missing field '" + key + "'");
    return *it;
}

inline RMatrix real_grid(const json& j, const std::string& origin) {
    if (!j.is_array() || j.empty()) throw IoError(origin + ": expected an array of rows");
    const auto rows = j.size();
    const auto cols = j.front().size();
    RMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const json& row = j[r];
        if (!row.is_array() || row.size() != cols)
            throw DimensionMismatch(origin + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!row[c].is_number()) throw IoError(origin + ": non-numeric entry");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
        }
    }
    if (!m.allFinite()) throw IoError(origin + ": non-finite entry");
    return m;
}

inline json grid_json(const RMatrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void check_pairs(const json& j, const char* key, const std::string& origin) {
    auto it = j.find(key);
    if (it == j.end()) return;
    static const std::vector<std::string> want{"01", "02", "12"};
    if (*it != json(want)) throw IoError(origin + ": " + key + " must be [\"01\",\"02\",\"12\"]");
}

inline json sigma_block_json(const SigmaBlock& s) {
    json j;
    j["mag"] = grid_json(s.mag);
    j["phase"] = grid_json(s.phase);
    return j;
}

inline SigmaBlock sigma_block(const json& j, const std::string& origin) {
    SigmaBlock s{real_grid(field(j, "mag", origin), origin + ".mag"),
                 real_grid(field(j, "phase", origin), origin + ".phase")};
    if ((s.mag.array() < 0.0).any() || (s.phase.array() < 0.0).any())
        throw IoError(origin + ": sigma entries must be >= 0");
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// transfer matrices

inline json matrix_to_json(const TransferMatrix& u, const SigmaBlock* sigma = nullptr) {
    json j;
    j["dim"] = u.dim();
    j["convention"] = kMatrixConvention;
    json rows = json::array();
    for (int r = 0; r < u.dim(); ++r) {
        json row = json::array();
        for (int c = 0; c < u.dim(); ++c) {
            json e;
            e["re"] = u(r, c).real();
            e["im"] = u(r, c).imag();
            row.push_back(std::move(e));
        }
        rows.push_back(std::move(row));
    }
    j["entries"] = std::move(rows);
    if (sigma) j["sigma"] = detail::sigma_block_json(*sigma);
    return j;
}

struct LoadedMatrix {
    TransferMatrix matrix;
    std::optional<SigmaBlock> sigma;
};

inline LoadedMatrix matrix_from_json(const json& j, const std::string& origin,
                                     bool transpose = false) {
    const json& jd = detail::field(j, "dim", origin);
    if (!jd.is_number_integer()) throw IoError(origin + ": dim must be an integer");
    const int dim = jd.get<int>();
    if (dim < 2) throw DimensionMismatch(origin + ": dim must be >= 2");
    if (auto it = j.find("convention"); it != j.end() && *it != json(kMatrixConvention))
        throw IoError(origin + ": unsupported convention (expected '" +
                      std::string(kMatrixConvention) + "'); use the transpose option instead");
    const json& rows = detail::field(j, "entries", origin);
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim)
        throw DimensionMismatch(origin + ": expected " + std::to_string(dim) + " rows");
    CMatrix m(dim, dim);
    for (int r = 0; r < dim; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != dim)
            throw DimensionMismatch(origin + ": expected " + std::to_string(dim) + " columns");
        for (int c = 0; c < dim; ++c) {
            const json& e = row[static_cast<std::size_t>(c)];
            if (!e.is_object() || !e.contains("re") || !e.contains("im"))
                throw IoError(origin + ": entries must be {\"re\", \"im\"} objects");
            m(r, c) = Complex(e["re"].get<double>(), e["im"].get<double>());
        }
    }
    if (!m.allFinite()) throw IoError(origin + ": non-finite entry");
    if (transpose) m.transposeInPlace();
    LoadedMatrix out{TransferMatrix(std::move(m)), std::nullopt};
    if (auto it = j.find("sigma"); it != j.end())
        out.sigma = detail::sigma_block(*it, origin + ".sigma");
    return out;
}

// ---------------------------------------------------------------------------
// visibility matrices

inline json visibility_to_json(const VisibilityMatrix& v) {
    json j;
    j["input_pairs"] = {"01", "02", "12"};
    j["output_pairs"] = {"01", "02", "12"};
    j["vals"] = detail::grid_json(v.vals);
    if (v.sigma) j["sigma"] = detail::grid_json(*v.sigma);
    if (v.any_undefined()) {
        json rows = json::array();
        for (int r = 0; r < 3; ++r) {
            json row = json::array();
            for (int c = 0; c < 3; ++c) row.push_back(v.undefined[r][c]);
            rows.push_back(std::move(row));
        }
        j["undefined"] = std::move(rows);
    }
    return j;
}

inline VisibilityMatrix visibility_from_json(const json& j, const std::string& origin,
                                             bool transpose = false) {
    detail::check_pairs(j, "input_pairs", origin);
    detail::check_pairs(j, "output_pairs", origin);
    VisibilityMatrix v;
    v.vals = detail::real_grid(detail::field(j, "vals", origin), origin + ".vals");
    if (v.vals.rows() != 3 || v.vals.cols() != 3)
        throw DimensionMismatch(origin + ": vals must be 3x3");
    if (auto it = j.find("sigma"); it != j.end()) {
        RMatrix s = detail::real_grid(*it, origin + ".sigma");
        if (s.rows() != 3 || s.cols() != 3) throw DimensionMismatch(origin + ": sigma must be 3x3");
        if ((s.array() < 0.0).any()) throw IoError(origin + ": sigma entries must be >= 0");
        v.sigma = std::move(s);
    }
    if (auto it = j.find("undefined"); it != j.end()) {
        if (!it->is_array() || it->size() != 3) throw DimensionMismatch(origin + ": undefined must be 3x3");
        for (int r = 0; r < 3; ++r) {
            const json& row = (*it)[static_cast<std::size_t>(r)];
            if (!row.is_array() || row.size() != 3)
                throw DimensionMismatch(origin + ": undefined must be 3x3");
            for (int c = 0; c < 3; ++c) {
                if (!row[static_cast<std::size_t>(c)].is_boolean())
                    throw IoError(origin + ": undefined entries must be booleans");
                v.undefined[r][c] = row[static_cast<std::size_t>(c)].get<bool>();
            }
        }
    }
    if (transpose) {
        v.vals.transposeInPlace();
        if (v.sigma) v.sigma->transposeInPlace();
        for (int r = 0; r < 3; ++r)
            for (int c = r + 1; c < 3; ++c) std::swap(v.undefined[r][c], v.undefined[c][r]);
    }
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            if (std::abs(v.vals(r, c)) > 1.0 + 1e-9)
                throw IoError(origin + ": visibility outside [-1, 1]");
            if (v.undefined[r][c] && v.vals(r, c) != 0.0)
                throw IoError(origin + ": undefined entries must hold the flagged zero");
        }
    return v;
}

// ---------------------------------------------------------------------------
// amplitude distributions

inline json amplitude_to_json(const AmplitudeDistribution& a) {
    json j;
    j["dim"] = a.dim();
    j["convention"] = kMatrixConvention;
    j["axis"] = a.axis == NormAxis::col ? "col" : "row";
    j["probs"] = detail::grid_json(a.probs);
    if (a.sigma) j["sigma"] = detail::grid_json(*a.sigma);
    return j;
}

/// Loads a probability grid and determines which axis is normalized. Values
/// are validated against the measured-data tolerance but never rescaled, so
/// a load/write cycle preserves the file exactly.
inline AmplitudeDistribution amplitude_from_json(const json& j, const std::string& origin,
                                                 bool transpose = false) {
    AmplitudeDistribution a;
    a.probs = detail::real_grid(detail::field(j, "probs", origin), origin + ".probs");
    if (a.probs.rows() != a.probs.cols() || a.probs.rows() < 2)
        throw DimensionMismatch(origin + ": probs must be square with dim >= 2");
    if (auto it = j.find("dim");
        it != j.end() && it->get<int>() != static_cast<int>(a.probs.rows()))
        throw DimensionMismatch(origin + ": dim does not match probs shape");
    if (auto it = j.find("convention"); it != j.end() && *it != json(kMatrixConvention))
        throw IoError(origin + ": unsupported convention (expected '" +
                      std::string(kMatrixConvention) + "'); use the transpose option instead");
    if ((a.probs.array() < -1e-9).any() || (a.probs.array() > 1.0 + 1e-9).any())
        throw IoError(origin + ": probabilities outside [0, 1]");
    if (auto it = j.find("sigma"); it != j.end()) {
        RMatrix s = detail::real_grid(*it, origin + ".sigma");
        if (s.rows() != a.probs.rows() || s.cols() != a.probs.cols())
            throw DimensionMismatch(origin + ": sigma shape mismatch");
        if ((s.array() < 0.0).any()) throw IoError(origin + ": sigma entries must be >= 0");
        a.sigma = std::move(s);
    }
    if (transpose) {
        a.probs.transposeInPlace();
        if (a.sigma) a.sigma->transposeInPlace();
    }

    double col_dev = (a.probs.colwise().sum().array() - 1.0).abs().maxCoeff();
    double row_dev = (a.probs.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (auto it = j.find("axis"); it != j.end()) {
        if (*it == json("col"))
            a.axis = NormAxis::col;
        else if (*it == json("row"))
            a.axis = NormAxis::row;
        else
            throw IoError(origin + ": axis must be \"col\" or \"row\"");
        if (transpose) a.axis = a.axis == NormAxis::col ? NormAxis::row : NormAxis::col;
    } else {
        a.axis = col_dev <= row_dev ? NormAxis::col : NormAxis::row;
    }
    double dev = a.axis == NormAxis::col ? col_dev : row_dev;
    if (dev > kMeasuredSumTol)
        throw IoError(origin + ": probabilities are not normalized along the " +
                      (a.axis == NormAxis::col ? std::string("col") : std::string("row")) +
                      " axis (max deviation " + std::to_string(dev) + ")");
    return a;
}

// ---------------------------------------------------------------------------
// count tables

inline json counts_to_json(const CountTable& t) {
    auto grid = [](const std::array<std::array<std::int64_t, 3>, 3>& g) {
        json rows = json::array();
        for (const auto& gr : g) {
            json row = json::array();
            for (std::int64_t v : gr) row.push_back(v);
            rows.push_back(std::move(row));
        }
        return rows;
    };
    json j;
    j["singles_convention"] = "row=input,col=output";
    j["singles"] = grid(t.singles);
    j["input_pairs"] = {"01", "02", "12"};
    j["output_pairs"] = {"01", "02", "12"};
    j["distinguishable"] = grid(t.dist);
    j["indistinguishable"] = grid(t.indist);
    return j;
}

inline CountTable counts_from_json(const json& j, const std::string& origin) {
    detail::check_pairs(j, "input_pairs", origin);
    detail::check_pairs(j, "output_pairs", origin);
    auto grid = [&](const char* key) {
        const json& rows = detail::field(j, key, origin);
        if (!rows.is_array() || rows.size() != 3)
            throw DimensionMismatch(origin + ": " + key + " must be 3x3");
        std::array<std::array<std::int64_t, 3>, 3> out{};
        for (int r = 0; r < 3; ++r) {
            const json& row = rows[static_cast<std::size_t>(r)];
            if (!row.is_array() || row.size() != 3)
                throw DimensionMismatch(origin + ": " + key + " must be 3x3");
            for (int c = 0; c < 3; ++c) {
                const json& e = row[static_cast<std::size_t>(c)];
                if (!e.is_number_integer())
                    throw IoError(origin + ": " + key + " entries must be integers");
                std::int64_t v = e.get<std::int64_t>();
                if (v < 0) throw IoError(origin + ": " + key + " entries must be >= 0");
                out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = v;
            }
        }
        return out;
    };
    CountTable t;
    t.singles = grid("singles");
    t.dist = grid("distinguishable");
    t.indist = grid("indistinguishable");
    return t;
}

// ---------------------------------------------------------------------------
// phases, results, fringes, reports

inline json phases_to_json(const PhaseShifts& ph, const PhaseShifts* sigma = nullptr) {
    json j;
    j["phi1"] = ph.phi1;
    j["phi2"] = ph.phi2;
    if (sigma) {
        json s;
        s["phi1"] = sigma->phi1;
        s["phi2"] = sigma->phi2;
        j["sigma"] = std::move(s);
    }
    return j;
}

inline PhaseShifts phases_from_json(const json& j, const std::string& origin) {
    const json& p1 = detail::field(j, "phi1", origin);
    const json& p2 = detail::field(j, "phi2", origin);
    if (!p1.is_number() || !p2.is_number()) throw IoError(origin + ": phi1/phi2 must be numbers");
    PhaseShifts ph{p1.get<double>(), p2.get<double>()};
    if (!std::isfinite(ph.phi1) || !std::isfinite(ph.phi2))
        throw IoError(origin + ": non-finite phase");
    return ph;
}

inline json result_to_json(const ReconstructionResult& r) {
    json j;
    j["matrix"] = matrix_to_json(r.matrix);
    j["objective"] = r.objective;
    j["similarity"] = r.similarity;
    j["converged"] = r.converged;
    j["restarts_used"] = r.restarts_used;
    j["conjugated"] = r.conjugated;
    j["target_entries_used"] = r.target_entries_used;
    if (r.sigma) j["sigma"] = detail::sigma_block_json(*r.sigma);
    return j;
}

inline json composed_to_json(const ComposedReconstruction& r) {
    json j;
    j["phi1"] = r.phases.phi1;
    j["phi2"] = r.phases.phi2;
    json rest = result_to_json(r.diagnostics);
    for (auto& [k, v] : rest.items()) j[k] = v;
    return j;
}

/// CSV rows for a delay scan. `counts` holds one integer per point (sampled
/// or rounded coincidences); callers supply it so sampling policy stays out
/// of the formatter.
inline std::string fringe_to_csv(const std::vector<FringePoint>& pts,
                                 const std::vector<std::int64_t>& counts) {
    if (pts.size() != counts.size())
        throw DimensionMismatch("fringe_to_csv: counts length mismatch");
    std::ostringstream out;
    out << "delay_um,expected,counts\n";
    json num;  // reuse the JSON double formatter for stable shortest output
    for (std::size_t i = 0; i < pts.size(); ++i) {
        num = pts[i].delay_um;
        out << num.dump() << ",";
        num = pts[i].expected;
        out << num.dump() << "," << counts[i] << "\n";
    }
    return out.str();
}

struct RunReport {
    std::string command;
    json inputs = json::object();  // path -> content digest
    json metrics = json::object();
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
};

/// Everything except wall_ms is reproducible: rerunning the same command on
/// the same inputs with the same seed yields identical command, inputs and
/// metrics fields.
inline json report_to_json(const RunReport& r) {
    json j;
    j["command"] = r.command;
    j["inputs"] = r.inputs;
    j["metrics"] = r.metrics;
    j["seed"] = r.seed;
    j["wall_ms"] = r.wall_ms;
    return j;
}

}  // namespace multiport::io
