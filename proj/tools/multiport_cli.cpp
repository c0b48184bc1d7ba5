// multiport: forward-model and reconstruct 3x3 linear-optical transfer
// matrices from the command line.
//
// Exit codes: 0 ok, 2 usage, 3 file/data error, 4 shape mismatch,
// 5 non-convergence (with --strict, or when uncertainty sampling fails).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "multiport/multiport.hpp"

namespace mp = multiport;
using mp::io::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Session {
    mp::io::RunReport report;
    std::string report_path;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    json load(const std::string& path) {
        std::string bytes = mp::io::read_file(path);
        report.inputs[path] = mp::io::fnv1a64(bytes);
        return mp::io::parse(bytes, path);
    }

    mp::TransferMatrix load_matrix(const std::string& spec, bool transpose = false) {
        if (spec == "ideal") return mp::ideal_tritter();
        return mp::io::matrix_from_json(load(spec), spec, transpose).matrix;
    }

    void finish() {
        if (report_path.empty()) return;
        auto dt = std::chrono::steady_clock::now() - t0;
        report.wall_ms = std::chrono::duration<double, std::milli>(dt).count();
        mp::io::write_file(report_path, mp::io::render(mp::io::report_to_json(report)));
    }
};

void write_out(const std::string& path, const json& j) {
    if (path.empty()) return;
    mp::io::write_file(path, mp::io::render(j));
}

std::array<int, 4> parse_pair_spec(const std::string& s) {
    auto bad = [&] { throw UsageError("bad --pair '" + s + "', expected e.g. 01:12"); };
    if (s.size() != 5 || s[2] != ':') bad();
    std::array<int, 4> p{};
    const int idx[4] = {0, 1, 3, 4};
    for (int n = 0; n < 4; ++n) {
        char c = s[static_cast<std::size_t>(idx[n])];
        if (c < '0' || c > '2') bad();
        p[static_cast<std::size_t>(n)] = c - '0';
    }
    if (p[0] == p[1] || p[2] == p[3]) bad();
    return p;
}

mp::Stage parse_stage(const std::string& s) {
    if (s == "phases" || s == "phases_only") return mp::Stage::phases_only;
    if (s == "full") return mp::Stage::full;
    if (s == "both") return mp::Stage::both;
    throw UsageError("bad --stage '" + s + "', expected phases|full|both");
}

double pi_units(double rad) { return rad / M_PI; }

// ---------------------------------------------------------------------------

struct SimulateOpts {
    std::string mode = "unbiased";
    std::string tritter = "ideal";
    std::string ub;
    std::string phi1 = "0";
    std::string phi2 = "0";
    bool do_real_border = false;
    std::string out;
};

int cmd_simulate(Session& s, const SimulateOpts& o) {
    mp::PhaseShifts ph{mp::io::parse_phase(o.phi1), mp::io::parse_phase(o.phi2)};
    mp::TransferMatrix uf = s.load_matrix(o.tritter);

    std::optional<mp::TransferMatrix> composed;
    if (o.mode == "biased") {
        if (!o.ub.empty()) throw UsageError("--ub is only used with --mode general");
        composed = mp::compose_biased(uf, ph);
    } else if (o.mode == "unbiased") {
        if (!o.ub.empty()) throw UsageError("--ub is only used with --mode general");
        composed = mp::compose_unbiased(uf, ph);
    } else if (o.mode == "general") {
        if (o.ub.empty()) throw UsageError("--mode general needs --ub");
        composed = mp::compose_general(s.load_matrix(o.ub), ph, uf);
    } else {
        throw UsageError("bad --mode '" + o.mode + "', expected biased|unbiased|general");
    }

    json out_json;
    if (o.do_real_border) {
        mp::RealBordered rb = mp::real_border(*composed);
        out_json = mp::io::matrix_to_json(rb.matrix);
        json gauge;
        gauge["left"] = rb.gauge.left;
        gauge["right"] = rb.gauge.right;
        s.report.metrics["gauge"] = gauge;
    } else {
        out_json = mp::io::matrix_to_json(*composed);
    }
    double dev = composed->unitarity_deviation();
    s.report.metrics["mode"] = o.mode;
    s.report.metrics["phi1"] = ph.phi1;
    s.report.metrics["phi2"] = ph.phi2;
    s.report.metrics["unitarity_deviation"] = dev;
    write_out(o.out, out_json);
    std::cout << "unitarity deviation: " << dev << "\n";
    if (!o.out.empty()) std::cout << "wrote " << o.out << "\n";
    return 0;
}

struct VisibilityOpts {
    std::string matrix;
    std::string out;
    std::string amp_out;
};

int cmd_visibility(Session& s, const VisibilityOpts& o) {
    mp::TransferMatrix u = s.load_matrix(o.matrix);
    mp::VisibilityMatrix v = mp::visibility_matrix(u);
    mp::AmplitudeDistribution a = mp::amplitude_distribution(u);
    int undefined = 0;
    for (const auto& row : v.undefined)
        for (bool b : row) undefined += b ? 1 : 0;
    s.report.metrics["undefined_entries"] = undefined;
    write_out(o.out, mp::io::visibility_to_json(v));
    write_out(o.amp_out, mp::io::amplitude_to_json(a));
    std::cout << "visibility range: [" << v.vals.minCoeff() << ", " << v.vals.maxCoeff() << "]"
              << (undefined ? " (" + std::to_string(undefined) + " undefined)" : "") << "\n";
    if (!o.out.empty()) std::cout << "wrote " << o.out << "\n";
    if (!o.amp_out.empty()) std::cout << "wrote " << o.amp_out << "\n";
    return 0;
}

struct ReconstructOpts {
    std::string vis;
    std::string amp;
    std::string uf;
    std::string ub;
    mp::OptimizerConfig cfg;
    std::string stage = "both";
    bool strict = false;
    bool transpose = false;
    int mc_samples = 0;
    std::string mc_stage = "phases";
    double mc_ftol = 1e-2;
    std::string out;
};

int cmd_reconstruct(Session& s, const ReconstructOpts& o) {
    mp::OptimizerConfig cfg = o.cfg;
    cfg.stage = parse_stage(o.stage);
    s.report.seed = cfg.seed;

    mp::VisibilityMatrix target = mp::io::visibility_from_json(s.load(o.vis), o.vis, o.transpose);

    const bool composed = !o.uf.empty() || !o.ub.empty();
    if (composed && (o.uf.empty() || o.ub.empty()))
        throw UsageError("composed mode needs both --uf and --ub");
    if (composed && !o.amp.empty())
        throw UsageError("--amp is for direct mode; --uf/--ub select composed mode");
    if (!composed && o.amp.empty()) throw UsageError("direct mode needs --vis and --amp");

    json result;
    bool converged = false;
    if (composed) {
        if (o.mc_samples > 0)
            throw UsageError("--mc-samples applies to direct reconstruction only");
        mp::ComposedReconstruction rec =
            mp::reconstruct_composed(s.load_matrix(o.uf, o.transpose),
                                     s.load_matrix(o.ub, o.transpose), target, cfg);
        result = mp::io::composed_to_json(rec);
        converged = rec.diagnostics.converged;
        s.report.metrics["phi1"] = rec.phases.phi1;
        s.report.metrics["phi2"] = rec.phases.phi2;
        s.report.metrics["phi1_pi"] = pi_units(rec.phases.phi1);
        s.report.metrics["phi2_pi"] = pi_units(rec.phases.phi2);
        s.report.metrics["objective"] = rec.diagnostics.objective;
        s.report.metrics["similarity"] = rec.diagnostics.similarity;
        s.report.metrics["converged"] = converged;
        std::cout << "phi1 = " << pi_units(rec.phases.phi1) << "pi, phi2 = "
                  << pi_units(rec.phases.phi2) << "pi\n";
        std::cout << "objective " << rec.diagnostics.objective << ", similarity "
                  << rec.diagnostics.similarity << ", converged "
                  << (converged ? "yes" : "no") << "\n";
    } else {
        mp::AmplitudeDistribution amp =
            mp::io::amplitude_from_json(s.load(o.amp), o.amp, o.transpose);
        mp::ReconstructionResult rec = mp::reconstruct_direct(target, amp, cfg);
        if (o.mc_samples > 0) {
            if (!target.sigma) throw mp::io::IoError(o.vis + ": no sigma block, cannot sample");
            if (!amp.sigma) throw mp::io::IoError(o.amp + ": no sigma block, cannot sample");
            if (o.mc_samples < 10) throw UsageError("--mc-samples must be >= 10");
            mp::OptimizerConfig mc_cfg = cfg;
            mc_cfg.stage = parse_stage(o.mc_stage);
            mc_cfg.ftol = o.mc_ftol;
            mp::UncertaintyEstimate est =
                mp::estimate_uncertainty(target, amp, mc_cfg, o.mc_samples);
            rec.sigma = est.sigma;
            s.report.metrics["mc_samples"] = est.samples;
            s.report.metrics["mc_converged_samples"] = est.converged_samples;
        }
        result = mp::io::result_to_json(rec);
        converged = rec.converged;
        s.report.metrics["objective"] = rec.objective;
        s.report.metrics["similarity"] = rec.similarity;
        s.report.metrics["restarts_used"] = rec.restarts_used;
        s.report.metrics["converged"] = converged;
        std::cout << "objective " << rec.objective << ", similarity " << rec.similarity
                  << ", converged " << (converged ? "yes" : "no") << "\n";
    }
    write_out(o.out, result);
    if (!o.out.empty()) std::cout << "wrote " << o.out << "\n";
    if (o.strict && !converged) {
        std::cerr << "error: did not converge (--strict)\n";
        return 5;
    }
    return 0;
}

struct CompareOpts {
    std::string a;
    std::string b;
    std::string metric = "both";
    bool gauge_aware = false;
    std::string out;
};

int cmd_compare(Session& s, const CompareOpts& o) {
    if (o.metric != "fidelity" && o.metric != "similarity" && o.metric != "both")
        throw UsageError("bad --metric '" + o.metric + "', expected fidelity|similarity|both");

    // Each side may be a transfer-matrix file or a visibility file; matrices
    // are reduced to visibility matrices when a similarity is requested.
    auto load_side = [&](const std::string& path)
        -> std::pair<std::optional<mp::TransferMatrix>, mp::VisibilityMatrix> {
        if (path == "ideal") {
            mp::TransferMatrix m = mp::ideal_tritter();
            return {m, mp::visibility_matrix(m)};
        }
        json j = s.load(path);
        if (j.contains("vals")) {
            if (o.metric != "similarity")
                throw UsageError(path + " is a visibility matrix; only --metric similarity applies");
            return {std::nullopt, mp::io::visibility_from_json(j, path)};
        }
        mp::TransferMatrix m = mp::io::matrix_from_json(j, path).matrix;
        return {m, mp::visibility_matrix(m)};
    };
    auto [ma, va] = load_side(o.a);
    auto [mb, vb] = load_side(o.b);

    json metrics;
    if (o.metric == "fidelity" || o.metric == "both") {
        if (!ma || !mb) throw UsageError("fidelity needs transfer-matrix inputs");
        if (o.gauge_aware) {
            mp::GaugeComparison g = mp::compare_up_to_gauge(*ma, *mb);
            metrics["fidelity"] = g.fid;
            metrics["conjugated"] = g.conjugated;
        } else {
            metrics["fidelity"] = mp::fidelity(*ma, *mb);
        }
    }
    if (o.metric == "similarity" || o.metric == "both")
        metrics["similarity"] = mp::similarity(va, vb);

    s.report.metrics = metrics;
    for (auto& [k, v] : metrics.items()) std::cout << k << " = " << v.dump() << "\n";
    write_out(o.out, metrics);
    return 0;
}

struct FringeOpts {
    std::string matrix;
    std::string pair = "01:01";
    double range_um = 2000.0;
    int points = 81;
    double sigma = mp::FringeModel{}.coherence_sigma;
    double rate = 1000.0;
    std::uint64_t seed = 0;
    bool seeded = false;
    std::string out;
};

int cmd_fringe(Session& s, const FringeOpts& o) {
    if (o.points < 1) throw UsageError("--points must be >= 1");
    if (o.range_um < 0) throw UsageError("--range must be >= 0");
    auto [i, j, k, l] = parse_pair_spec(o.pair);
    mp::TransferMatrix u = s.load_matrix(o.matrix);
    mp::FringeModel fm{o.sigma, o.rate};

    std::vector<double> delays;
    delays.reserve(static_cast<std::size_t>(o.points));
    for (int n = 0; n < o.points; ++n)
        delays.push_back(o.points == 1
                             ? 0.0
                             : -o.range_um + 2.0 * o.range_um * n / (o.points - 1));
    std::vector<mp::FringePoint> pts = mp::fringe(u, i, j, k, l, delays, fm);

    // counts column: Poisson draws when seeded, otherwise rounded expectations
    std::vector<std::int64_t> counts;
    counts.reserve(pts.size());
    std::mt19937_64 rng(o.seed);
    for (const mp::FringePoint& p : pts) {
        if (o.seeded && p.expected > 0.0) {
            std::poisson_distribution<std::int64_t> d(p.expected);
            counts.push_back(d(rng));
        } else {
            counts.push_back(std::llround(p.expected));
        }
    }
    if (o.seeded) s.report.seed = o.seed;
    s.report.metrics["pair"] = o.pair;
    s.report.metrics["points"] = o.points;

    std::string csv = mp::io::fringe_to_csv(pts, counts);
    if (o.out.empty())
        std::cout << csv;
    else {
        mp::io::write_file(o.out, csv);
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

struct SynthOpts {
    std::string matrix;
    std::int64_t totals = 100000;
    std::uint64_t seed = 0;
    bool poisson = false;
    std::string out;
};

int cmd_synth(Session& s, const SynthOpts& o) {
    mp::TransferMatrix u = s.load_matrix(o.matrix);
    mp::CountTable t = mp::synth_counts(u, o.totals, o.seed, o.poisson);
    s.report.seed = o.seed;
    s.report.metrics["totals"] = o.totals;
    s.report.metrics["poisson"] = o.poisson;
    json out_json = mp::io::counts_to_json(t);
    write_out(o.out, out_json);
    if (o.out.empty())
        std::cout << mp::io::render(out_json);
    else
        std::cout << "wrote " << o.out << "\n";
    return 0;
}

int cmd_fixtures_list() {
    for (const auto& e : mp::fixtures::catalog()) {
        std::string name = e.name;
        name.resize(8, ' ');
        std::string file = e.file;
        file.resize(12, ' ');
        std::string kind = e.kind;
        kind.resize(12, ' ');
        std::cout << name << file << kind << e.description << "\n";
    }
    return 0;
}

int cmd_fixtures_dump(const std::string& dir, const std::string& only) {
    std::filesystem::create_directories(dir);
    int written = 0;
    for (const auto& e : mp::fixtures::catalog()) {
        if (!only.empty() && only != e.name) continue;
        std::filesystem::path p = std::filesystem::path(dir) / e.file;
        mp::io::write_file(p.string(), mp::io::render(mp::fixtures::fixture_json(e.name)));
        ++written;
    }
    if (written == 0) throw UsageError("unknown fixture '" + only + "'");
    std::cout << "wrote " << written << " fixture file(s) to " << dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Forward modeling and reconstruction of 3x3 linear-optical multiports"};
    app.require_subcommand(1);

    std::string report_path;
    app.add_option("--report", report_path, "write a run report JSON to this path");

    SimulateOpts so;
    CLI::App* sim = app.add_subcommand("simulate", "compose a device transfer matrix");
    sim->add_option("--mode", so.mode, "biased|unbiased|general (default unbiased)");
    sim->add_option("--tritter", so.tritter, "'ideal' or a matrix JSON file");
    sim->add_option("--ub", so.ub, "backward matrix JSON (general mode)");
    sim->add_option("--phi1", so.phi1, "mirror phase 1, radians or '<x>pi'");
    sim->add_option("--phi2", so.phi2, "mirror phase 2, radians or '<x>pi'");
    sim->add_flag("--real-border", so.do_real_border, "canonicalize the result gauge");
    sim->add_option("--out", so.out, "output matrix JSON path");

    VisibilityOpts vo;
    CLI::App* vis = app.add_subcommand("visibility",
                                       "two-photon visibility + amplitude distribution of a matrix");
    vis->add_option("--matrix", vo.matrix, "'ideal' or a matrix JSON file")->required();
    vis->add_option("--out", vo.out, "output visibility JSON path");
    vis->add_option("--amp-out", vo.amp_out, "output amplitude JSON path");

    ReconstructOpts ro;
    CLI::App* rec = app.add_subcommand("reconstruct",
                                       "recover a transfer matrix or mirror phases from data");
    rec->add_option("--vis", ro.vis, "measured visibility JSON")->required();
    rec->add_option("--amp", ro.amp, "measured amplitude JSON (direct mode)");
    rec->add_option("--uf", ro.uf, "forward matrix JSON (composed mode)");
    rec->add_option("--ub", ro.ub, "backward matrix JSON (composed mode)");
    rec->add_option("--restarts", ro.cfg.restarts, "random starts added to the lattice (default 64)");
    rec->add_option("--max-iters", ro.cfg.max_iters, "iteration cap per local search (default 2000)");
    rec->add_option("--ftol", ro.cfg.ftol, "relative tolerance (default 1e-10)");
    rec->add_option("--seed", ro.cfg.seed, "random-start seed (default 0)");
    rec->add_option("--stage", ro.stage, "phases|full|both (default both)");
    rec->add_flag("--strict", ro.strict, "exit 5 if the fit does not converge");
    rec->add_flag("--transpose", ro.transpose, "transpose measured inputs on load");
    rec->add_option("--mc-samples", ro.mc_samples,
                    "Monte-Carlo uncertainty samples (direct mode; needs sigma blocks)");
    rec->add_option("--mc-stage", ro.mc_stage, "solver stage for sampling (default phases)");
    rec->add_option("--mc-ftol", ro.mc_ftol, "solver tolerance for sampling (default 1e-2)");
    rec->add_option("--out", ro.out, "output result JSON path");

    CompareOpts co;
    CLI::App* cmp = app.add_subcommand("compare", "fidelity / similarity between two files");
    cmp->add_option("--a", co.a, "matrix or visibility JSON (or 'ideal')")->required();
    cmp->add_option("--b", co.b, "matrix or visibility JSON (or 'ideal')")->required();
    cmp->add_option("--metric", co.metric, "fidelity|similarity|both (default both)");
    cmp->add_flag("--gauge-aware", co.gauge_aware,
                  "compare canonical gauges, maximized over the conjugation twin");
    cmp->add_option("--out", co.out, "output metrics JSON path");

    FringeOpts fo;
    CLI::App* fr = app.add_subcommand("fringe", "delay-scan coincidence fringe CSV");
    fr->add_option("--matrix", fo.matrix, "'ideal' or a matrix JSON file")->required();
    fr->add_option("--pair", fo.pair, "input:output ports, e.g. 01:12 (default 01:01)");
    fr->add_option("--range", fo.range_um, "scan half-width in um (default 2000)");
    fr->add_option("--points", fo.points, "number of delay points (default 81)");
    fr->add_option("--sigma", fo.sigma, "envelope sigma in um (default 186.85, from a 440 um FWHM)");
    fr->add_option("--rate", fo.rate, "distinguishable-limit coincidence rate (default 1000)");
    fr->add_option("--seed", fo.seed, "Poisson-sample the counts column with this seed");
    fr->add_option("--out", fo.out, "output CSV path (default stdout)");

    SynthOpts yo;
    CLI::App* syn = app.add_subcommand("synth", "synthetic count table for a known matrix");
    syn->add_option("--matrix", yo.matrix, "'ideal' or a matrix JSON file")->required();
    syn->add_option("--totals", yo.totals, "photons per input configuration (default 100000)");
    syn->add_option("--seed", yo.seed, "sampling seed (default 0)");
    syn->add_flag("--poisson", yo.poisson, "Poisson-sample counts instead of rounded means");
    syn->add_option("--out", yo.out, "output counts JSON path (default stdout)");

    CLI::App* fx = app.add_subcommand("fixtures", "bundled reference dataset");
    fx->require_subcommand(1);
    CLI::App* fxl = fx->add_subcommand("list", "print name, file, kind and description");
    std::string dump_dir = "data/fixtures";
    std::string dump_name;
    CLI::App* fxd = fx->add_subcommand("dump", "write fixture JSON files");
    fxd->add_option("--dir", dump_dir, "output directory (default data/fixtures)");
    fxd->add_option("--name", dump_name, "dump a single fixture");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    Session session;
    for (int i = 0; i < argc; ++i) {
        if (i) session.report.command += ' ';
        session.report.command += argv[i];
    }
    session.report_path = report_path;

    fo.seeded = fr->count("--seed") > 0;

    try {
        int rc = 0;
        if (sim->parsed()) rc = cmd_simulate(session, so);
        else if (vis->parsed()) rc = cmd_visibility(session, vo);
        else if (rec->parsed()) rc = cmd_reconstruct(session, ro);
        else if (cmp->parsed()) rc = cmd_compare(session, co);
        else if (fr->parsed()) rc = cmd_fringe(session, fo);
        else if (syn->parsed()) rc = cmd_synth(session, yo);
        else if (fx->parsed()) rc = fxl->parsed() ? cmd_fixtures_list()
                                                  : cmd_fixtures_dump(dump_dir, dump_name);
        session.finish();
        return rc;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mp::io::PhaseFormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mp::DimensionMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const mp::UncertaintyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const mp::io::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
