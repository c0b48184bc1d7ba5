#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "multiport/io.hpp"

using namespace multiport;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace io = multiport::io;

TEST_CASE("content digest has known test vectors", "[io]") {
    CHECK(io::fnv1a64("") == "fnv1a64:cbf29ce484222325");
    CHECK(io::fnv1a64("a") == "fnv1a64:af63dc4c8601ec8c");
    CHECK(io::fnv1a64("hello") != io::fnv1a64("hellp"));
}

TEST_CASE("phase literals accept radians and pi units", "[io]") {
    CHECK_THAT(io::parse_phase("1.25"), WithinAbs(1.25, 0.0));
    CHECK_THAT(io::parse_phase(" -2 "), WithinAbs(-2.0, 0.0));
    CHECK_THAT(io::parse_phase("0.383pi"), WithinAbs(0.383 * M_PI, 1e-15));
    CHECK_THAT(io::parse_phase("-0.596PI"), WithinAbs(-0.596 * M_PI, 1e-15));
    CHECK_THAT(io::parse_phase("pi"), WithinAbs(M_PI, 0.0));
    CHECK_THAT(io::parse_phase("-pi"), WithinAbs(-M_PI, 0.0));
    CHECK_THAT(io::parse_phase("+pi"), WithinAbs(M_PI, 0.0));
    CHECK_THAT(io::parse_phase("2pi"), WithinAbs(2.0 * M_PI, 1e-15));

    CHECK_THROWS_AS(io::parse_phase(""), io::PhaseFormatError);
    CHECK_THROWS_AS(io::parse_phase("   "), io::PhaseFormatError);
    CHECK_THROWS_AS(io::parse_phase("abc"), io::PhaseFormatError);
    CHECK_THROWS_AS(io::parse_phase("1.2x"), io::PhaseFormatError);
    CHECK_THROWS_AS(io::parse_phase("pi3"), io::PhaseFormatError);
}

TEST_CASE("json parsing reports the origin instead of throwing raw", "[io]") {
    io::json j = io::parse("{\"a\": 1}", "inline");
    CHECK(j["a"] == 1);
    try {
        io::parse("{broken", "data.json");
        FAIL("expected IoError");
    } catch (const io::IoError& e) {
        CHECK_THAT(e.what(), ContainsSubstring("data.json"));
    }
}

TEST_CASE("file helpers round-trip bytes and fail loudly", "[io]") {
    auto path = (std::filesystem::temp_directory_path() / "multiport_io_test.bin").string();
    io::write_file(path, "line1\nline2\n");
    CHECK(io::read_file(path) == "line1\nline2\n");
    std::remove(path.c_str());
    CHECK_THROWS_AS(io::read_file(path), io::IoError);
    CHECK_THROWS_AS(io::load_file("/nonexistent/dir/x.json"), io::IoError);
}

TEST_CASE("transfer matrices serialize losslessly", "[io]") {
    TransferMatrix u = random_unitary(3, 7);
    io::json j = io::matrix_to_json(u);
    CHECK(j["dim"] == 3);
    CHECK(j["convention"] == io::kMatrixConvention);

    io::LoadedMatrix back = io::matrix_from_json(j, "test");
    CHECK(back.matrix.entries().isApprox(u.entries(), 0.0));  // bit-exact round trip
    CHECK_FALSE(back.sigma.has_value());

    io::LoadedMatrix t = io::matrix_from_json(j, "test", /*transpose=*/true);
    CHECK(t.matrix.entries().isApprox(u.entries().transpose().eval(), 0.0));

    SigmaBlock s{RMatrix::Constant(3, 3, 0.01), RMatrix::Constant(3, 3, 0.02)};
    io::json js = io::matrix_to_json(u, &s);
    io::LoadedMatrix withsig = io::matrix_from_json(js, "test");
    REQUIRE(withsig.sigma.has_value());
    CHECK(withsig.sigma->mag.isApprox(s.mag, 0.0));
    CHECK(withsig.sigma->phase.isApprox(s.phase, 0.0));
}

TEST_CASE("matrix loader validates structure", "[io]") {
    TransferMatrix u = random_unitary(3, 7);
    io::json good = io::matrix_to_json(u);

    io::json j = good;
    j.erase("dim");
    CHECK_THROWS_AS(io::matrix_from_json(j, "t"), io::IoError);

    j = good;
    j["dim"] = 1;
    CHECK_THROWS_AS(io::matrix_from_json(j, "t"), DimensionMismatch);

    j = good;
    j["convention"] = "row=input,col=output";
    try {
        io::matrix_from_json(j, "t");
        FAIL("expected IoError");
    } catch (const io::IoError& e) {
        CHECK_THAT(e.what(), ContainsSubstring("transpose"));
    }

    j = good;
    j["entries"].erase(2);
    CHECK_THROWS_AS(io::matrix_from_json(j, "t"), DimensionMismatch);

    j = good;
    j["entries"][0][0] = 3.14;  // not an {re, im} object
    CHECK_THROWS_AS(io::matrix_from_json(j, "t"), io::IoError);

    j = good;
    j["sigma"] = {{"mag", {{-0.1, 0, 0}, {0, 0, 0}, {0, 0, 0}}},
                  {"phase", {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}};
    CHECK_THROWS_AS(io::matrix_from_json(j, "t"), io::IoError);
}

TEST_CASE("visibility matrices serialize with sigma and undefined flags", "[io]") {
    VisibilityMatrix v;
    v.vals = RMatrix::Zero(3, 3);
    v.vals << 0.5, -0.3, 0.0, 0.25, 1.0, -1.0, 0.125, 0.75, 0.0;
    v.undefined[0][2] = true;
    v.sigma = RMatrix::Constant(3, 3, 0.01);

    io::json j = io::visibility_to_json(v);
    CHECK(j["input_pairs"] == io::json({"01", "02", "12"}));
    CHECK(j.contains("undefined"));

    VisibilityMatrix back = io::visibility_from_json(j, "t");
    CHECK(back.vals.isApprox(v.vals, 0.0));
    CHECK(back.undefined == v.undefined);
    REQUIRE(back.sigma.has_value());
    CHECK(back.sigma->isApprox(*v.sigma, 0.0));

    VisibilityMatrix tr = io::visibility_from_json(j, "t", /*transpose=*/true);
    CHECK(tr.vals.isApprox(v.vals.transpose().eval(), 0.0));
    CHECK(tr.undefined[2][0]);
    CHECK_FALSE(tr.undefined[0][2]);

    // flag-free matrices omit the undefined block entirely
    VisibilityMatrix clean;
    clean.vals = RMatrix::Zero(3, 3);
    CHECK_FALSE(io::visibility_to_json(clean).contains("undefined"));
}

TEST_CASE("visibility loader validates values", "[io]") {
    VisibilityMatrix v;
    v.vals = RMatrix::Zero(3, 3);
    io::json good = io::visibility_to_json(v);

    io::json j = good;
    j["vals"][0][0] = 1.5;
    CHECK_THROWS_AS(io::visibility_from_json(j, "t"), io::IoError);

    j = good;
    j["vals"] = {{0, 0}, {0, 0}};
    CHECK_THROWS_AS(io::visibility_from_json(j, "t"), DimensionMismatch);

    j = good;
    j["input_pairs"] = {"10", "02", "12"};
    CHECK_THROWS_AS(io::visibility_from_json(j, "t"), io::IoError);

    j = good;
    j["sigma"] = {{0, 0, 0}, {0, -1, 0}, {0, 0, 0}};
    CHECK_THROWS_AS(io::visibility_from_json(j, "t"), io::IoError);

    // an undefined entry must carry the flagged zero, not a stale value
    j = good;
    j["undefined"] = {{true, false, false}, {false, false, false}, {false, false, false}};
    j["vals"][0][0] = 0.2;
    CHECK_THROWS_AS(io::visibility_from_json(j, "t"), io::IoError);
}

TEST_CASE("amplitude files keep their bytes and reveal their axis", "[io]") {
    AmplitudeDistribution model = amplitude_distribution(compose_unbiased(ideal_tritter(), {0.7, -0.2}));
    io::json j = io::amplitude_to_json(model);
    CHECK(j["axis"] == "col");

    AmplitudeDistribution back = io::amplitude_from_json(j, "t");
    CHECK(back.axis == NormAxis::col);
    CHECK(back.probs.isApprox(model.probs, 0.0));
    CHECK(io::render(io::amplitude_to_json(back)) == io::render(j));  // byte-stable cycle

    // axis detection for measured data that carries no axis key: the grid
    // below is row-stochastic but not column-stochastic
    io::json meas;
    meas["probs"] = {{0.220, 0.131, 0.648}, {0.150, 0.610, 0.241}, {0.679, 0.190, 0.131}};
    AmplitudeDistribution m = io::amplitude_from_json(meas, "t");
    CHECK(m.axis == NormAxis::row);
    CHECK_THAT(m.probs(0, 1), WithinAbs(0.131, 0.0));  // values untouched

    // transpose flips the axis along with the grid
    AmplitudeDistribution mt = io::amplitude_from_json(j, "t", /*transpose=*/true);
    CHECK(mt.axis == NormAxis::row);
    CHECK(mt.probs.isApprox(model.probs.transpose().eval(), 0.0));
}

TEST_CASE("amplitude loader validates normalization and range", "[io]") {
    io::json j;
    j["probs"] = {{0.5, 0.1, 0.1}, {0.1, 0.5, 0.1}, {0.1, 0.1, 0.5}};  // sums 0.7
    CHECK_THROWS_AS(io::amplitude_from_json(j, "t"), io::IoError);

    j["probs"] = {{-0.2, 0.6, 0.6}, {0.6, 0.2, 0.2}, {0.6, 0.2, 0.2}};
    CHECK_THROWS_AS(io::amplitude_from_json(j, "t"), io::IoError);

    j["probs"] = {{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}};
    CHECK_THROWS_AS(io::amplitude_from_json(j, "t"), DimensionMismatch);

    j["probs"] = {{0.5, 0.5, 0.0}, {0.5, 0.25, 0.25}, {0.0, 0.25, 0.75}};
    j["axis"] = "diagonal";
    CHECK_THROWS_AS(io::amplitude_from_json(j, "t"), io::IoError);

    j.erase("axis");
    j["sigma"] = {{0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(io::amplitude_from_json(j, "t"), DimensionMismatch);

    j.erase("sigma");
    j["dim"] = 4;
    CHECK_THROWS_AS(io::amplitude_from_json(j, "t"), DimensionMismatch);
}

TEST_CASE("count tables round-trip", "[io]") {
    CountTable t = synth_counts(ideal_tritter(), 90000, 5, true);
    io::json j = io::counts_to_json(t);
    CHECK(j["singles_convention"] == "row=input,col=output");
    CountTable back = io::counts_from_json(j, "t");
    CHECK(back.singles == t.singles);
    CHECK(back.dist == t.dist);
    CHECK(back.indist == t.indist);

    io::json bad = j;
    bad["singles"][1][1] = -3;
    CHECK_THROWS_AS(io::counts_from_json(bad, "t"), io::IoError);
    bad = j;
    bad["distinguishable"][0][0] = 1.5;
    CHECK_THROWS_AS(io::counts_from_json(bad, "t"), io::IoError);
    bad = j;
    bad.erase("indistinguishable");
    CHECK_THROWS_AS(io::counts_from_json(bad, "t"), io::IoError);
}

TEST_CASE("phase files round-trip with optional sigma", "[io]") {
    PhaseShifts ph{0.383 * M_PI, -0.596 * M_PI};
    PhaseShifts sig{0.014 * M_PI, 0.010 * M_PI};
    io::json j = io::phases_to_json(ph, &sig);
    PhaseShifts back = io::phases_from_json(j, "t");
    CHECK(back.phi1 == ph.phi1);
    CHECK(back.phi2 == ph.phi2);
    CHECK_THAT(j["sigma"]["phi1"].get<double>(), WithinAbs(sig.phi1, 0.0));

    io::json bare = io::phases_to_json(ph);
    CHECK_FALSE(bare.contains("sigma"));

    io::json bad;
    bad["phi1"] = 0.5;
    CHECK_THROWS_AS(io::phases_from_json(bad, "t"), io::IoError);
    bad["phi2"] = "half";
    CHECK_THROWS_AS(io::phases_from_json(bad, "t"), io::IoError);
}

TEST_CASE("reconstruction results serialize every diagnostic", "[io]") {
    ReconstructionResult r{TransferMatrix::identity(3)};
    r.objective = 1e-4;
    r.similarity = 0.97;
    r.converged = true;
    r.restarts_used = 90;
    r.target_entries_used = 8;
    io::json j = io::result_to_json(r);
    for (const char* key :
         {"matrix", "objective", "similarity", "converged", "restarts_used", "conjugated",
          "target_entries_used"})
        CHECK(j.contains(key));
    CHECK_FALSE(j.contains("sigma"));

    ComposedReconstruction c{PhaseShifts{1.2, -0.9}, TransferMatrix::identity(3), r};
    io::json cj = io::composed_to_json(c);
    CHECK_THAT(cj["phi1"].get<double>(), WithinAbs(1.2, 0.0));
    CHECK_THAT(cj["phi2"].get<double>(), WithinAbs(-0.9, 0.0));
    CHECK(cj.contains("objective"));
    CHECK(cj.contains("matrix"));
}

TEST_CASE("fringe scans render as a stable three-column csv", "[io]") {
    std::vector<FringePoint> pts{{-250.0, 1500.5}, {0.0, 1000.0}};
    std::string csv = io::fringe_to_csv(pts, {1489, 1000});
    CHECK(csv == "delay_um,expected,counts\n-250.0,1500.5,1489\n0.0,1000.0,1000\n");
    CHECK_THROWS_AS(io::fringe_to_csv(pts, {1}), DimensionMismatch);
}

TEST_CASE("run reports carry command, digests, metrics and seed", "[io]") {
    io::RunReport r;
    r.command = "simulate";
    r.inputs["matrix.json"] = io::fnv1a64("x");
    r.metrics["unitarity_deviation"] = 1e-12;
    r.seed = 17;
    r.wall_ms = 3.5;
    io::json j = io::report_to_json(r);
    CHECK(j["command"] == "simulate");
    CHECK(j["seed"] == 17);
    CHECK(j["inputs"]["matrix.json"] == io::fnv1a64("x"));
    CHECK(j["metrics"]["unitarity_deviation"].get<double>() > 0.0);
    CHECK(j.contains("wall_ms"));
}
