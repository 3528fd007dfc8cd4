#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fitzbr/errors.hpp"
#include <fstream>

#include "fitzbr/scenario.hpp"

using namespace fitzbr;

namespace {
const char* kIdentityScenario = R"(
# identity operator, fitzpatrick value at a graph point
SCENARIO demo
DIM 1
SEED 7
OBJECT f FUNCTION QUADRATIC A 1 B 0 C 0
OBJECT T OPERATOR AFFINE A 1 B 0
OBJECT h BIFUNCTION SEPARABLE f
COMMAND fitz-eval T T X 1 XSTAR 1
)";
}

TEST_CASE("minimal scenario parses and runs") {
    auto s = parse_scenario(kIdentityScenario);
    CHECK(s.name == "demo");
    CHECK(s.dim == 1);
    CHECK(s.seed == 7);
    CHECK(s.objects.size() == 3);
    CHECK(s.command.verb == "fitz-eval");
    auto rep = run(s);
    CHECK(rep["outputs"]["value"] == 1.0);
    CHECK(rep["tol_class"] == "strict");
}

TEST_CASE("undeclared reference is a semantic error naming the object") {
    const char* text = R"(
SCENARIO bad
DIM 1
OBJECT h BIFUNCTION SEPARABLE f2
COMMAND dual-condition H h
)";
    try {
        parse_scenario(text);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("f2") != std::string::npos);
    }
}

TEST_CASE("dimension mismatch is rejected at build time") {
    const char* text = R"(
SCENARIO bad-dim
DIM 2
OBJECT T OPERATOR AFFINE A 1 0 0 1 B 0 0
COMMAND fitz-eval T T X 1 XSTAR 1
)";
    auto s = parse_scenario(text);
    CHECK_THROWS(run(s));
}

TEST_CASE("syntax errors carry line numbers") {
    try {
        parse_scenario("SCENARIO x\nDIM 1\nOBJECT a FUNCTION QUADRATIC A\nCOMMAND eps-test");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("round trip: parse(serialize(s)) == s") {
    auto s = parse_scenario(kIdentityScenario);
    auto s2 = parse_scenario(serialize(s));
    CHECK(s == s2);
    // a richer scenario with every category
    const char* text = R"(
SCENARIO rich
DIM 1
SEED 12345
OBJECT f FUNCTION QUADRATIC A 1 B 1 C 0
OBJECT av FUNCTION ABS
OBJECT bx FUNCTION BOX LO -1 HI 1
OBJECT gf FUNCTION GRIDOF f R 2 M 11
OBJECT sup FUNCTION BOXSUP LO -1 HI 1
OBJECT mix FUNCTION SEPSUM f
OBJECT T OPERATOR SUBDIFF f
OBJECT S OPERATOR GRAPH K 2 PTS 0 0 1 1
OBJECT h BIFUNCTION FITZPATRICK T
OBJECT hg BIFUNCTION GRIDOF h R 1 M 5
OBJECT ht BIFUNCTION TRANSLATE h Z 1 ZSTAR 0
COMMAND br-refine H h X 0 XSTAR 0 EPS 0.9
)";
    auto r = parse_scenario(text);
    auto r2 = parse_scenario(serialize(r));
    CHECK(r == r2);
}

TEST_CASE("determinism: identical scenario and seed give identical reports") {
    const char* text = R"(
SCENARIO det
DIM 1
SEED 99
OBJECT f FUNCTION QUADRATIC A 1 B 0 C 0
OBJECT h BIFUNCTION SEPARABLE f
COMMAND translate-check H h Z 0.5 ZSTAR -0.25 COUNT 50 R 2 M 5
)";
    auto s = parse_scenario(text);
    auto r1 = run(s);
    auto r2 = run(s);
    r1.erase("timing_ms");
    r2.erase("timing_ms");
    CHECK(r1.dump() == r2.dump());
    // different seed changes the sample set but not the verdict
    RunOptions opt;
    opt.seed_override = 1234;
    auto r3 = run(s, opt);
    CHECK(r3["outputs"]["ok"] == true);
}

TEST_CASE("strict-br command reproduces the refine example") {
    const char* text = R"(
SCENARIO sbr
DIM 1
OBJECT T OPERATOR AFFINE A 1 B 0
COMMAND strict-br T T X 0 XSTAR 1 EPS 0.25 ETA 0.3 LAMBDA 0.5
)";
    auto rep = run(parse_scenario(text));
    double t = rep["outputs"]["point"]["x"][0];
    CHECK(t > 0.4);
    CHECK(t < 0.5);
    CHECK(rep["outputs"]["enlargement_inf"] == -0.25);
}

TEST_CASE("dual-condition command on the separable representation") {
    const char* text = R"(
SCENARIO dc
DIM 1
OBJECT f FUNCTION QUADRATIC A 1 B 0 C 0
OBJECT h BIFUNCTION SEPARABLE f
COMMAND dual-condition H h R 2 M 21
)";
    auto rep = run(parse_scenario(text));
    CHECK(rep["outputs"]["verdict"] == true);
    CHECK(std::abs(rep["outputs"]["primal_min_gap"].get<double>()) <= 1e-12);
}

TEST_CASE("maximality-probe rejection reports the witness and flags the error") {
    const char* text = R"(
SCENARIO probe-reject
DIM 1
OBJECT f FUNCTION QUADRATIC A 1 B 0 C 0
OBJECT h BIFUNCTION SEPARABLE f
COMMAND maximality-probe H h X 0 XSTAR 1 R 2 M 41
)";
    auto rep = run(parse_scenario(text));
    CHECK(rep.contains("error"));
    CHECK(rep["error"]["type"] == "precondition");
    CHECK(rep["outputs"]["rejected"] == true);
    CHECK(rep["outputs"]["precondition_inf"] == doctest::Approx(-0.25));
}

TEST_CASE("trace CSV export") {
    const char* text = R"(
SCENARIO traced
DIM 1
OBJECT f FUNCTION QUADRATIC A 1 B 0 C 0
OBJECT h BIFUNCTION SEPARABLE f
COMMAND br-refine H h X 0 XSTAR 1 EPS 0.6
)";
    RunOptions opt;
    opt.trace_out = "/tmp/fitzbr_trace_test.csv";
    auto rep = run(parse_scenario(text), opt);
    CHECK(rep["outputs"]["trace"]["completed"] == true);
    std::ifstream in(opt.trace_out);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "k,x0,xstar0,gap,step_norm_x,step_norm_xstar");
    std::string row;
    int rows = 0;
    while (std::getline(in, row))
        if (!row.empty()) ++rows;
    CHECK(rows >= 2);
}

TEST_CASE("infinities serialize as the literal inf") {
    const char* text = R"(
SCENARIO inf-out
DIM 1
OBJECT T OPERATOR AFFINE A 0 B 0
COMMAND fitz-eval T T X 3 XSTAR 0.5
)";
    auto rep = run(parse_scenario(text));
    CHECK(rep["outputs"]["value"] == "inf");
}

TEST_CASE("tolerance class reflects grid-backed objects") {
    const char* text = R"(
SCENARIO tolcls
DIM 1
OBJECT f FUNCTION QUADRATIC A 1 B 0 C 0
OBJECT h BIFUNCTION SEPARABLE f
OBJECT hg BIFUNCTION GRIDOF h R 2 M 9
COMMAND dual-condition H hg R 2 M 9
)";
    auto rep = run(parse_scenario(text));
    CHECK(rep["tol_class"] == "grid");
}
