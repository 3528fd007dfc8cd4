#ifndef FITZBR_SCENARIO_HPP
#define FITZBR_SCENARIO_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fitzbr/tolerances.hpp"

namespace fitzbr {

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

// One OBJECT declaration: category FUNCTION | OPERATOR | BIFUNCTION, a kind
// keyword, numeric parameter lists and referenced object names.
struct ObjectDecl {
    std::string name;
    std::string category;
    std::string kind;
    std::map<std::string, std::vector<double>> params;
    std::vector<std::string> refs;

    bool operator==(const ObjectDecl&) const = default;
};

struct CommandDecl {
    std::string verb;
    std::map<std::string, std::vector<double>> params;
    std::map<std::string, std::string> refs;  // key -> object name

    bool operator==(const CommandDecl&) const = default;
};

struct Scenario {
    std::string name;
    int dim = 1;
    std::uint64_t seed = 0;
    std::vector<ObjectDecl> objects;
    CommandDecl command;

    bool operator==(const Scenario&) const = default;
};

// Line-oriented scenario text -> validated Scenario. Throws ParseError with
// the offending line; semantic errors name the offending declaration.
Scenario parse_scenario(const std::string& text);

// Canonical text form; parse_scenario(serialize(s)) == s.
std::string serialize(const Scenario& s);

struct RunOptions {
    std::optional<std::uint64_t> seed_override;
    std::optional<TolClass> tol_class_override;
    std::string trace_out;  // CSV path for refinement traces ("" = none)
    // grid-backed objects to dump as CSV after the run: (object name, path)
    std::vector<std::pair<std::string, std::string>> grid_exports;
};

// Execute the scenario command; JSON-style report (deterministic except for
// the timing field).
nlohmann::ordered_json run(const Scenario& s, const RunOptions& opt = {});

}  // namespace fitzbr

#endif
