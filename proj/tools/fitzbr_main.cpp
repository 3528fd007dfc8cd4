#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fitzbr/errors.hpp"
#include "fitzbr/scenario.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Convex representations of monotone operators: scenario runner"};
    std::string scenario_path;
    std::string trace_out;
    std::string tol_class;
    std::vector<std::string> grid_exports;
    long long seed = -1;
    app.add_option("--scenario", scenario_path, "scenario file path")->required();
    app.add_option("--trace-out", trace_out, "write refinement traces to this CSV path");
    app.add_option("--seed", seed, "override the scenario seed");
    app.add_option("--tol-class", tol_class, "force the tolerance class")
        ->check(CLI::IsMember({"strict", "grid"}));
    app.add_option("--export-grid", grid_exports,
                   "dump a grid-backed object as CSV, format name=path (repeatable)");
    CLI11_PARSE(app, argc, argv);

    std::ifstream in(scenario_path);
    if (!in) {
        std::cerr << "cannot open scenario file: " << scenario_path << "\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    try {
        fitzbr::Scenario s = fitzbr::parse_scenario(buf.str());
        fitzbr::RunOptions opt;
        opt.trace_out = trace_out;
        if (seed >= 0) opt.seed_override = static_cast<std::uint64_t>(seed);
        if (tol_class == "strict") opt.tol_class_override = fitzbr::TolClass::Strict;
        if (tol_class == "grid") opt.tol_class_override = fitzbr::TolClass::Grid;
        for (const auto& e : grid_exports) {
            auto pos = e.find('=');
            if (pos == std::string::npos) {
                std::cerr << "--export-grid expects name=path, got: " << e << "\n";
                return 2;
            }
            opt.grid_exports.emplace_back(e.substr(0, pos), e.substr(pos + 1));
        }
        auto rep = fitzbr::run(s, opt);
        std::cout << rep.dump(2) << "\n";
        if (rep.contains("error")) {
            const auto& type = rep["error"]["type"];
            return type == "precondition" ? 3 : 4;
        }
        return 0;
    } catch (const fitzbr::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid scenario: " << e.what() << "\n";
        return 2;
    } catch (const fitzbr::PreconditionError& e) {
        std::cerr << "precondition rejected: " << e.what() << "\n";
        return 3;
    } catch (const fitzbr::SolverFailure& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
