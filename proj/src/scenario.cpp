#include "fitzbr/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "fitzbr/errors.hpp"
#include "fitzbr/refine.hpp"

namespace fitzbr {

namespace {

const std::vector<std::string> kVerbs = {
    "check-family", "fitz-eval",  "sigma-eval",       "conjugate",
    "dual-condition", "fenchel-duality", "eps-test",  "enlargement-test",
    "br-step",      "br-refine",  "strict-br",        "maximality-probe",
    "translate-check"};

bool is_param_key(const std::string& t) {
    static const std::vector<std::string> keys = {"A",   "B",    "C",     "LO",    "HI",   "W",
                                                  "R",   "M",    "P",     "Q",     "Z",    "ZSTAR",
                                                  "X",   "XSTAR", "EPS",  "ETA",   "LAMBDA",
                                                  "TOLGAP", "BUDGET", "COUNT", "K", "PTS", "SHIFT",
                                                  "LIN", "ADD",  "AT"};
    return std::find(keys.begin(), keys.end(), t) != keys.end();
}

bool is_ref_key(const std::string& t) {
    static const std::vector<std::string> keys = {"H", "T", "F", "G", "TARGET"};
    return std::find(keys.begin(), keys.end(), t) != keys.end();
}

std::string upper(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

bool is_number(const std::string& t) {
    char* end = nullptr;
    std::strtod(t.c_str(), &end);
    return end != nullptr && *end == '\0' && end != t.c_str();
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string t;
    while (is >> t) {
        if (t[0] == '#') break;
        out.push_back(t);
    }
    return out;
}

double num_at(const std::vector<std::string>& toks, std::size_t i, int line) {
    if (i >= toks.size() || !is_number(toks[i]))
        throw ParseError(line, "expected a number after '" + toks[i - 1] + "'");
    return std::strtod(toks[i].c_str(), nullptr);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    Scenario s;
    bool have_dim = false, have_command = false, have_name = false;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto toks = tokenize(line);
        if (toks.empty()) continue;
        std::string head = upper(toks[0]);
        if (head == "SCENARIO") {
            if (toks.size() < 2) throw ParseError(lineno, "SCENARIO needs a name");
            s.name = toks[1];
            have_name = true;
        } else if (head == "DIM") {
            s.dim = static_cast<int>(num_at(toks, 1, lineno));
            if (s.dim < 1) throw ParseError(lineno, "DIM must be >= 1");
            have_dim = true;
        } else if (head == "SEED") {
            s.seed = static_cast<std::uint64_t>(num_at(toks, 1, lineno));
        } else if (head == "OBJECT") {
            if (toks.size() < 4) throw ParseError(lineno, "OBJECT needs: name category kind ...");
            ObjectDecl d;
            d.name = toks[1];
            d.category = upper(toks[2]);
            d.kind = upper(toks[3]);
            if (d.category != "FUNCTION" && d.category != "OPERATOR" && d.category != "BIFUNCTION")
                throw ParseError(lineno, "unknown category '" + toks[2] + "'");
            if (is_param_key(upper(d.name)) || is_number(d.name))
                throw ParseError(lineno, "object name '" + d.name + "' collides with a keyword");
            std::size_t i = 4;
            while (i < toks.size()) {
                std::string key = upper(toks[i]);
                if (is_param_key(key)) {
                    ++i;
                    std::vector<double> vals;
                    while (i < toks.size() && is_number(toks[i])) {
                        vals.push_back(std::strtod(toks[i].c_str(), nullptr));
                        ++i;
                    }
                    if (vals.empty()) throw ParseError(lineno, "key '" + key + "' needs numbers");
                    d.params[key] = std::move(vals);
                } else {
                    d.refs.push_back(toks[i]);
                    ++i;
                }
            }
            for (const auto& prev : s.objects)
                if (prev.name == d.name)
                    throw ParseError(lineno, "duplicate object name '" + d.name + "'");
            s.objects.push_back(std::move(d));
        } else if (head == "COMMAND") {
            if (toks.size() < 2) throw ParseError(lineno, "COMMAND needs a verb");
            CommandDecl c;
            c.verb = toks[1];
            for (auto& ch : c.verb) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            if (std::find(kVerbs.begin(), kVerbs.end(), c.verb) == kVerbs.end())
                throw ParseError(lineno, "unknown command verb '" + toks[1] + "'");
            std::size_t i = 2;
            while (i < toks.size()) {
                std::string key = upper(toks[i]);
                if (is_ref_key(key)) {
                    if (i + 1 >= toks.size())
                        throw ParseError(lineno, "key '" + key + "' needs an object name");
                    c.refs[key] = toks[i + 1];
                    i += 2;
                } else if (is_param_key(key)) {
                    ++i;
                    std::vector<double> vals;
                    while (i < toks.size() && is_number(toks[i])) {
                        vals.push_back(std::strtod(toks[i].c_str(), nullptr));
                        ++i;
                    }
                    if (vals.empty()) throw ParseError(lineno, "key '" + key + "' needs numbers");
                    c.params[key] = std::move(vals);
                } else {
                    throw ParseError(lineno, "unexpected token '" + toks[i] + "' in COMMAND");
                }
            }
            s.command = std::move(c);
            have_command = true;
        } else {
            throw ParseError(lineno, "unknown directive '" + toks[0] + "'");
        }
    }
    if (!have_name) throw ParseError(0, "missing SCENARIO line");
    if (!have_dim) throw ParseError(0, "missing DIM line");
    if (!have_command) throw ParseError(0, "missing COMMAND line");

    // semantic pass: every referenced name is declared
    auto declared = [&](const std::string& name) {
        for (const auto& o : s.objects)
            if (o.name == name) return true;
        return false;
    };
    for (const auto& o : s.objects)
        for (const auto& r : o.refs)
            if (!declared(r))
                throw ParseError(0, "object '" + o.name + "' references undeclared '" + r + "'");
    for (const auto& [k, r] : s.command.refs)
        if (!declared(r)) throw ParseError(0, "command references undeclared '" + r + "'");
    return s;
}

std::string serialize(const Scenario& s) {
    std::ostringstream os;
    os.precision(17);
    os << "SCENARIO " << s.name << "\n";
    os << "DIM " << s.dim << "\n";
    os << "SEED " << s.seed << "\n";
    for (const auto& o : s.objects) {
        os << "OBJECT " << o.name << " " << o.category << " " << o.kind;
        for (const auto& r : o.refs) os << " " << r;
        for (const auto& [k, v] : o.params) {
            os << " " << k;
            for (double x : v) os << " " << x;
        }
        os << "\n";
    }
    os << "COMMAND " << s.command.verb;
    for (const auto& [k, r] : s.command.refs) os << " " << k << " " << r;
    for (const auto& [k, v] : s.command.params) {
        os << " " << k;
        for (double x : v) os << " " << x;
    }
    os << "\n";
    return os.str();
}

namespace {

using json = nlohmann::ordered_json;

json ext_json(ExtReal v) {
    if (v.is_pos_inf()) return "inf";
    if (v.is_neg_inf()) return "-inf";
    return v.value();
}

json num_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num_json(v(i)));
    return a;
}

json point_json(const PrimalDualPoint& p) {
    return json{{"x", vec_json(p.x)}, {"xstar", vec_json(p.xstar)}};
}

// Object store built from the declarations.
struct Builder {
    const Scenario& s;
    std::map<std::string, ConvexFunction> fns;
    std::map<std::string, MonotoneOperator> ops;
    std::map<std::string, Bifunction> bifs;

    explicit Builder(const Scenario& sc) : s(sc) {
        for (const auto& o : s.objects) build(o);
    }

    Vec pvec(const ObjectDecl& o, const std::string& key, int count) const {
        auto it = o.params.find(key);
        if (it == o.params.end())
            throw ParseError(0, "object '" + o.name + "' missing parameter " + key);
        if (static_cast<int>(it->second.size()) != count)
            throw ParseError(0, "object '" + o.name + "': " + key + " needs " +
                                    std::to_string(count) + " numbers");
        Vec v(count);
        for (int i = 0; i < count; ++i) v(i) = it->second[static_cast<std::size_t>(i)];
        return v;
    }
    double pscalar(const ObjectDecl& o, const std::string& key, std::optional<double> dflt = {}) const {
        auto it = o.params.find(key);
        if (it == o.params.end()) {
            if (dflt) return *dflt;
            throw ParseError(0, "object '" + o.name + "' missing parameter " + key);
        }
        return it->second.at(0);
    }
    Mat pmat(const ObjectDecl& o, const std::string& key, int rows, int cols) const {
        Vec flat = pvec(o, key, rows * cols);
        Mat m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
        return m;
    }

    const ConvexFunction& fn(const std::string& name) const {
        auto it = fns.find(name);
        if (it == fns.end()) throw ParseError(0, "'" + name + "' is not a FUNCTION");
        return it->second;
    }
    const MonotoneOperator& op(const std::string& name) const {
        auto it = ops.find(name);
        if (it == ops.end()) throw ParseError(0, "'" + name + "' is not an OPERATOR");
        return it->second;
    }
    const Bifunction& bif(const std::string& name) const {
        auto it = bifs.find(name);
        if (it == bifs.end()) throw ParseError(0, "'" + name + "' is not a BIFUNCTION");
        return it->second;
    }

    void build(const ObjectDecl& o) {
        const int n = s.dim;
        if (o.category == "FUNCTION") {
            if (o.kind == "QUADRATIC") {
                fns.emplace(o.name, ConvexFunction::quadratic(pmat(o, "A", n, n), pvec(o, "B", n),
                                                              pscalar(o, "C", 0.0)));
            } else if (o.kind == "ABS") {
                if (o.params.count("W"))
                    fns.emplace(o.name, ConvexFunction::abs_norm_weights(pvec(o, "W", n)));
                else
                    fns.emplace(o.name, ConvexFunction::abs_norm(n));
            } else if (o.kind == "BOX") {
                fns.emplace(o.name,
                            ConvexFunction::box_indicator(pvec(o, "LO", n), pvec(o, "HI", n)));
            } else if (o.kind == "BOXSUP") {
                fns.emplace(o.name,
                            ConvexFunction::box_support(pvec(o, "LO", n), pvec(o, "HI", n)));
            } else if (o.kind == "GRIDOF") {
                if (o.refs.size() != 1) throw ParseError(0, "GRIDOF needs one base function");
                fns.emplace(o.name, ConvexFunction::grid_sample(fn(o.refs[0]), pscalar(o, "R"),
                                                                static_cast<int>(pscalar(o, "M"))));
            } else if (o.kind == "SEPSUM") {
                std::vector<ConvexFunction> ps;
                for (const auto& r : o.refs) ps.push_back(fn(r));
                fns.emplace(o.name, ConvexFunction::separable_sum(std::move(ps)));
            } else if (o.kind == "AFFMOD") {
                if (o.refs.size() != 1) throw ParseError(0, "AFFMOD needs one base function");
                fns.emplace(o.name, ConvexFunction::affine_modified(fn(o.refs[0]), pvec(o, "SHIFT", n),
                                                                    pvec(o, "LIN", n),
                                                                    pscalar(o, "ADD", 0.0)));
            } else {
                throw ParseError(0, "unknown FUNCTION kind '" + o.kind + "'");
            }
        } else if (o.category == "OPERATOR") {
            if (o.kind == "AFFINE") {
                ops.emplace(o.name, MonotoneOperator::affine(pmat(o, "A", n, n), pvec(o, "B", n)));
            } else if (o.kind == "ROTATION2D") {
                if (n != 2) throw ParseError(0, "ROTATION2D requires DIM 2");
                ops.emplace(o.name, MonotoneOperator::rotation2d());
            } else if (o.kind == "SUBDIFF") {
                if (o.refs.size() != 1) throw ParseError(0, "SUBDIFF needs one function");
                ops.emplace(o.name, MonotoneOperator::subdifferential(fn(o.refs[0])));
            } else if (o.kind == "GRAPH") {
                int k = static_cast<int>(pscalar(o, "K"));
                Vec flat = pvec(o, "PTS", k * 2 * n);
                std::vector<PrimalDualPoint> pts;
                for (int i = 0; i < k; ++i)
                    pts.emplace_back(flat.segment(i * 2 * n, n), flat.segment(i * 2 * n + n, n));
                ops.emplace(o.name, MonotoneOperator::sampled_graph(std::move(pts)));
            } else {
                throw ParseError(0, "unknown OPERATOR kind '" + o.kind + "'");
            }
        } else {
            if (o.kind == "SEPARABLE") {
                if (o.refs.size() != 1) throw ParseError(0, "SEPARABLE needs one function");
                bifs.emplace(o.name, Bifunction::separable(fn(o.refs[0])));
            } else if (o.kind == "FITZPATRICK") {
                if (o.refs.size() != 1) throw ParseError(0, "FITZPATRICK needs one operator");
                bifs.emplace(o.name, Bifunction::fitzpatrick(op(o.refs[0])));
            } else if (o.kind == "SIGMA") {
                if (o.refs.size() != 1) throw ParseError(0, "SIGMA needs one operator");
                bifs.emplace(o.name, Bifunction::sigma(op(o.refs[0])));
            } else if (o.kind == "QUADFORM") {
                bifs.emplace(o.name, Bifunction::quadratic_form(pmat(o, "P", 2 * n, 2 * n),
                                                                pvec(o, "Q", 2 * n),
                                                                pscalar(o, "R", 0.0)));
            } else if (o.kind == "GRIDOF") {
                if (o.refs.size() != 1) throw ParseError(0, "GRIDOF needs one base bifunction");
                bifs.emplace(o.name, Bifunction::grid_sample(bif(o.refs[0]), pscalar(o, "R"),
                                                             static_cast<int>(pscalar(o, "M"))));
            } else if (o.kind == "TRANSLATE") {
                if (o.refs.size() != 1) throw ParseError(0, "TRANSLATE needs one base bifunction");
                bifs.emplace(o.name,
                             bif(o.refs[0]).translate(pvec(o, "Z", n), pvec(o, "ZSTAR", n)));
            } else {
                throw ParseError(0, "unknown BIFUNCTION kind '" + o.kind + "'");
            }
        }
    }
};

Vec cmd_vec(const CommandDecl& c, const std::string& key, int count) {
    auto it = c.params.find(key);
    if (it == c.params.end()) throw ParseError(0, "command missing parameter " + key);
    if (static_cast<int>(it->second.size()) != count)
        throw ParseError(0, "command parameter " + key + " needs " + std::to_string(count) +
                                " numbers");
    Vec v(count);
    for (int i = 0; i < count; ++i) v(i) = it->second[static_cast<std::size_t>(i)];
    return v;
}

double cmd_scalar(const CommandDecl& c, const std::string& key, std::optional<double> dflt = {}) {
    auto it = c.params.find(key);
    if (it == c.params.end()) {
        if (dflt) return *dflt;
        throw ParseError(0, "command missing parameter " + key);
    }
    return it->second.at(0);
}

std::string cmd_ref(const CommandDecl& c, const std::string& key) {
    auto it = c.refs.find(key);
    if (it == c.refs.end()) throw ParseError(0, "command missing object reference " + key);
    return it->second;
}

PrimalDualPoint cmd_point(const CommandDecl& c, int n) {
    return PrimalDualPoint(cmd_vec(c, "X", n), cmd_vec(c, "XSTAR", n));
}

TestGrid cmd_grid(const CommandDecl& c, double R = 2.0, int m = 11) {
    TestGrid g;
    g.R = cmd_scalar(c, "R", R);
    g.m = static_cast<int>(cmd_scalar(c, "M", m));
    return g;
}

const char* cls_name(TolClass c) { return c == TolClass::Strict ? "strict" : "grid"; }

void write_trace_csv(const std::string& path, const RefinementTrace& tr, int n) {
    std::ofstream os(path);
    if (!os) throw SolverFailure("cannot open trace output path " + path);
    os.precision(17);
    os << "k";
    for (int i = 0; i < n; ++i) os << ",x" << i;
    for (int i = 0; i < n; ++i) os << ",xstar" << i;
    os << ",gap,step_norm_x,step_norm_xstar\n";
    for (std::size_t k = 0; k < tr.iterates.size(); ++k) {
        os << k;
        for (int i = 0; i < n; ++i) os << "," << tr.iterates[k].x(i);
        for (int i = 0; i < n; ++i) os << "," << tr.iterates[k].xstar(i);
        os << "," << tr.gaps[k];
        os << "," << (k > 0 ? tr.step_norm_x[k - 1] : 0.0);
        os << "," << (k > 0 ? tr.step_norm_xstar[k - 1] : 0.0);
        os << "\n";
    }
}

// Grid samples as CSV: coordinate columns then the value, +inf spelled "inf".
void write_grid_csv(const std::string& path, const ConvexFunction& f, int primal_dim) {
    auto gd = f.grid_data();
    if (!gd) throw SolverFailure("grid export: object '" + path + "' is not grid-backed");
    std::ofstream os(path);
    if (!os) throw SolverFailure("cannot open grid export path " + path);
    os.precision(17);
    const auto& axes = *gd->axes;
    const int d = static_cast<int>(axes.size());
    for (int a = 0; a < d; ++a) {
        if (a) os << ",";
        if (d == 2 * primal_dim && a >= primal_dim)
            os << "xstar" << (a - primal_dim);
        else
            os << "x" << a;
    }
    os << ",value\n";
    std::vector<int> idx(axes.size(), 0);
    for (std::size_t flat = 0; flat < gd->values->size(); ++flat) {
        for (int a = 0; a < d; ++a)
            os << axes[static_cast<std::size_t>(a)].coord(idx[static_cast<std::size_t>(a)]) << ",";
        double v = (*gd->values)[flat];
        if (std::isinf(v))
            os << "inf";
        else
            os << v;
        os << "\n";
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < axes[static_cast<std::size_t>(a)].m) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
}

json trace_json(const RefinementTrace& tr) {
    json t;
    t["theta"] = tr.theta;
    t["eps0"] = tr.eps0;
    t["scale"] = tr.scale;
    t["iterations"] = tr.iterates.size() - 1;
    t["completed"] = tr.completed;
    t["final_gap"] = num_json(tr.gaps.back());
    t["limit"] = point_json(tr.limit);
    bool bounds = true;
    for (bool b : tr.step_bounds_ok) bounds = bounds && b;
    t["step_bounds_ok"] = bounds;
    if (!tr.diagnostic.empty()) t["diagnostic"] = tr.diagnostic;
    return t;
}

}  // namespace

json run(const Scenario& s, const RunOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    std::uint64_t seed = opt.seed_override.value_or(s.seed);
    Builder B(s);
    const auto& c = s.command;
    const int n = s.dim;

    json rep;
    rep["scenario"] = s.name;
    rep["command"] = c.verb;
    rep["seed"] = seed;
    json out;
    json warnings = json::array();
    TolClass cls = TolClass::Strict;

    auto apply_cls = [&](TolClass computed) {
        cls = opt.tol_class_override.value_or(computed);
    };

    if (c.verb == "fitz-eval" || c.verb == "sigma-eval") {
        const auto& T = B.op(cmd_ref(c, "T"));
        PrimalDualPoint p = cmd_point(c, n);
        Bifunction h = c.verb == "fitz-eval" ? Bifunction::fitzpatrick(T) : Bifunction::sigma(T);
        apply_cls(h.tol_class());
        out["value"] = ext_json(h.eval(p));
        if (h.lower_bound_only()) warnings.push_back("value is a lower bound (sampled graph)");
    } else if (c.verb == "conjugate") {
        std::string name = cmd_ref(c, "TARGET");
        if (B.fns.count(name)) {
            const auto& f = B.fn(name);
            ConvexFunction fs = f.conjugate();
            apply_cls(fs.tol_class());
            Vec at = cmd_vec(c, "AT", n);
            out["value"] = ext_json(fs.eval(at));
            if (fs.boundary_warning()) warnings.push_back("boundary touch: slope range truncated");
            if (!fs.valid_at(at)) warnings.push_back("requested slope outside the exact range");
        } else {
            const auto& h = B.bif(name);
            Bifunction hs = h.conjugate();
            apply_cls(hs.tol_class());
            Vec at = cmd_vec(c, "AT", 2 * n);
            out["value"] = ext_json(hs.eval_stacked(at));
            if (hs.core().boundary_warning())
                warnings.push_back("boundary touch: slope range truncated");
            if (!hs.core().valid_at(at)) warnings.push_back("requested slope outside the exact range");
        }
    } else if (c.verb == "check-family") {
        const auto& h = B.bif(cmd_ref(c, "H"));
        const auto& T = B.op(cmd_ref(c, "T"));
        apply_cls(h.tol_class());
        auto famrep = family_membership(h, T, cmd_grid(c), seed);
        out["member"] = famrep.ok;
        out["majorization_global"] = famrep.majorization_global;
        out["points_checked"] = famrep.points_checked;
        out["graph_points_checked"] = famrep.graph_points_checked;
        out["convexity_trials"] = famrep.convexity_trials;
        if (!famrep.ok) {
            out["failure"] = famrep.failure;
            if (famrep.witness) out["witness"] = point_json(*famrep.witness);
        }
        if (!famrep.majorization_global)
            warnings.push_back("lower-bound representation: majorization checked on graph only");
    } else if (c.verb == "dual-condition") {
        const auto& h = B.bif(cmd_ref(c, "H"));
        auto crep = check_dual_condition(h, cmd_grid(c));
        apply_cls(crep.tol_class);
        double t = tol::rep(cls);
        out["primal_min_gap"] = num_json(crep.primal_min_gap);
        out["dual_min_gap"] = num_json(crep.dual_min_gap);
        out["verdict"] = crep.primal_min_gap >= -t && crep.dual_min_gap >= -t;
        out["primal_witness"] = point_json(crep.primal_witness);
        out["dual_witness"] = point_json(crep.dual_witness);
        if (crep.boundary_warning) warnings.push_back("conjugate slope grid touches its boundary");
    } else if (c.verb == "fenchel-duality") {
        const auto& f = B.fn(cmd_ref(c, "F"));
        const auto& g = B.fn(cmd_ref(c, "G"));
        FenchelOptions fo;
        fo.box_radius = cmd_scalar(c, "R", 8.0);
        fo.nodes = static_cast<int>(cmd_scalar(c, "M", 8001));
        auto drep = fenchel_duality(f, g, fo);
        apply_cls(drep.tol_class);
        out["primal_value"] = drep.primal_value;
        out["dual_value"] = drep.dual_value;
        out["dual_maximizer"] = vec_json(drep.dual_maximizer);
        out["gap"] = drep.gap;
    } else if (c.verb == "eps-test") {
        const auto& f = B.fn(cmd_ref(c, "F"));
        PrimalDualPoint p = cmd_point(c, n);
        apply_cls(f.tol_class());
        double eps = cmd_scalar(c, "EPS");
        out["gap"] = ext_json(fenchel_young_gap(f, p));
        out["member"] = eps_subdiff_test(f, p, eps);
    } else if (c.verb == "enlargement-test") {
        const auto& T = B.op(cmd_ref(c, "T"));
        PrimalDualPoint p = cmd_point(c, n);
        apply_cls(T.kind() == OperatorKind::SampledGraph ? TolClass::Grid : TolClass::Strict);
        auto erep = eps_enlargement_test(T, p, cmd_scalar(c, "EPS"));
        out["inf"] = ext_json(erep.inf_value);
        out["member"] = erep.member;
    } else if (c.verb == "br-step") {
        const auto& h = B.bif(cmd_ref(c, "H"));
        PrimalDualPoint z = cmd_point(c, n);
        apply_cls(h.tol_class());
        PrimalDualPoint xt = br_step(h, z, cmd_scalar(c, "EPS"));
        out["point"] = point_json(xt);
        ExtReal hv = h.eval(xt);
        out["gap"] = ext_json(hv - ExtReal(duality_product(xt)));
        out["step_norm_x"] = (xt.x - z.x).norm();
        out["step_norm_xstar"] = (xt.xstar - z.xstar).norm();
    } else if (c.verb == "br-refine") {
        const auto& h = B.bif(cmd_ref(c, "H"));
        PrimalDualPoint p = cmd_point(c, n);
        apply_cls(h.tol_class());
        double eps = cmd_scalar(c, "EPS");
        double tg = cmd_scalar(c, "TOLGAP", tol::gap);
        RefinementTrace tr;
        if (c.params.count("LAMBDA"))
            tr = br_refine_scaled(h, p, eps, cmd_scalar(c, "LAMBDA"), tg);
        else
            tr = br_refine(h, p, eps, tg);
        out["trace"] = trace_json(tr);
        if (!opt.trace_out.empty()) write_trace_csv(opt.trace_out, tr, n);
    } else if (c.verb == "strict-br") {
        const auto& T = B.op(cmd_ref(c, "T"));
        PrimalDualPoint p = cmd_point(c, n);
        apply_cls(T.kind() == OperatorKind::SampledGraph ? TolClass::Grid : TolClass::Strict);
        auto res = strict_br(T, p, cmd_scalar(c, "EPS"), cmd_scalar(c, "ETA"), cmd_scalar(c, "LAMBDA"));
        out["point"] = point_json(res.point);
        out["enlargement_inf"] = ext_json(res.enlargement.inf_value);
        out["snap_distance"] = res.snap_distance;
        out["dist_x"] = (res.point.x - p.x).norm();
        out["dist_xstar"] = (res.point.xstar - p.xstar).norm();
        out["trace"] = trace_json(res.trace);
        if (!opt.trace_out.empty()) write_trace_csv(opt.trace_out, res.trace, n);
    } else if (c.verb == "maximality-probe") {
        const auto& h = B.bif(cmd_ref(c, "H"));
        PrimalDualPoint z = cmd_point(c, n);
        apply_cls(h.tol_class());
        auto sample = equality_graph_sample(h, cmd_grid(c, 2.0, 41));
        int budget = static_cast<int>(cmd_scalar(c, "BUDGET", tol::probe_budget));
        auto prep = maximality_probe(h, z, sample, budget);
        out["rejected"] = prep.rejected;
        out["precondition_inf"] = prep.precondition_inf;
        if (prep.rejected && prep.precondition_witness)
            out["witness"] = point_json(*prep.precondition_witness);
        out["verdict"] = prep.verdict;
        out["steps"] = prep.steps;
        if (!prep.distances.empty()) out["final_distance"] = prep.distances.back();
        if (prep.rejected) {
            rep["error"] = json{{"type", "precondition"},
                                {"message", "point is not monotonically related to the graph"}};
        }
    } else if (c.verb == "translate-check") {
        const auto& h = B.bif(cmd_ref(c, "H"));
        apply_cls(h.tol_class());
        Vec z = cmd_vec(c, "Z", n), zs = cmd_vec(c, "ZSTAR", n);
        int count = static_cast<int>(cmd_scalar(c, "COUNT", 100));
        TestGrid g = cmd_grid(c);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> unif(-g.R, g.R);
        std::vector<PrimalDualPoint> samples;
        for (int i = 0; i < count; ++i) {
            Vec a(n), b(n);
            for (int j = 0; j < n; ++j) {
                a(j) = unif(rng);
                b(j) = unif(rng);
            }
            samples.emplace_back(a, b);
        }
        auto trep = translation_conjugate_check(h, z, zs, samples, g);
        out["deviation"] = num_json(trep.deviation);
        out["independent_route"] = trep.independent_route;
        out["ok"] = trep.deviation <= tol::rep(cls);
    } else {
        throw ParseError(0, "unhandled verb " + c.verb);
    }

    for (const auto& [name, path] : opt.grid_exports) {
        if (B.fns.count(name))
            write_grid_csv(path, B.fn(name), B.fn(name).dim());
        else if (B.bifs.count(name))
            write_grid_csv(path, B.bif(name).core(), B.bif(name).n());
        else
            throw ParseError(0, "grid export: unknown object '" + name + "'");
    }

    rep["tol_class"] = cls_name(cls);
    rep["outputs"] = out;
    rep["warnings"] = warnings;
    rep["timing_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

}  // namespace fitzbr
