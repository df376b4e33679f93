#pragma once

// Experiment configuration: JSON documents (schema_version 1) and the short
// map grammar accepted by --map. Unknown keys are rejected; every error names
// the offending field as a JSON pointer, parse errors carry line:column.

#include <cctype>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "calabi/errors.hpp"
#include "calabi/harness.hpp"
#include "calabi/maps.hpp"
#include "calabi/orbits.hpp"

namespace calabi {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct OutputPaths {
    std::string report;      // text summary
    std::string json;        // structured report
    std::string orbits_csv;
    std::string plot_csv;
};

struct PlotSettings {
    int samples = 8;       // phase-portrait seeds on x = 0
    int iterations = 300;  // iterates per seed
};

struct NamedMeasure {
    std::string name;
    MeasureSpec spec;
};

struct ExperimentConfig {
    MapExpr map = MapExpr::rigid(0.0);
    ActionContext context = ActionContext::canonical();
    std::vector<NamedMeasure> measures;
    std::string mu1 = "boundary_upper";
    std::string mu2 = "boundary_lower";
    std::optional<int> q_max;
    std::vector<AnnulusPoint> points;
    std::uint64_t seed = 1;
    VerifyOptions verify{};
    OutputPaths output;
    PlotSettings plot;

    const MeasureSpec& measure(const std::string& name) const {
        for (const auto& m : measures)
            if (m.name == name) return m.spec;
        throw ConfigError("/task", "unknown measure '" + name + "'");
    }
};

namespace detail {

/// Typed, path-aware access to one JSON object.
class Fields {
public:
    Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "/" : path_, "expected an object");
    }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!ok.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }

    bool has(const char* key) const { return j_.contains(key); }
    std::string at(const std::string& key) const { return path_ + "/" + key; }
    const Json& raw(const char* key) const {
        if (!j_.contains(key)) throw ConfigError(at(key), "missing required key");
        return j_.at(key);
    }

    double number(const char* key) const {
        const Json& v = raw(key);
        if (!v.is_number()) throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }
    double number(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    long integer(const char* key) const {
        const Json& v = raw(key);
        if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v.get<long>();
    }
    long integer(const char* key, long fallback) const { return has(key) ? integer(key) : fallback; }

    std::string string(const char* key) const {
        const Json& v = raw(key);
        if (!v.is_string()) throw ConfigError(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string(const char* key, const std::string& fallback) const { return has(key) ? string(key) : fallback; }

    AnnulusPoint point(const char* key) const { return point_value(raw(key), at(key)); }

    static AnnulusPoint point_value(const Json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(path, "expected [x, y]");
        try {
            return AnnulusPoint(v[0].get<double>(), v[1].get<double>());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(path, e.what());
        }
    }

private:
    const Json& j_;
    std::string path_;
};

inline TwistProfile parse_profile(const Json& j, const std::string& path) {
    Fields f(j, path);
    const std::string kind = f.string("kind");
    if (kind == "linear") {
        f.allow({"kind", "slope"});
        return TwistProfile::linear(f.number("slope", 1.0));
    }
    if (kind == "bump") {
        f.allow({"kind", "c"});
        return TwistProfile::bump(f.number("c"));
    }
    if (kind == "tabulated") {
        f.allow({"kind", "values"});
        const Json& v = f.raw("values");
        if (!v.is_array()) throw ConfigError(f.at("values"), "expected an array of numbers");
        std::vector<double> values;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError(f.at("values") + "/" + std::to_string(i), "expected a number");
            values.push_back(v[i].get<double>());
        }
        try {
            return TwistProfile::tabulated(std::move(values));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(f.at("values"), e.what());
        }
    }
    throw ConfigError(f.at("kind"), "unknown twist profile '" + kind + "' (linear, bump, tabulated)");
}

}  // namespace detail

inline MapExpr map_from_json(const Json& j, const std::string& path = "/map") {
    detail::Fields f(j, path);
    const std::string type = f.string("type");
    try {
        if (type == "rigid") {
            f.allow({"type", "a"});
            return MapExpr::rigid(f.number("a"));
        }
        if (type == "twist") {
            f.allow({"type", "profile"});
            return MapExpr::twist(f.has("profile") ? detail::parse_profile(f.raw("profile"), f.at("profile"))
                                                   : TwistProfile::linear());
        }
        if (type == "local_disk_twist") {
            f.allow({"type", "center", "radius", "c"});
            return MapExpr::local_disk_twist(f.point("center"), f.number("radius"), RadialProfile{f.number("c")});
        }
        if (type == "compose") {
            f.allow({"type", "outer", "inner"});
            return MapExpr::compose(map_from_json(f.raw("outer"), f.at("outer")),
                                    map_from_json(f.raw("inner"), f.at("inner")));
        }
        if (type == "iterate") {
            f.allow({"type", "base", "k"});
            return MapExpr::iterate(map_from_json(f.raw("base"), f.at("base")), static_cast<int>(f.integer("k")));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path, e.what());
    }
    throw ConfigError(f.at("type"), "unknown map type '" + type + "' (rigid, twist, local_disk_twist, compose, iterate)");
}

inline Json map_to_json(const MapExpr& m) {
    return std::visit(
        overloaded{
            [](const RigidRotation& r) { return Json{{"type", "rigid"}, {"a", r.a}}; },
            [](const Twist& t) {
                Json prof = std::visit(
                    overloaded{
                        [](const LinearTwist& l) { return Json{{"kind", "linear"}, {"slope", l.slope}}; },
                        [](const BumpTwist& b) { return Json{{"kind", "bump"}, {"c", b.c}}; },
                        [](const TabulatedTwist& tt) { return Json{{"kind", "tabulated"}, {"values", tt.values}}; },
                    },
                    t.profile.variant());
                return Json{{"type", "twist"}, {"profile", prof}};
            },
            [](const LocalDiskTwist& d) {
                return Json{{"type", "local_disk_twist"},
                            {"center", {d.center.x(), d.center.y()}},
                            {"radius", d.radius},
                            {"c", d.profile.c}};
            },
            [](const Compose& c) {
                return Json{{"type", "compose"}, {"outer", map_to_json(c.outer)}, {"inner", map_to_json(c.inner)}};
            },
            [](const Iterate& it) { return Json{{"type", "iterate"}, {"base", map_to_json(it.base)}, {"k", it.k}}; },
        },
        m.node().v);
}

namespace detail {

/// Recursive-descent parser for the --map grammar:
///   expr   := factor ('*' factor)*          A*B is A o B (B applied first)
///   factor := atom ('^' integer)?
///   atom   := '(' expr ')' | name (':' args)?
///   args   := item (',' item)*,  item := word | key '=' number
class MapGrammar {
public:
    explicit MapGrammar(std::string text) : s_(std::move(text)) {}

    MapExpr parse() {
        MapExpr m = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return m;
    }

private:
    std::string s_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("--map", what + " at column " + std::to_string(pos_ + 1) + " of '" + s_ + "'");
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    std::string word() {
        skip();
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        if (start == pos_) fail("expected a name");
        return s_.substr(start, pos_ - start);
    }
    double number() {
        skip();
        const char* begin = s_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number");
        pos_ += static_cast<std::size_t>(end - begin);
        return v;
    }

    MapExpr expr() {
        MapExpr m = factor();
        if (eat('*')) return MapExpr::compose(m, expr());
        return m;
    }
    MapExpr factor() {
        MapExpr m = atom();
        if (eat('^')) {
            const double k = number();
            if (k != static_cast<int>(k) || k < 1) fail("iterate exponent must be a positive integer");
            m = MapExpr::iterate(m, static_cast<int>(k));
        }
        return m;
    }
    MapExpr atom() {
        if (eat('(')) {
            MapExpr m = expr();
            if (!eat(')')) fail("expected ')'");
            return m;
        }
        const std::string name = word();
        std::vector<std::string> flags;
        std::vector<std::pair<std::string, double>> kv;
        if (eat(':')) {
            do {
                std::string key = word();
                if (eat('='))
                    kv.emplace_back(key, number());
                else
                    flags.push_back(key);
            } while (eat(','));
        }
        auto get = [&](const std::string& key, std::optional<double> fallback = std::nullopt) {
            for (const auto& [k, v] : kv)
                if (k == key) return v;
            if (!fallback) fail(name + ": missing parameter " + key);
            return *fallback;
        };
        auto only = [&](std::initializer_list<const char*> keys, std::initializer_list<const char*> words) {
            for (const auto& [k, v] : kv)
                if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
                    fail(name + ": unknown parameter " + k);
            for (const auto& w : flags)
                if (std::none_of(words.begin(), words.end(), [&](const char* a) { return w == a; }))
                    fail(name + ": unknown option " + w);
        };
        try {
            if (name == "rigid") {
                only({"a"}, {});
                return MapExpr::rigid(get("a"));
            }
            if (name == "twist") {
                only({"slope", "c"}, {"linear", "bump"});
                const bool bump = std::find(flags.begin(), flags.end(), "bump") != flags.end();
                return MapExpr::twist(bump ? TwistProfile::bump(get("c")) : TwistProfile::linear(get("slope", 1.0)));
            }
            if (name == "disk") {
                only({"x", "y", "R", "c"}, {});
                return MapExpr::local_disk_twist(AnnulusPoint(get("x"), get("y")), get("R"), RadialProfile{get("c")});
            }
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        fail("unknown map '" + name + "' (rigid, twist, disk)");
    }
};

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

inline MeasureSpec parse_measure(const Json& j, const std::string& path, const MapExpr& m, const SearchConfig& cfg) {
    Fields f(j, path);
    const std::string type = f.string("type");
    if (type == "boundary_lower" || type == "boundary_upper" || type == "area") {
        f.allow({"type"});
        return type == "area" ? MeasureSpec::area()
                              : type == "boundary_lower" ? MeasureSpec::boundary_lower() : MeasureSpec::boundary_upper();
    }
    if (type == "empirical") {
        f.allow({"type", "seed", "n_iter"});
        const long n = f.integer("n_iter", 1'000'000);
        if (n < 1000) throw ConfigError(f.at("n_iter"), "must be >= 1000");
        return MeasureSpec::empirical(f.point("seed"), n);
    }
    if (type == "orbit") {
        f.allow({"type", "q", "p", "point"});
        const long q = f.integer("q");
        if (q < 1) throw ConfigError(f.at("q"), "must be >= 1");
        try {
            return MeasureSpec::orbit(orbit_from_point(m, f.point("point"), static_cast<int>(q), f.integer("p"), cfg));
        } catch (const NonConvergent& e) {
            throw ConfigError(path, std::string("no certified orbit from the given point: ") + e.what());
        }
    }
    throw ConfigError(f.at("type"), "unknown measure type '" + type +
                                        "' (boundary_lower, boundary_upper, area, empirical, orbit)");
}

inline void parse_search(const Json& j, SearchConfig& s) {
    Fields f(j, "/search");
    f.allow({"grid", "max_grid", "newton_max_steps", "newton_max_step", "dedup_tolerance", "margin",
             "max_degenerate_representatives", "extra_seeds"});
    s.grid = static_cast<int>(f.integer("grid", s.grid));
    s.max_grid = static_cast<int>(f.integer("max_grid", std::max<long>(s.max_grid, s.grid)));
    s.newton_max_steps = static_cast<int>(f.integer("newton_max_steps", s.newton_max_steps));
    s.newton_damping = f.number("newton_max_step", s.newton_damping);
    s.dedup_tolerance = f.number("dedup_tolerance", s.dedup_tolerance);
    s.margin = f.number("margin", s.margin);
    s.max_degenerate_representatives =
        static_cast<int>(f.integer("max_degenerate_representatives", s.max_degenerate_representatives));
    if (f.has("extra_seeds")) {
        const Json& v = f.raw("extra_seeds");
        if (!v.is_array()) throw ConfigError(f.at("extra_seeds"), "expected an array of [x, y]");
        for (std::size_t i = 0; i < v.size(); ++i)
            s.extra_seeds.push_back(Fields::point_value(v[i], f.at("extra_seeds") + "/" + std::to_string(i)));
    }
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/search", e.what());
    }
}

inline void parse_quadrature(const Json& j, ActionSettings& a) {
    Fields f(j, "/quadrature");
    f.allow({"points", "initial_panels", "max_panels", "max_cells", "tolerance", "line_points", "line_tolerance", "birkhoff_n_iter",
             "birkhoff_tolerance"});
    a.area.points = static_cast<int>(f.integer("points", a.area.points));
    if (a.area.points != 3 && a.area.points != 4 && a.area.points != 5 && a.area.points != 8 && a.area.points != 10)
        throw ConfigError(f.at("points"), "supported Gauss rules: 3, 4, 5, 8, 10");
    a.area.initial_panels = static_cast<int>(f.integer("initial_panels", a.area.initial_panels));
    a.area.max_panels = static_cast<int>(f.integer("max_panels", a.area.max_panels));
    if (a.area.initial_panels < 1 || a.area.max_panels < a.area.initial_panels)
        throw ConfigError(f.at("max_panels"), "need 1 <= initial_panels <= max_panels");
    a.area.max_cells = static_cast<int>(f.integer("max_cells", a.area.max_cells));
    if (a.area.max_cells < a.area.initial_panels * a.area.initial_panels)
        throw ConfigError(f.at("max_cells"), "must cover the initial grid");
    a.area.tolerance = f.number("tolerance", a.area.tolerance);
    a.line.points = static_cast<int>(f.integer("line_points", a.line.points));
    a.line.tolerance = f.number("line_tolerance", a.line.tolerance);
    a.birkhoff.n_iter = f.integer("birkhoff_n_iter", a.birkhoff.n_iter);
    a.birkhoff.tolerance = f.number("birkhoff_tolerance", a.birkhoff.tolerance);
    if (!(a.area.tolerance > 0.0) || !(a.line.tolerance > 0.0) || !(a.birkhoff.tolerance > 0.0))
        throw ConfigError("/quadrature", "tolerances must be positive");
    if (a.birkhoff.n_iter < 1000) throw ConfigError(f.at("birkhoff_n_iter"), "must be >= 1000");
}

}  // namespace detail

inline MapExpr parse_map_spec(const std::string& text) { return detail::MapGrammar(text).parse(); }

/// Builds a config from a parsed document.
inline ExperimentConfig config_from_json(const Json& doc) {
    detail::Fields top(doc, "");
    top.allow({"schema_version", "map", "context", "measures", "search", "quadrature", "task", "output", "plot", "seed"});
    if (top.integer("schema_version") != kSchemaVersion)
        throw ConfigError("/schema_version", "unsupported schema version (expected 1)");

    ExperimentConfig cfg;
    cfg.map = map_from_json(top.raw("map"));
    if (top.has("context")) {
        detail::Fields f(top.raw("context"), "/context");
        f.allow({"beta_shift"});
        if (f.has("beta_shift")) cfg.context = ActionContext::shifted(f.number("beta_shift"));
    }
    if (top.has("search")) detail::parse_search(top.raw("search"), cfg.verify.search);
    if (top.has("quadrature")) detail::parse_quadrature(top.raw("quadrature"), cfg.verify.action);
    if (top.has("seed")) {
        const long s = top.integer("seed");
        if (s < 0) throw ConfigError("/seed", "must be non-negative");
        cfg.seed = static_cast<std::uint64_t>(s);
    }

    cfg.measures = {{"boundary_lower", MeasureSpec::boundary_lower()},
                    {"boundary_upper", MeasureSpec::boundary_upper()},
                    {"area", MeasureSpec::area()}};
    if (top.has("measures")) {
        const Json& ms = top.raw("measures");
        if (!ms.is_object()) throw ConfigError("/measures", "expected an object of named measures");
        for (auto it = ms.begin(); it != ms.end(); ++it) {
            const std::string path = "/measures/" + it.key();
            MeasureSpec spec = detail::parse_measure(it.value(), path, cfg.map, cfg.verify.search);
            auto same = std::find_if(cfg.measures.begin(), cfg.measures.end(),
                                     [&](const NamedMeasure& m) { return m.name == it.key(); });
            if (same != cfg.measures.end())
                same->spec = spec;
            else
                cfg.measures.push_back({it.key(), spec});
        }
    }

    if (top.has("task")) {
        detail::Fields f(top.raw("task"), "/task");
        f.allow({"mu1", "mu2", "q_max", "points"});
        cfg.mu1 = f.string("mu1", cfg.mu1);
        cfg.mu2 = f.string("mu2", cfg.mu2);
        if (f.has("q_max")) {
            const long q = f.integer("q_max");
            if (q < 1) throw ConfigError(f.at("q_max"), "must be >= 1");
            cfg.q_max = static_cast<int>(q);
        }
        if (f.has("points")) {
            const Json& v = f.raw("points");
            if (!v.is_array()) throw ConfigError(f.at("points"), "expected an array of [x, y]");
            for (std::size_t i = 0; i < v.size(); ++i)
                cfg.points.push_back(detail::Fields::point_value(v[i], f.at("points") + "/" + std::to_string(i)));
        }
    }
    for (const auto* name : {&cfg.mu1, &cfg.mu2})
        if (std::none_of(cfg.measures.begin(), cfg.measures.end(),
                         [&](const NamedMeasure& m) { return m.name == *name; }))
            throw ConfigError(name == &cfg.mu1 ? "/task/mu1" : "/task/mu2", "unknown measure '" + *name + "'");

    if (top.has("output")) {
        detail::Fields f(top.raw("output"), "/output");
        f.allow({"report", "json", "orbits_csv", "plot_csv"});
        cfg.output = {f.string("report", ""), f.string("json", ""), f.string("orbits_csv", ""), f.string("plot_csv", "")};
    }
    if (top.has("plot")) {
        detail::Fields f(top.raw("plot"), "/plot");
        f.allow({"samples", "iterations"});
        cfg.plot.samples = static_cast<int>(f.integer("samples", cfg.plot.samples));
        cfg.plot.iterations = static_cast<int>(f.integer("iterations", cfg.plot.iterations));
        if (cfg.plot.samples < 0 || cfg.plot.iterations < 0) throw ConfigError("/plot", "counts must be non-negative");
    }
    return cfg;
}

/// Parses JSON text; syntax errors are reported as line:column.
inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        std::ostringstream os;
        os << source << ":" << line << ":" << col << ": JSON syntax error";
        throw ConfigError("", os.str());
    }
    return config_from_json(doc);
}

}  // namespace calabi
