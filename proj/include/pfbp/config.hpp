#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "classify.hpp"
#include "critical.hpp"
#include "csv.hpp"
#include "eigen.hpp"
#include "errors.hpp"
#include "fbp.hpp"
#include "periodic.hpp"
#include "semiwave.hpp"

namespace pfbp {

inline constexpr int kConfigSchema = 1;

enum class KeyType { Real, Count, Flag, Text, Coefficient, Choice };
enum class Constraint { None, Positive, NonNegative, AtLeast };

struct KeySpec {
    std::string key;          // full dotted name
    KeyType type;
    std::string fallback;     // default, as text
    Constraint constraint = Constraint::None;
    double bound = 0.0;       // for AtLeast
    std::vector<std::string> choices = {};
};

/// Every recognised key with its default. Section keys are "section.name";
/// top-level keys have no dot.
inline const std::vector<KeySpec>& config_schema()
{
    static const std::vector<KeySpec> keys = {
        {"schema", KeyType::Count, "1"},
        {"task", KeyType::Choice, "", Constraint::None, 0.0,
         {"", "eigen", "semiwave", "critical", "simulate", "classify", "threshold", "sweep", "validate"}},
        {"horizonPeriods", KeyType::Real, "60", Constraint::Positive},
        {"snapshotEveryPeriods", KeyType::Count, "1", Constraint::AtLeast, 1},
        {"samplesPerPeriod", KeyType::Count, "16", Constraint::AtLeast, 1},
        {"maxExtensions", KeyType::Count, "4"},

        {"problem.T", KeyType::Real, "1", Constraint::Positive},
        {"problem.beta", KeyType::Coefficient, "const 0"},
        {"problem.mu", KeyType::Coefficient, "const 1"},
        {"problem.reaction", KeyType::Choice, "logistic", Constraint::None, 0.0, {"logistic"}},
        {"problem.a", KeyType::Coefficient, "const 1"},
        {"problem.b", KeyType::Coefficient, "const 1"},

        {"grid.nodes", KeyType::Count, "256", Constraint::AtLeast, 64},
        {"grid.nxi", KeyType::Count, "1024", Constraint::AtLeast, 64},
        {"grid.dtfrac", KeyType::Count, "1024", Constraint::AtLeast, 16},
        {"grid.eigen_nodes", KeyType::Count, "512", Constraint::AtLeast, 64},
        {"grid.eigen_steps", KeyType::Count, "512", Constraint::AtLeast, 64},
        {"grid.eigen_richardson", KeyType::Flag, "true"},
        {"grid.semiwave_nodes_per_unit", KeyType::Real, "256", Constraint::Positive},
        {"grid.semiwave_steps", KeyType::Count, "512", Constraint::AtLeast, 64},
        {"grid.truncation_radius", KeyType::Real, "10", Constraint::Positive},

        {"tol.eigen", KeyType::Real, "1e-10", Constraint::Positive},
        {"tol.critical_length", KeyType::Real, "1e-6", Constraint::Positive},
        {"tol.period", KeyType::Real, "1e-8", Constraint::Positive},
        {"tol.truncation", KeyType::Real, "1e-6", Constraint::Positive},
        {"tol.speed", KeyType::Real, "1e-5", Constraint::Positive},
        {"tol.critical_average", KeyType::Real, "1e-3", Constraint::Positive},
        {"tol.velocity", KeyType::Real, "1e-3", Constraint::Positive},

        {"init.h0", KeyType::Real, "2", Constraint::Positive},
        {"init.phi", KeyType::Choice, "cos", Constraint::None, 0.0, {"cos"}},
        {"init.sigma", KeyType::Real, "1", Constraint::NonNegative},

        {"classify.window", KeyType::Real, "10", Constraint::Positive},
        {"classify.extinction", KeyType::Real, "1e-4", Constraint::Positive},
        {"classify.near", KeyType::Real, "1e-2", Constraint::Positive},
        {"classify.escape", KeyType::Real, "20", Constraint::Positive},
        {"classify.front_rest", KeyType::Real, "1e-3", Constraint::Positive},
        {"classify.length_cells", KeyType::Real, "3", Constraint::NonNegative},
        {"classify.min_periods", KeyType::Real, "1", Constraint::NonNegative},

        {"task.k", KeyType::Coefficient, "const 0"},
        {"task.ell", KeyType::Real, "3.141592653589793", Constraint::Positive},
        {"task.kind", KeyType::Choice, "halfline", Constraint::None, 0.0, {"halfline", "dd0", "dd1"}},
        {"task.critical_length", KeyType::Flag, "true"},
        {"task.omega", KeyType::Coefficient, "const 0"},
        {"task.beta_star", KeyType::Flag, "false"},
        {"task.stop_early", KeyType::Flag, "false"},
        {"task.asymptotics", KeyType::Flag, "true"},

        {"threshold.sigma_low", KeyType::Real, "0.1", Constraint::Positive},
        {"threshold.sigma_high", KeyType::Real, "10", Constraint::Positive},
        {"threshold.rel_tol", KeyType::Real, "1e-2", Constraint::Positive},
        {"threshold.budget", KeyType::Count, "40", Constraint::AtLeast, 2},
        {"threshold.expand", KeyType::Real, "4", Constraint::AtLeast, 1.0 + 1e-9},
        {"threshold.max_expansions", KeyType::Count, "6"},

        {"sweep.task", KeyType::Choice, "classify", Constraint::None, 0.0,
         {"eigen", "semiwave", "critical", "simulate", "classify", "threshold", "validate"}},

        {"output.dir", KeyType::Text, ""},
        {"output.snapshots", KeyType::Flag, "true"},
        {"output.profile_stride", KeyType::Count, "4", Constraint::AtLeast, 1},
    };
    return keys;
}

inline const KeySpec* find_key(std::string_view key)
{
    for (const auto& k : config_schema())
        if (k.key == key)
            return &k;
    return nullptr;
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::size_t edit_distance(std::string_view a, std::string_view b)
{
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string last_component(std::string_view key)
{
    const auto dot = key.rfind('.');
    return std::string(dot == std::string_view::npos ? key : key.substr(dot + 1));
}

inline std::string section_of(std::string_view key)
{
    const auto dot = key.find('.');
    return dot == std::string_view::npos ? std::string() : std::string(key.substr(0, dot));
}

inline std::string suggest(std::string_view key)
{
    const std::string sec = section_of(key);
    const std::string name = last_component(key);
    std::string best;
    std::size_t bd = 4;
    for (const auto& k : config_schema()) {
        const std::size_t d = section_of(k.key) == sec ? edit_distance(name, last_component(k.key))
                                                       : edit_distance(key, k.key);
        if (d < bd)
            bd = d, best = k.key;
    }
    return best;
}

inline std::optional<double> to_real(std::string_view s)
{
    double v = 0.0;
    const auto t = trim(s);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

inline std::optional<std::size_t> to_count(std::string_view s)
{
    std::size_t v = 0;
    const auto t = trim(s);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        return std::nullopt;
    return v;
}

inline std::optional<bool> to_flag(std::string_view s)
{
    const auto t = trim(s);
    if (t == "true" || t == "yes" || t == "1" || t == "on")
        return true;
    if (t == "false" || t == "no" || t == "0" || t == "off")
        return false;
    return std::nullopt;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& key, const std::string& what)
{
    std::string msg = line ? "line " + std::to_string(line) + ": " : std::string();
    if (!key.empty())
        msg += "key '" + key + "': ";
    throw Error(ErrorCode::ParseError, msg + what);
}

[[noreturn]] inline void invalid(const std::string& key, const std::string& what)
{
    throw Error(ErrorCode::ValidationError, key + ": " + what);
}

// name {k=v, k=v} or name period=.. {v, v, ...}
struct CoefficientText {
    std::string head;                  // "const 2", "sin-offset", "samples period=1"
    std::vector<std::string> items;    // brace contents split on commas
    bool braces = false;
};

inline CoefficientText split_coefficient(std::string_view text)
{
    CoefficientText c;
    const auto open = text.find('{');
    if (open == std::string_view::npos) {
        c.head = trim(text);
        return c;
    }
    const auto close = text.rfind('}');
    if (close == std::string_view::npos || close < open || !trim(text.substr(close + 1)).empty())
        throw Error(ErrorCode::ParseError, "unbalanced braces in '" + std::string(text) + "'");
    c.braces = true;
    c.head = trim(text.substr(0, open));
    std::string_view body = text.substr(open + 1, close - open - 1);
    while (!body.empty()) {
        const auto comma = body.find(',');
        const std::string item = trim(body.substr(0, comma));
        if (!item.empty())
            c.items.push_back(item);
        if (comma == std::string_view::npos)
            break;
        body.remove_prefix(comma + 1);
    }
    return c;
}

} // namespace detail

/// Build a coefficient from its config text:
///   const V
///   sin-offset {mean=M, amp=A, harmonics=N}     M + A sin(2 pi N t / T)
///   samples period=T {v0, v1, ...}               uniform samples on [0, T)
inline PeriodicFn parse_coefficient(std::string_view text, double T, std::size_t nodes)
{
    using detail::to_real;
    const auto c = detail::split_coefficient(text);
    std::istringstream head(c.head);
    std::string name;
    head >> name;
    if (name == "const") {
        std::string v;
        head >> v;
        const auto x = to_real(v);
        if (!x || c.braces)
            throw Error(ErrorCode::ParseError, "expected 'const <number>', got '" + std::string(text) + "'");
        return PeriodicFn::constant(T, *x, nodes);
    }
    if (name == "sin-offset") {
        double mean = 0.0, amp = 0.0, harm = 1.0;
        for (const auto& item : c.items) {
            const auto eq = item.find('=');
            const std::string k = detail::trim(std::string_view(item).substr(0, eq));
            const auto v = eq == std::string::npos ? std::nullopt : to_real(std::string_view(item).substr(eq + 1));
            if (!v)
                throw Error(ErrorCode::ParseError, "bad sin-offset entry '" + item + "'");
            if (k == "mean")
                mean = *v;
            else if (k == "amp")
                amp = *v;
            else if (k == "harmonics" && *v >= 1.0 && std::floor(*v) == *v)
                harm = *v;
            else
                throw Error(ErrorCode::ParseError, "bad sin-offset entry '" + item + "'");
        }
        return PeriodicFn::sinusoid(T, mean, amp, static_cast<int>(harm), nodes);
    }
    if (name == "samples") {
        std::string decl;
        head >> decl;
        if (decl.rfind("period=", 0) != 0 || !c.braces)
            throw Error(ErrorCode::ParseError, "expected 'samples period=<T> {v0, v1, ...}'");
        const auto period = to_real(std::string_view(decl).substr(7));
        if (!period)
            throw Error(ErrorCode::ParseError, "bad sample period in '" + decl + "'");
        if (std::abs(*period - T) > 1e-12 * T)
            throw Error(ErrorCode::ValidationError, "sample period " + format_double(*period) +
                                                        " differs from problem.T = " + format_double(T));
        std::vector<double> v;
        for (const auto& item : c.items) {
            const auto x = to_real(item);
            if (!x)
                throw Error(ErrorCode::ParseError, "bad sample value '" + item + "'");
            v.push_back(*x);
        }
        if (v.size() < kMinPeriodicNodes)
            throw Error(ErrorCode::ValidationError, "sampled coefficients need at least 16 values per period");
        PeriodicFn raw(T, std::move(v));
        return raw.size() == nodes ? raw : raw.resampled(nodes);
    }
    throw Error(ErrorCode::ParseError, "unknown coefficient form '" + std::string(text) + "'");
}

/// One swept parameter: every value is substituted for the key.
struct SweepAxis {
    std::string key;
    std::vector<std::string> values;
};

/// A validated configuration: every schema key has a value (given or default).
class RunConfig {
public:
    std::map<std::string, std::string> values;
    std::vector<SweepAxis> sweep;

    const std::string& text(const std::string& key) const { return values.at(key); }
    double real(const std::string& key) const { return *detail::to_real(values.at(key)); }
    std::size_t count(const std::string& key) const { return *detail::to_count(values.at(key)); }
    bool flag(const std::string& key) const { return *detail::to_flag(values.at(key)); }

    double period() const { return real("problem.T"); }
    PeriodicFn coefficient(const std::string& key) const
    {
        return parse_coefficient(text(key), period(), count("grid.nodes"));
    }

    Reaction reaction() const
    {
        return Reaction::logistic(coefficient("problem.a"), coefficient("problem.b"));
    }

    Problem problem() const
    {
        PeriodicStateOptions po;
        po.nodes = count("grid.nodes");
        return Problem{coefficient("problem.beta"), coefficient("problem.mu"), with_periodic_state(reaction(), po)};
    }

    EigenGrid eigen_grid() const
    {
        EigenGrid g;
        g.nodes = count("grid.eigen_nodes");
        g.steps = count("grid.eigen_steps");
        g.richardson = flag("grid.eigen_richardson");
        g.tolerance = real("tol.eigen");
        return g;
    }

    SemiWaveGrid semiwave_grid() const
    {
        SemiWaveGrid g;
        g.nodes_per_unit = real("grid.semiwave_nodes_per_unit");
        g.steps = count("grid.semiwave_steps");
        g.period_tolerance = real("tol.period");
        g.truncation_radius = real("grid.truncation_radius");
        g.truncation_tolerance = real("tol.truncation");
        return g;
    }

    SpeedOptions speed_options() const
    {
        SpeedOptions o;
        o.tolerance = real("tol.speed");
        o.grid = semiwave_grid();
        return o;
    }

    CriticalAverageOptions critical_options() const
    {
        CriticalAverageOptions o;
        o.tolerance = real("tol.critical_average");
        o.speed = speed_options();
        return o;
    }

    FbpGrid fbp_grid() const
    {
        FbpGrid g;
        g.nxi = count("grid.nxi");
        g.steps_per_period = count("grid.dtfrac");
        g.velocity_tolerance = real("tol.velocity");
        return g;
    }

    SamplingPolicy sampling() const
    {
        return {count("samplesPerPeriod"), count("snapshotEveryPeriods")};
    }

    ClassifyThresholds thresholds() const
    {
        ClassifyThresholds t;
        t.window = real("classify.window");
        t.extinction = real("classify.extinction");
        t.near_state = real("classify.near");
        t.escape = real("classify.escape");
        t.front_rest = real("classify.front_rest");
        t.length_cells = real("classify.length_cells");
        t.min_periods = real("classify.min_periods");
        return t;
    }

    RunOptions run_options() const
    {
        RunOptions o;
        o.horizon_periods = real("horizonPeriods");
        o.max_extensions = count("maxExtensions");
        o.grid = fbp_grid();
        o.sampling = sampling();
        o.thresholds = thresholds();
        return o;
    }

    ThresholdOptions threshold_options() const
    {
        ThresholdOptions o;
        o.sigma_low = real("threshold.sigma_low");
        o.sigma_high = real("threshold.sigma_high");
        o.rel_tol = real("threshold.rel_tol");
        o.budget = count("threshold.budget");
        o.expand = real("threshold.expand");
        o.max_expansions = count("threshold.max_expansions");
        o.run = run_options();
        return o;
    }

    InitialData initial_data() const { return InitialData::cosine(real("init.h0"), real("init.sigma")); }

    /// Canonical text with every key, parseable by parse_config.
    std::string echo() const
    {
        std::ostringstream out;
        out << "# resolved configuration (defaults filled)\n";
        std::string section = "\x01";
        std::vector<const KeySpec*> order;
        for (const auto& k : config_schema())
            if (detail::section_of(k.key).empty())
                order.push_back(&k);
        for (const auto& k : config_schema())
            if (!detail::section_of(k.key).empty())
                order.push_back(&k);
        for (const KeySpec* k : order) {
            const std::string sec = detail::section_of(k->key);
            if (sec != section) {
                if (!sec.empty())
                    out << "\n[" << sec << "]\n";
                section = sec;
            }
            out << (sec.empty() ? k->key : detail::last_component(k->key)) << " = " << values.at(k->key) << '\n';
            if (k->key != "sweep.task")
                continue;
            for (const auto& axis : sweep) {
                out << axis.key.substr(6) << " = ";
                for (std::size_t i = 0; i < axis.values.size(); ++i)
                    out << (i ? " | " : "") << axis.values[i];
                out << '\n';
            }
        }
        return out.str();
    }

    /// Copy with one key replaced (and revalidated).
    RunConfig with(const std::string& key, const std::string& value) const;
};

namespace detail {

inline void check_value(const KeySpec& spec, const std::string& value, std::size_t line)
{
    auto range = [&](double v) {
        switch (spec.constraint) {
        case Constraint::Positive:
            if (!(v > 0.0))
                invalid(spec.key, "must satisfy " + last_component(spec.key) + " > 0 (got " + value + ")");
            break;
        case Constraint::NonNegative:
            if (v < 0.0)
                invalid(spec.key, "must satisfy " + last_component(spec.key) + " >= 0 (got " + value + ")");
            break;
        case Constraint::AtLeast:
            if (v < spec.bound)
                invalid(spec.key, "must satisfy " + last_component(spec.key) + " >= " + format_double(spec.bound) +
                                      " (got " + value + ")");
            break;
        case Constraint::None: break;
        }
    };
    switch (spec.type) {
    case KeyType::Real: {
        const auto v = to_real(value);
        if (!v)
            parse_fail(line, spec.key, "expected a number, got '" + value + "'");
        range(*v);
        break;
    }
    case KeyType::Count: {
        const auto v = to_count(value);
        if (!v)
            parse_fail(line, spec.key, "expected a nonnegative integer, got '" + value + "'");
        range(static_cast<double>(*v));
        break;
    }
    case KeyType::Flag:
        if (!to_flag(value))
            parse_fail(line, spec.key, "expected true or false, got '" + value + "'");
        break;
    case KeyType::Choice:
        if (std::find(spec.choices.begin(), spec.choices.end(), value) == spec.choices.end()) {
            std::string opts;
            for (const auto& c : spec.choices)
                if (!c.empty())
                    opts += (opts.empty() ? "" : ", ") + c;
            parse_fail(line, spec.key, "expected one of {" + opts + "}, got '" + value + "'");
        }
        break;
    case KeyType::Text:
    case KeyType::Coefficient: break;
    }
}

inline void validate_config(RunConfig& cfg)
{
    if (cfg.count("schema") != static_cast<std::size_t>(kConfigSchema))
        invalid("schema", "unsupported schema version " + cfg.text("schema"));
    // Coefficients parse against the final T and node count.
    for (const auto& k : config_schema()) {
        if (k.type != KeyType::Coefficient)
            continue;
        try {
            (void)cfg.coefficient(k.key);
        } catch (const Error& e) {
            throw Error(e.code(), k.key + ": " + e.message());
        }
    }
    if (!(cfg.real("threshold.sigma_high") > cfg.real("threshold.sigma_low")))
        invalid("threshold.sigma_high", "must satisfy sigma_high > sigma_low");
    for (const auto& axis : cfg.sweep) {
        const KeySpec* spec = find_key(axis.key.substr(6));
        for (const auto& v : axis.values) {
            check_value(*spec, v, 0);
            if (spec->type == KeyType::Coefficient)
                (void)parse_coefficient(v, cfg.period(), cfg.count("grid.nodes"));
        }
    }
}

} // namespace detail

/// Parse the key = value configuration format:
///   # comment
///   key = value             top-level or dotted (grid.nxi = 512)
///   [section]               following keys read as section.key
/// Sweep axes live in [sweep] as dotted keys with values separated by '|'.
inline RunConfig parse_config(std::string_view text)
{
    RunConfig cfg;
    std::map<std::string, std::size_t> seen;
    std::string section;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view raw = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim(raw.substr(0, hash));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                detail::parse_fail(line_no, "", "malformed section header '" + line + "'");
            section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
            static const char* sections[] = {"problem", "grid", "tol", "init", "classify", "task",
                                             "threshold", "sweep", "output"};
            if (std::find(std::begin(sections), std::end(sections), section) == std::end(sections))
                detail::parse_fail(line_no, "", "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            detail::parse_fail(line_no, "", "expected 'key = value', got '" + line + "'");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            detail::parse_fail(line_no, "", "missing key");
        const std::string full = section.empty() ? key : section + "." + key;
        if (seen.count(full))
            detail::parse_fail(line_no, full, "duplicate key (first set on line " + std::to_string(seen[full]) + ")");
        seen[full] = line_no;

        if (full.rfind("sweep.", 0) == 0 && full != "sweep.task") {
            const std::string target = full.substr(6);
            const KeySpec* spec = find_key(target);
            if (!spec || detail::section_of(target) == "sweep" || detail::section_of(target) == "output") {
                const std::string hint = detail::suggest(target);
                detail::parse_fail(line_no, full,
                                   "cannot sweep unknown key" + (hint.empty() ? "" : "; did you mean '" + hint + "'?"));
            }
            SweepAxis axis{full, {}};
            std::string_view rest = value;
            while (true) {
                const auto bar = rest.find('|');
                const std::string item = detail::trim(rest.substr(0, bar));
                if (item.empty())
                    detail::parse_fail(line_no, full, "empty sweep value");
                axis.values.push_back(item);
                if (bar == std::string_view::npos)
                    break;
                rest.remove_prefix(bar + 1);
            }
            cfg.sweep.push_back(std::move(axis));
            continue;
        }
        const KeySpec* spec = find_key(full);
        if (!spec) {
            const std::string hint = detail::suggest(full);
            detail::parse_fail(line_no, full,
                               "unknown key" + (hint.empty() ? std::string() : "; did you mean '" +
                                                                                   detail::last_component(hint) +
                                                                                   "' (" + hint + ")?"));
        }
        detail::check_value(*spec, value, line_no);
        cfg.values[full] = value;
    }
    for (const auto& k : config_schema())
        cfg.values.try_emplace(k.key, k.fallback);
    detail::validate_config(cfg);
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline RunConfig RunConfig::with(const std::string& key, const std::string& value) const
{
    RunConfig c = *this;
    const KeySpec* spec = find_key(key);
    require(spec != nullptr, "unknown key " + key);
    detail::check_value(*spec, value, 0);
    c.values[key] = value;
    c.sweep.clear();
    detail::validate_config(c);
    return c;
}

} // namespace pfbp
