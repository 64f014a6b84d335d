#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "classify.hpp"
#include "config.hpp"
#include "critical.hpp"
#include "csv.hpp"
#include "eigen.hpp"
#include "errors.hpp"
#include "fbp.hpp"
#include "periodic.hpp"
#include "semiwave.hpp"

namespace pfbp {

inline constexpr const char* kToolVersion = "1.0.0";

struct RunnerOptions {
    std::size_t workers = 1;
    bool seedless = false;       // omit wall-clock fields so whole directories are reproducible
    std::string config_path;
};

struct TaskResult {
    int status = 0;              // 0 ok, 1 computation failed, 2 bad input
    std::string error_code;
    std::string message;
    nlohmann::json summary;
};

namespace detail {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline void write_json(const fs::path& path, const json& j)
{
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

class ArtifactSet {
public:
    explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}
    std::string path(const std::string& name)
    {
        names_.push_back(name);
        const fs::path p = dir_ / name;
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        return p.string();
    }
    const std::vector<std::string>& names() const { return names_; }
    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<std::string> names_;
};

inline void write_series(ArtifactSet& art, const std::string& name, const PeriodicFn& f, const std::string& column)
{
    CsvWriter csv(art.path(name), {"t", column});
    for (std::size_t i = 0; i < f.size(); ++i)
        csv.row({f.node(i), f[i]});
}

inline void write_trajectory(ArtifactSet& art, const Trajectory& tr, bool snapshots)
{
    CsvWriter csv(art.path("trajectory.csv"), {"t", "g", "h", "gdot", "hdot", "supnorm"});
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        csv.row({tr.t[i], tr.g[i], tr.h[i], tr.gdot[i], tr.hdot[i], tr.sup[i]});
    if (!snapshots)
        return;
    char name[64];
    for (std::size_t m = 0; m < tr.snapshots.size(); ++m) {
        const Snapshot& s = tr.snapshots[m];
        std::snprintf(name, sizeof name, "snapshots/snapshot_%05zu.csv", m);
        CsvWriter snap(art.path(name), {"t", "xi", "x", "w"});
        const std::size_t n = s.w.size() - 1;
        for (std::size_t j = 0; j <= n; ++j) {
            const double xi = static_cast<double>(j) / static_cast<double>(n);
            snap.row({s.t, xi, s.g + xi * (s.h - s.g), s.w[j]});
        }
    }
}

inline json outcome_json(const Outcome& o)
{
    const Evidence& e = o.evidence;
    return json{{"kind", to_string(o.kind)},
                {"confidence", to_string(o.confidence)},
                {"reason", o.reason},
                {"evidence",
                 {{"t", e.t},
                  {"supnorm", e.sup_norm},
                  {"g", e.g},
                  {"h", e.h},
                  {"gdot", e.gdot},
                  {"hdot", e.hdot},
                  {"length", e.length},
                  {"length_bound", number(e.length_bound)},
                  {"window_sup", e.window_sup},
                  {"window_dev", e.window_dev},
                  {"moving_center", e.moving_center},
                  {"moving_dev", number(e.moving_dev)}}}};
}

inline json context_json(const ClassifierContext& ctx)
{
    return json{{"regime", to_string(ctx.regime)}, {"cbar", ctx.cbar},          {"beta_mean", ctx.beta_mean},
                {"mean_r", ctx.mean_r},           {"c1", ctx.c1},              {"ell_star", number(ctx.ell_star)},
                {"low_confidence", ctx.low_confidence}};
}

inline json task_eigen(const RunConfig& cfg, ArtifactSet& art)
{
    const PeriodicFn k = cfg.coefficient("task.k");
    const PeriodicFn a = cfg.reaction().linearization();
    const double ell = cfg.real("task.ell");
    const EigenGrid grid = cfg.eigen_grid();
    const EigenResult res = principal_eigenvalue(k, a, ell, grid);
    json j{{"lambda1", res.lambda1},    {"length", res.length},    {"period", res.period},
           {"converged", res.converged}, {"iterations", res.iterations}, {"mean_k", k.mean()},
           {"cbar", minimal_average_speed(a)}};
    if (cfg.flag("task.critical_length")) {
        try {
            j["critical_length"] = critical_length(k, a, cfg.real("tol.critical_length"), grid);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoCriticalLength)
                throw;
            j["critical_length"] = nullptr;
            j["critical_length_note"] = e.message();
        }
    }
    CsvWriter csv(art.path("eigenfunction.csv"), {"t", "z", "phi"});
    const std::size_t rows = res.eigenfunction.size();
    for (std::size_t m = 0; m < rows; ++m) {
        const auto& row = res.eigenfunction[m];
        const std::size_t n = row.size() - 1;
        const double t = res.period * static_cast<double>(m) / static_cast<double>(rows);
        for (std::size_t i = 0; i <= n; ++i)
            csv.row({t, ell * static_cast<double>(i) / static_cast<double>(n), row[i]});
    }
    return j;
}

inline json task_semiwave(const RunConfig& cfg, ArtifactSet& art)
{
    const Problem p = cfg.problem();
    const PeriodicFn k = cfg.coefficient("task.k");
    const std::string kind = cfg.text("task.kind");
    const SemiWaveGrid grid = cfg.semiwave_grid();
    SemiWaveProfile prof;
    if (kind == "halfline")
        prof = half_line_profile(k, p.reaction, grid);
    else if (kind == "dd0")
        prof = relax_dirichlet_zero(k, p.reaction, cfg.real("task.ell"), grid);
    else
        prof = relax_dirichlet_pinned(k, p.reaction, cfg.real("task.ell"), grid);
    const PeriodicFn flux = boundary_flux(prof, p.mu);
    write_series(art, "flux.csv", flux, "flux");
    const std::size_t stride = cfg.count("output.profile_stride");
    CsvWriter csv(art.path("profile.csv"), {"t", "z", "U"});
    for (std::size_t m = 0; m < prof.rows(); m += stride) {
        const auto row = prof.row(m);
        for (std::size_t j = 0; j <= prof.intervals; j += stride)
            csv.row({prof.row_time(m), prof.dz() * static_cast<double>(j), row[j]});
    }
    return json{{"kind", to_string(prof.kind)},
                {"length", prof.length},
                {"intervals", prof.intervals},
                {"is_zero", prof.is_zero},
                {"periods", prof.periods},
                {"period_residual", prof.period_residual},
                {"flux_mean", flux.mean()},
                {"flux_min", flux.min()},
                {"flux_max", flux.max()},
                {"mean_k", k.mean()}};
}

inline json task_critical(const RunConfig& cfg, ArtifactSet& art)
{
    const Problem p = cfg.problem();
    const CriticalAverageOptions opt = cfg.critical_options();
    CriticalSpeeds crit = critical_speeds(p.beta, p.mu, p.reaction, opt);
    if (std::isnan(crit.B))
        crit.B = critical_average(mean_and_shape(p.beta).shape, p.mu, p.reaction, opt).B;
    {
        std::vector<std::string> header{"t", "r"};
        if (crit.left)
            header.push_back("l");
        CsvWriter csv(art.path("speeds.csv"), header);
        const PeriodicFn& r = crit.r();
        for (std::size_t i = 0; i < r.size(); ++i) {
            std::vector<double> row{r.node(i), r[i]};
            if (crit.left)
                row.push_back(crit.left->speed(r.node(i)));
            csv.row(row);
        }
    }
    json j{{"cbar", crit.cbar},
           {"beta_mean", p.beta.mean()},
           {"mean_r", crit.r().mean()},
           {"mean_l", crit.left ? json(crit.left->speed.mean()) : json(nullptr)},
           {"B", crit.B},
           {"regime", to_string(crit.regime)},
           {"margin", crit.margin},
           {"low_confidence", crit.low_confidence},
           {"speed_residual", crit.right.residual},
           {"speed_iterations", crit.right.iterations}};
    if (cfg.flag("task.beta_star")) {
        const PeriodicFn omega = mean_and_shape(cfg.coefficient("task.omega")).shape;
        const PeriodicFn bs = beta_star_from_shape(omega, p.mu, p.reaction, cfg.semiwave_grid());
        write_series(art, "beta_star.csv", bs, "beta_star");
        j["beta_star_mean"] = bs.mean();
    }
    return j;
}

inline json task_simulate(const RunConfig& cfg, ArtifactSet& art)
{
    const Problem p = cfg.problem();
    const double extinction = cfg.real("classify.extinction");
    StopHook hook;
    if (cfg.flag("task.stop_early"))
        hook = [extinction](const Trajectory& tr) { return tr.last.sup_norm() < extinction; };
    const Trajectory tr = simulate(p, cfg.initial_data(), cfg.real("horizonPeriods") * p.period(), cfg.fbp_grid(),
                                   cfg.sampling(), hook);
    write_trajectory(art, tr, cfg.flag("output.snapshots"));
    json j{{"t", tr.last.t},
           {"g", tr.last.g},
           {"h", tr.last.h},
           {"supnorm", tr.last.sup_norm()},
           {"amplitude_bound", tr.amplitude_bound},
           {"periods", tr.periods()},
           {"rejected_steps", tr.rejected_steps},
           {"stopped_early", tr.stopped_by_hook}};
    if (!tr.stopped_by_hook)
        j["advisory"] = "HorizonTooShort: no classification hook fired before the horizon";
    return j;
}

inline json asymptotics_artifacts(const AsymptoticsReport& rep, ArtifactSet& art)
{
    {
        std::vector<std::string> header{"t", "h_minus_R", "speed_residual"};
        if (rep.has_left)
            header.insert(header.end(), {"g_plus_L", "left_speed_residual"});
        CsvWriter csv(art.path("asymptotics.csv"), header);
        for (std::size_t i = 0; i < rep.t.size(); ++i) {
            std::vector<double> row{rep.t[i], rep.h_minus_R[i], rep.speed_residual[i]};
            if (rep.has_left)
                row.insert(row.end(), {rep.g_plus_L[i], rep.left_speed_residual[i]});
            csv.row(row);
        }
    }
    std::vector<std::string> header{"t", "profile_sup"};
    if (rep.has_left)
        header.push_back("left_profile_sup");
    CsvWriter csv(art.path("profile_gap.csv"), header);
    for (std::size_t i = 0; i < rep.profile_t.size(); ++i) {
        std::vector<double> row{rep.profile_t[i], rep.profile_sup[i]};
        if (rep.has_left)
            row.push_back(rep.left_profile_sup[i]);
        csv.row(row);
    }
    json j{{"H1", rep.H1}, {"c_l", rep.c_l}};
    if (rep.has_left)
        j["G1"] = rep.G1;
    return j;
}

inline json task_classify(const RunConfig& cfg, ArtifactSet& art)
{
    const Problem p = cfg.problem();
    const CriticalSpeeds crit = critical_speeds(p.beta, p.mu, p.reaction, cfg.critical_options());
    const ClassifierContext ctx = make_context(p, crit, cfg.eigen_grid());
    const ClassifiedRun run = run_classified(p, cfg.initial_data(), ctx, cfg.run_options());
    write_trajectory(art, run.trajectory, cfg.flag("output.snapshots"));
    json j = outcome_json(run.outcome);
    j["context"] = context_json(ctx);
    j["periods"] = run.trajectory.periods();
    j["extensions"] = run.extensions;
    j["horizon_too_short"] = run.horizon_too_short;
    if (spreads(run.outcome.kind) && cfg.flag("task.asymptotics"))
        j["asymptotics"] = asymptotics_artifacts(front_asymptotics(run.trajectory, crit, ctx), art);
    return j;
}

inline json task_threshold(const RunConfig& cfg, ArtifactSet& art)
{
    const Problem p = cfg.problem();
    const CriticalSpeeds crit = critical_speeds(p.beta, p.mu, p.reaction, cfg.critical_options());
    const ClassifierContext ctx = make_context(p, crit, cfg.eigen_grid());
    const ThresholdOptions opt = cfg.threshold_options();
    const ThresholdResult res = critical_sigma(p, cfg.initial_data(), ctx, opt);
    CsvWriter csv(art.path("probes.csv"), {"sigma", "outcome", "t", "g", "h", "supnorm"});
    for (const Probe& pr : res.probes)
        csv.row_text({format_double(pr.sigma), to_string(pr.outcome.kind), format_double(pr.outcome.evidence.t),
                      format_double(pr.g_end), format_double(pr.h_end), format_double(pr.outcome.evidence.sup_norm)});
    return json{{"sigmaLow", res.sigma_low},
                {"sigmaHigh", res.sigma_high},
                {"bracketWidth", res.width},
                {"tolerance", opt.rel_tol * res.sigma_high},
                {"converged", res.converged},
                {"confidence", to_string(res.confidence)},
                {"transition", res.transition},
                {"probes", res.probes.size()},
                {"context", context_json(ctx)}};
}

inline json task_validate(const RunConfig& cfg, ArtifactSet&)
{
    const Reaction f = cfg.reaction();
    const HypothesisReport rep =
        validate_hypotheses(cfg.coefficient("problem.beta"), cfg.coefficient("problem.mu"), f);
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return json{{"passed", rep.all_passed()}, {"checks", checks}};
}

inline std::string timestamp_utc()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline int exit_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::ValidationError:
    case ErrorCode::InvalidArgument: return 2;
    default: return 1;
    }
}

} // namespace detail

inline TaskResult run_sweep(const RunConfig& cfg, const std::filesystem::path& dir, const RunnerOptions& opt);

/// Execute one task into dir: config.echo, the task's artifacts, a summary
/// JSON, manifest.json and, on failure, error.json.
inline TaskResult run_task(const RunConfig& cfg, const std::string& task, const std::filesystem::path& dir,
                           const RunnerOptions& opt = {})
{
    namespace fs = std::filesystem;
    using detail::json;
    fs::create_directories(dir);
    {
        std::ofstream echo(dir / "config.echo");
        echo << cfg.echo();
    }
    detail::ArtifactSet art(dir);
    TaskResult result;
    const auto start = std::chrono::steady_clock::now();
    const std::string started = detail::timestamp_utc();
    try {
        if (task == "eigen")
            result.summary = detail::task_eigen(cfg, art);
        else if (task == "semiwave")
            result.summary = detail::task_semiwave(cfg, art);
        else if (task == "critical")
            result.summary = detail::task_critical(cfg, art);
        else if (task == "simulate")
            result.summary = detail::task_simulate(cfg, art);
        else if (task == "classify")
            result.summary = detail::task_classify(cfg, art);
        else if (task == "threshold")
            result.summary = detail::task_threshold(cfg, art);
        else if (task == "validate")
            result.summary = detail::task_validate(cfg, art);
        else if (task == "sweep")
            result = run_sweep(cfg, dir, opt);
        else
            throw Error(ErrorCode::InvalidArgument, "unknown task '" + task + "'");
    } catch (const Error& e) {
        result.status = detail::exit_status(e.code());
        result.error_code = std::string(to_string(e.code()));
        result.message = e.message();
    } catch (const std::exception& e) {
        result.status = 1;
        result.error_code = "InternalError";
        result.message = e.what();
    }
    if (task != "sweep" && result.status == 0)
        detail::write_json(dir / (task + ".json"), result.summary);
    if (result.status != 0)
        detail::write_json(dir / "error.json", json{{"code", result.error_code}, {"message", result.message}});

    json manifest{{"tool", "pfbp"},
                  {"version", kToolVersion},
                  {"schema", kConfigSchema},
                  {"task", task},
                  {"status", result.status == 0 ? "ok" : "failed"},
                  {"exit_code", result.status},
                  {"config", "config.echo"},
                  {"artifacts", art.names()},
                  {"compiler", __VERSION__},
                  {"cxx_standard", __cplusplus},
                  {"seedless", opt.seedless}};
    if (!opt.config_path.empty())
        manifest["config_source"] = opt.config_path;
    if (!opt.seedless) {
        manifest["started"] = started;
        manifest["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    detail::write_json(dir / "manifest.json", manifest);
    return result;
}

/// Cartesian product of the sweep axes (first axis slowest), run on a
/// bounded pool of workers into run-NNNN directories. The completion ledger
/// lists every point whatever its status.
inline TaskResult run_sweep(const RunConfig& cfg, const std::filesystem::path& dir, const RunnerOptions& opt)
{
    using detail::json;
    if (cfg.sweep.empty())
        throw Error(ErrorCode::ValidationError, "sweep: no [sweep] axes given");
    const std::string task = cfg.text("sweep.task");
    std::size_t total = 1;
    for (const auto& axis : cfg.sweep)
        total *= axis.values.size();

    struct Point {
        std::vector<std::string> values;
        TaskResult result;
    };
    std::vector<Point> points(total);
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t rest = i;
        points[i].values.resize(cfg.sweep.size());
        for (std::size_t a = cfg.sweep.size(); a-- > 0;) {
            const auto& vals = cfg.sweep[a].values;
            points[i].values[a] = vals[rest % vals.size()];
            rest /= vals.size();
        }
    }

    RunnerOptions inner = opt;
    inner.workers = 1;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < total; i = next++) {
            char name[32];
            std::snprintf(name, sizeof name, "run-%04zu", i);
            Point& pt = points[i];
            try {
                RunConfig c = cfg;
                c.sweep.clear();
                for (std::size_t a = 0; a < cfg.sweep.size(); ++a)
                    c = c.with(cfg.sweep[a].key.substr(6), pt.values[a]);
                pt.result = run_task(c, task, dir / name, inner);
            } catch (const Error& e) {
                pt.result.status = detail::exit_status(e.code());
                pt.result.error_code = std::string(to_string(e.code()));
                pt.result.message = e.message();
            }
        }
    };
    const std::size_t nworkers = std::max<std::size_t>(1, std::min(opt.workers, total));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < nworkers; ++w)
            pool.emplace_back(worker);
        worker();
    }

    std::vector<std::string> header{"index", "dir", "status", "error"};
    for (const auto& axis : cfg.sweep)
        header.push_back(axis.key.substr(6));
    header.push_back("outcome");
    CsvWriter ledger((dir / "sweep_ledger.csv").string(), header);
    std::size_t failed = 0;
    json runs = json::array();
    for (std::size_t i = 0; i < total; ++i) {
        const TaskResult& r = points[i].result;
        char name[32];
        std::snprintf(name, sizeof name, "run-%04zu", i);
        std::string outcome;
        if (r.summary.is_object() && r.summary.contains("kind"))
            outcome = r.summary["kind"].get<std::string>();
        else if (r.summary.is_object() && r.summary.contains("regime"))
            outcome = r.summary["regime"].get<std::string>();
        std::vector<std::string> row{std::to_string(i), name, r.status == 0 ? "ok" : "failed", r.error_code};
        row.insert(row.end(), points[i].values.begin(), points[i].values.end());
        row.push_back(outcome);
        ledger.row_text(row);
        failed += r.status != 0;
        runs.push_back({{"index", i}, {"dir", name}, {"status", r.status}, {"outcome", outcome}});
    }
    TaskResult res;
    res.summary = json{{"task", task}, {"points", total}, {"failed", failed}, {"runs", runs}};
    detail::write_json(dir / "sweep.json", res.summary);
    if (failed) {
        res.status = 1;
        res.error_code = "SweepIncomplete";
        res.message = std::to_string(failed) + " of " + std::to_string(total) + " sweep points failed";
    }
    return res;
}

} // namespace pfbp
