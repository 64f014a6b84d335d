// pfbp: command-line front end for the periodic free boundary toolkit.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <pfbp/config.hpp>
#include <pfbp/runner.hpp>

namespace fs = std::filesystem;

namespace {

// Config never made it to the runner: still leave error.json and a manifest.
int fail(const fs::path& dir, const std::string& task, const std::string& config_path, bool seedless,
         const pfbp::Error& e)
{
    std::cerr << "pfbp: " << e.what() << '\n';
    const int status = pfbp::detail::exit_status(e.code());
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        return status;
    pfbp::detail::write_json(dir / "error.json",
                             {{"code", std::string(pfbp::to_string(e.code()))}, {"message", e.message()}});
    pfbp::detail::write_json(dir / "manifest.json", {{"tool", "pfbp"},
                                                     {"version", pfbp::kToolVersion},
                                                     {"schema", pfbp::kConfigSchema},
                                                     {"task", task},
                                                     {"status", "failed"},
                                                     {"exit_code", status},
                                                     {"config", nullptr},
                                                     {"artifacts", nlohmann::json::array()},
                                                     {"compiler", __VERSION__},
                                                     {"cxx_standard", __cplusplus},
                                                     {"seedless", seedless},
                                                     {"config_source", config_path}});
    return status;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Periodic Fisher-KPP free boundary toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::size_t workers = 1;
    bool seedless = false;

    const char* tasks[][2] = {
        {"eigen", "principal eigenvalue and critical length"},
        {"semiwave", "periodic semi-wave profile and boundary flux"},
        {"critical", "semi-wave speeds, B(shape) and the advection regime"},
        {"simulate", "run the free boundary problem to the horizon"},
        {"classify", "simulate and classify the long-time outcome"},
        {"threshold", "bisection for the sharp amplitude threshold"},
        {"sweep", "Cartesian parameter sweep of another task"},
        {"validate", "check the standing hypotheses on the coefficients"},
    };
    for (const auto& t : tasks) {
        CLI::App* sub = app.add_subcommand(t[0], t[1]);
        sub->add_option("--config", config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (default: $PFBP_OUT/<task> or ./pfbp-out/<task>)");
        sub->add_option("--workers", workers, "worker threads for sweeps")->check(CLI::PositiveNumber);
        sub->add_flag("--seedless", seedless, "deterministic output only: omit wall-clock fields");
    }
    CLI11_PARSE(app, argc, argv);
    const std::string task = app.get_subcommands().front()->get_name();

    fs::path dir;
    if (!out_dir.empty()) {
        dir = out_dir;
    } else if (const char* root = std::getenv("PFBP_OUT"); root && *root) {
        dir = fs::path(root) / task;
    } else {
        dir = fs::path("pfbp-out") / task;
    }

    pfbp::RunConfig cfg;
    try {
        cfg = pfbp::load_config(config_path);
        const std::string declared = cfg.text("task");
        if (!declared.empty() && declared != task)
            throw pfbp::Error(pfbp::ErrorCode::ValidationError,
                              "task: config declares '" + declared + "' but subcommand is '" + task + "'");
        if (out_dir.empty() && !cfg.text("output.dir").empty())
            dir = cfg.text("output.dir");
    } catch (const pfbp::Error& e) {
        return fail(dir, task, config_path, seedless, e);
    }

    pfbp::RunnerOptions opt;
    opt.workers = workers;
    opt.seedless = seedless;
    opt.config_path = config_path;
    const pfbp::TaskResult res = pfbp::run_task(cfg, task, dir, opt);
    if (res.status != 0) {
        std::cerr << "pfbp: " << res.error_code << ": " << res.message << '\n';
        return res.status;
    }
    std::cout << res.summary.dump(2) << '\n';
    return 0;
}
