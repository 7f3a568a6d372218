#include "quench/config.hpp"
#include "quench/errors.hpp"
#include "quench/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace {

using quench::Json;

struct Flags {
    std::string config;
    std::string preset;
    std::optional<std::int64_t> seed;
    std::string out_dir;
    std::vector<std::string> sweeps;
    std::optional<std::int64_t> runs;
    std::string output_times;
    std::optional<std::int64_t> workers;
    std::vector<std::string> sets;
    // linear-qkt shortcuts
    std::optional<double> tau_q;
    std::optional<double> gamma0;
    std::string e_k;
};

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        out.push_back(item);
    return out;
}

Json number_list(const std::string& flag, const std::string& text)
{
    Json arr = Json::array();
    for (const auto& item : split(text, ',')) {
        Json v = quench::parse_scalar(item);
        if (!v.is_number())
            throw quench::ConfigError(flag + ": '" + item + "' is not a number");
        arr.push_back(v);
    }
    if (arr.empty())
        throw quench::ConfigError(flag + ": empty list");
    return arr;
}

// bare sweep keys name the field that takes a list for each experiment
std::string sweep_path(const std::string& experiment, const std::string& key)
{
    if (key.find('.') != std::string::npos)
        return key;
    if (experiment == "linear-qkt")
        return "schedule." + key;
    if (experiment == "ring" || experiment == "scan")
        return "ring." + key;
    throw quench::ConfigError("--sweep: not supported for experiment '" + experiment + "'");
}

Json overrides_from(const std::string& experiment, const Flags& f)
{
    Json o = Json::object();
    if (f.seed)
        quench::set_path(o, "ensemble.seed", *f.seed);
    if (f.runs)
        quench::set_path(o, "ensemble.runs", *f.runs);
    if (f.workers)
        quench::set_path(o, "ensemble.workers", *f.workers);
    if (!f.out_dir.empty())
        quench::set_path(o, "output.dir", f.out_dir);
    if (!f.output_times.empty())
        quench::set_path(o, "output.times", number_list("--output-times", f.output_times));
    if (f.tau_q)
        quench::set_path(o, "schedule.tau_q", *f.tau_q);
    if (f.gamma0)
        quench::set_path(o, "model.gamma0", *f.gamma0);
    if (!f.e_k.empty())
        quench::set_path(o, "model.e_k", number_list("--e-k", f.e_k));
    for (const auto& s : f.sweeps) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw quench::ConfigError("--sweep: expected key=v1,v2,... but got '" + s + "'");
        quench::set_path(o, sweep_path(experiment, s.substr(0, eq)), number_list("--sweep", s.substr(eq + 1)));
    }
    for (const auto& s : f.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0)
            throw quench::ConfigError("--set: expected path=value but got '" + s + "'");
        const std::string value = s.substr(eq + 1);
        quench::set_path(o, s.substr(0, eq),
                         value.find(',') != std::string::npos ? number_list("--set", value)
                                                              : quench::parse_scalar(value));
    }
    return o;
}

void add_common(CLI::App* sub, Flags& f, bool qkt_shortcuts)
{
    sub->add_option("--config", f.config, "TOML experiment file")->check(CLI::ExistingFile);
    sub->add_option("--preset", f.preset, "Built-in parameter set (fig1a, fig1b, fig2a, fig2b)");
    sub->add_option("--seed", f.seed, "Master seed");
    sub->add_option("--out-dir", f.out_dir, "Output directory");
    sub->add_option("--sweep", f.sweeps, "key=v1,v2,... list of values to run");
    sub->add_option("--runs", f.runs, "Ensemble size");
    sub->add_option("--output-times", f.output_times, "t1,t2,... snapshot times");
    sub->add_option("--workers", f.workers, "Worker threads (results do not depend on this)");
    sub->add_option("--set", f.sets, "path=value override of any config field");
    if (qkt_shortcuts) {
        sub->add_option("--tau-q", f.tau_q, "Quench time");
        sub->add_option("--gamma0", f.gamma0, "Reference scattering rate");
        sub->add_option("--e-k", f.e_k, "Mode energies e1,e2,...");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quench dynamics experiments: linear kinetics, two-mode model, ring windings."};
    app.require_subcommand(0, 1);
    bool list_presets = false;
    app.add_flag("--list-presets", list_presets, "Print the built-in presets and exit");

    Flags flags;
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"linear-qkt", "Mode occupations through a quench"},
        {"toy", "Two-mode model: flows, outcomes, Gaussian closure, master equation"},
        {"ring", "Winding ensembles on a ring, with per-run records"},
        {"scan", "Winding scaling table only"},
    };
    for (const auto& [name, help] : commands)
        add_common(app.add_subcommand(name, help), flags, name == "linear-qkt");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (list_presets) {
        for (const auto& n : quench::preset_names())
            std::cout << n << '\n';
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }

    const std::string experiment = app.get_subcommands().front()->get_name();
    try {
        std::optional<std::string> preset;
        if (!flags.preset.empty())
            preset = flags.preset;
        std::optional<std::filesystem::path> file;
        if (!flags.config.empty())
            file = flags.config;
        const auto cfg = quench::build_config(experiment, preset, file, overrides_from(experiment, flags));
        const auto report = quench::run_experiment(cfg);
        for (const auto& p : report.files)
            std::cout << p.string() << '\n';
        return 0;
    } catch (const quench::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::out_of_range& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const quench::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const quench::UndefinedWinding& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
