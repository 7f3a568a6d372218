#include "quench/experiments.hpp"

#include "quench/analysis.hpp"
#include "quench/csv.hpp"
#include "quench/errors.hpp"
#include "quench/flow.hpp"
#include "quench/linear_qkt.hpp"
#include "quench/parallel.hpp"
#include "quench/ring.hpp"
#include "quench/toy_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace quench {

namespace {

namespace fs = std::filesystem;

Json base_summary(const ExperimentConfig& cfg)
{
    return Json{{"experiment", cfg.experiment},
                {"seed", cfg.seed},
                {"config_hash", cfg.hash()},
                {"config", cfg.hashed_tree()}};
}

CsvTable table(const ExperimentConfig& cfg, std::vector<std::string> columns)
{
    return CsvTable(cfg.experiment, cfg.hash(), cfg.seed, std::move(columns));
}

void emit(RunReport& report, const ExperimentConfig& cfg, const std::string& name, const CsvTable& t)
{
    const fs::path path = cfg.out_dir / name;
    t.write(path);
    report.files.push_back(path);
}

void finish(RunReport& report, const ExperimentConfig& cfg)
{
    const fs::path path = cfg.out_dir / "summary.json";
    write_text_file(path, report.summary.dump(2) + "\n");
    report.files.push_back(path);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json fit_json(const PowerLawFit& f)
{
    return Json{{"exponent", f.exponent},
                {"exponent_stderr", f.exponent_stderr},
                {"amplitude", f.amplitude},
                {"r_squared", f.r_squared},
                {"n_points", f.n_points}};
}

const std::vector<std::string> kFitColumns = {"variable", "exponent", "exponent_stderr", "amplitude", "r_squared",
                                              "n_points"};

void add_fit_row(CsvTable& t, const std::string& variable, const PowerLawFit& f)
{
    t.add_row({variable, f.exponent, f.exponent_stderr, f.amplitude, f.r_squared, std::uint64_t(f.n_points)});
}

QuenchSchedule make_schedule(const ExperimentConfig& cfg, std::optional<double> tau_q)
{
    const std::string kind = cfg.string_or("schedule.kind", "linear-bias");
    auto tau = [&] {
        if (tau_q)
            return *tau_q;
        return cfg.positive("schedule.tau_q");
    };
    if (kind == "linear-bias") {
        TimeWindow window;
        if (cfg.has("schedule.window")) {
            const auto w = cfg.numbers_or("schedule.window", {});
            if (w.size() != 2 || !(w[0] < w[1]))
                throw ConfigError("schedule.window: expected [lo, hi] with lo < hi");
            window = {w[0], w[1]};
        }
        return QuenchSchedule::linear_bias(tau(), cfg.number_or("schedule.theta", 0.0),
                                           cfg.positive_or("schedule.beta", 1.0), window);
    }
    if (kind == "tanh")
        return QuenchSchedule::tanh(tau(), cfg.positive_or("schedule.beta_c", 1.0),
                                    cfg.boolean_or("schedule.varying_beta", true));
    if (kind == "constant")
        return QuenchSchedule::constant(cfg.positive("schedule.beta"), cfg.number("schedule.mu"));
    throw ConfigError("schedule.kind: unknown schedule '" + kind + "' (expected linear-bias, tanh or constant)");
}

// Reference inverse temperature of a schedule: beta at the crossing, or the fixed beta.
double reference_beta(const QuenchSchedule& s)
{
    const auto tc = s.crossing_time();
    return s.eval(tc ? *tc : 0.0).beta;
}

std::vector<double> sorted_unique(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// ---------------------------------------------------------------- linear-qkt

struct ModeRun {
    ModeSpec mode;
    OccupancySeries series;
    std::optional<double> departure;
    double bias_time = 0.0;
    std::vector<std::array<double, 2>> at_times;  // (nbar, nbar_eq) at output.times
};

double equilibrium_or_nan(const QuenchSchedule& s, const ModeSpec& m, double t)
{
    try {
        return equilibrium_occupancy(s, m, t);
    } catch (const std::domain_error&) {
        return std::nan("");
    }
}

struct QktPoint {
    double tau_q;
    double t_hat;
    double xi_hat;
    std::vector<ModeRun> modes;
    std::vector<int> competitive;
};

QktPoint run_qkt_point(const ExperimentConfig& cfg, double tau_q)
{
    const double gamma0 = cfg.positive_or("model.gamma0", 1.0);
    const auto energies = cfg.numbers_or("model.e_k", {0.0});
    if (energies.empty())
        throw ConfigError("model.e_k: at least one mode energy required");
    const double factor = cfg.number_or("run.departure_factor", 2.0);
    if (!(factor >= 1.0))
        throw ConfigError("run.departure_factor: must be at least 1");
    const auto samples = cfg.integer_or("run.samples", 20001);
    if (samples < 2)
        throw ConfigError("run.samples: must be at least 2");

    const QuenchSchedule s = make_schedule(cfg, tau_q);
    const auto crossing = s.crossing_time();
    const double tc = crossing ? *crossing : 0.0;
    QktPoint pt{tau_q, freeze_out_time(tau_q, gamma0), frozen_correlation_length(tau_q, gamma0), {}, {}};
    const double t0 = cfg.number_or("run.t_start", tc - 5.0 * tau_q);
    const double t1 = cfg.number_or("run.t_end", tc + 3.0 * pt.t_hat);
    if (!(t1 > t0))
        throw ConfigError("run.t_end: must be later than run.t_start");

    OccupancyOptions opts;
    opts.samples = std::size_t(samples);
    opts.n_cap = cfg.positive_or("run.n_cap", opts.n_cap);

    std::vector<ModeSpec> spectrum;
    for (std::size_t i = 0; i < energies.size(); ++i) {
        if (!(energies[i] >= 0.0))
            throw ConfigError("model.e_k[" + std::to_string(i) + "]: must be non-negative");
        spectrum.push_back({energies[i], gamma0, int(i)});
    }
    pt.competitive = competitive_modes(spectrum, reference_beta(s), tau_q, gamma0);

    const auto times = sorted_unique(cfg.output_times);
    for (double t : times)
        if (t < t0 || t > t1)
            throw ConfigError("output.times: " + format_double(t) + " lies outside [run.t_start, run.t_end]");

    for (const ModeSpec& m : spectrum) {
        auto series = [&] {
            try {
                return integrate_from_equilibrium(s, m, t0, t1, opts);
            } catch (const std::domain_error&) {
                throw ConfigError("run.t_start: mode " + std::to_string(m.label) +
                                  " has no equilibrium occupation at the start time");
            }
        };
        ModeRun run{m, series(), {}, 0.0, {}};
        run.departure = departure_time(run.series, factor);
        run.bias_time = s.kind() == ScheduleKind::LinearBias ? mode_bias_time(s, m) : tc;
        if (!times.empty()) {
            double t = t0;
            double n = run.series.nbar.front();
            OccupancyOptions seg = opts;
            seg.samples = 2;
            for (double target : times) {
                if (target > t) {
                    const auto piece = integrate_occupancy(s, m, t, target, n, seg);
                    if (piece.halted_at_cap)
                        break;
                    n = piece.nbar.back();
                    t = target;
                }
                run.at_times.push_back({n, equilibrium_or_nan(s, m, target)});
            }
        }
        pt.modes.push_back(std::move(run));
    }
    return pt;
}

CsvTable occupancy_table(const ExperimentConfig& cfg, const QktPoint& pt)
{
    CsvTable t = table(cfg, {"t", "nbar", "nbar_eq", "mode_k"});
    const auto times = sorted_unique(cfg.output_times);
    for (const ModeRun& run : pt.modes) {
        const std::int64_t k = run.mode.label;
        if (times.empty()) {
            for (std::size_t i = 0; i < run.series.times.size(); ++i)
                t.add_row({run.series.times[i], run.series.nbar[i], run.series.nbar_eq[i], k});
        } else {
            for (std::size_t i = 0; i < run.at_times.size(); ++i)
                t.add_row({times[i], run.at_times[i][0], run.at_times[i][1], k});
        }
    }
    return t;
}

Json qkt_point_json(const QktPoint& pt)
{
    Json modes = Json::array();
    for (const ModeRun& r : pt.modes) {
        std::optional<double> lag;
        if (r.departure)
            lag = r.bias_time - *r.departure;
        modes.push_back({{"k", r.mode.label},
                         {"e_k", r.mode.energy},
                         {"bias_time", r.bias_time},
                         {"departure_time", optional_json(r.departure)},
                         {"departure_lag", optional_json(lag)},
                         {"final_t", r.series.times.back()},
                         {"final_nbar", r.series.nbar.back()},
                         {"halted_at_cap", r.series.halted_at_cap}});
    }
    const ModeRun& first = pt.modes.front();
    return Json{{"tau_q", pt.tau_q},
                {"t_hat", pt.t_hat},
                {"xi_hat", pt.xi_hat},
                {"departure_time", optional_json(first.departure)},
                {"departure_lag", modes[0]["departure_lag"]},
                {"competitive_modes", pt.competitive},
                {"modes", modes}};
}

// ---------------------------------------------------------------- toy

struct ToyFlowRun {
    std::vector<std::vector<FlowState>> trajectories;
    std::vector<Outcome> outcomes;
};

ToyFlowRun run_flow_kind(FlowKind kind, const std::vector<FlowState>& seeds, const QuenchSchedule& s,
                         const ToyParams& p, double t_end, const FlowOptions& fo, const ClassifyOptions& co,
                         unsigned workers)
{
    ToyFlowRun r;
    r.trajectories.resize(seeds.size());
    r.outcomes.resize(seeds.size());
    parallel_for(seeds.size(), workers, [&](std::size_t i) {
        try {
            r.trajectories[i] = integrate_flow(seeds[i], kind, s, p, t_end, fo);
        } catch (const NumericalError& e) {
            throw e.prefixed(std::string(to_string(kind)) + " flow, seed " + std::to_string(i) + ": ");
        }
        r.outcomes[i] = classify_outcome(r.trajectories[i].back(), kind, s, p, co);
    });
    return r;
}

Json outcome_counts(const std::vector<Outcome>& outcomes, const std::vector<std::size_t>& subset)
{
    std::size_t meta = 0, ground = 0, undecided = 0;
    for (std::size_t i : subset) {
        switch (outcomes[i]) {
        case Outcome::MetastableVortex:
            ++meta;
            break;
        case Outcome::Ground:
            ++ground;
            break;
        case Outcome::Undecided:
            ++undecided;
            break;
        }
    }
    const double n = double(subset.size());
    const double f = subset.empty() ? 0.0 : double(meta) / n;
    return Json{{"seeds", subset.size()},
                {"metastable", meta},
                {"ground", ground},
                {"undecided", undecided},
                {"fraction", f},
                {"stderr", subset.empty() ? 0.0 : std::sqrt(f * (1.0 - f) / n)}};
}

double agreement(const ToyFlowRun& a, const ToyFlowRun& b, const std::vector<std::size_t>& subset)
{
    if (subset.empty())
        return 0.0;
    std::size_t same = 0;
    for (std::size_t i : subset)
        same += a.outcomes[i] == b.outcomes[i];
    return double(same) / double(subset.size());
}

double start_time(const ExperimentConfig& cfg, const QuenchSchedule& s, const ToyParams& p, double total, double tc)
{
    const Json* v = find_path(cfg.tree, "seeds.start");
    if (v && v->is_number())
        return v->get<double>();
    const std::string mode = cfg.string_or("seeds.start", "t_hat");
    if (mode == "t_hat")
        return tc + freeze_out_time(s.tau_q(), p.gamma);
    if (mode == "coherent") {
        const double t_i = cfg.number_or("seeds.qkt_start", tc - 4.0 * s.tau_q());
        const auto ts = coherent_start_time(s, p, total, t_i, tc + 4.0 * s.tau_q());
        if (!ts)
            throw ConfigError("seeds.start: the coherent mode never reaches n0 + n1 = " + format_double(total));
        return *ts;
    }
    throw ConfigError("seeds.start: expected a time, \"t_hat\" or \"coherent\"");
}

} // namespace

RunReport run_linear_qkt(const ExperimentConfig& cfg)
{
    if (!cfg.has("schedule.tau_q"))
        throw ConfigError("schedule.tau_q: required field missing");
    const auto taus = cfg.numbers_or("schedule.tau_q", {});
    if (taus.empty())
        throw ConfigError("schedule.tau_q: at least one value required");
    for (std::size_t i = 0; i < taus.size(); ++i)
        if (!(taus[i] > 0.0) || !std::isfinite(taus[i]))
            throw ConfigError("schedule.tau_q: values must be positive and finite");

    RunReport report;
    report.summary = base_summary(cfg);
    if (taus.size() == 1) {
        const QktPoint pt = run_qkt_point(cfg, taus[0]);
        emit(report, cfg, "occupancy.csv", occupancy_table(cfg, pt));
        report.summary.update(qkt_point_json(pt));
        finish(report, cfg);
        return report;
    }

    CsvTable scaling = table(cfg, {"tau_q", "t_hat", "xi_hat", "departure_lag"});
    Json runs = Json::array();
    std::vector<double> xs, ys;
    for (double tq : taus) {
        const QktPoint pt = run_qkt_point(cfg, tq);
        emit(report, cfg, "occupancy_tau_q_" + format_double(tq) + ".csv", occupancy_table(cfg, pt));
        Json j = qkt_point_json(pt);
        const Json lag = j["departure_lag"];
        scaling.add_row({tq, pt.t_hat, pt.xi_hat, lag.is_null() ? std::nan("") : lag.get<double>()});
        if (!lag.is_null() && lag.get<double>() > 0.0) {
            xs.push_back(tq);
            ys.push_back(lag.get<double>());
        }
        runs.push_back(std::move(j));
    }
    emit(report, cfg, "scaling.csv", scaling);
    report.summary["runs"] = runs;
    report.summary["fit"] = nullptr;
    if (std::set<double>(xs.begin(), xs.end()).size() >= 3) {
        const PowerLawFit f = fit_power_law(xs, ys);
        CsvTable fit = table(cfg, kFitColumns);
        add_fit_row(fit, "departure_lag", f);
        emit(report, cfg, "fit.csv", fit);
        report.summary["fit"] = fit_json(f);
    }
    finish(report, cfg);
    return report;
}

RunReport run_toy(const ExperimentConfig& cfg)
{
    const QuenchSchedule s = make_schedule(cfg, std::nullopt);
    ToyParams p;
    p.energy = cfg.positive("model.energy");
    p.n_c = cfg.positive("model.n_c");
    p.gamma = cfg.positive_or("model.gamma", 1.0);
    if (cfg.has("model.gamma_tilde")) {
        p.gamma_tilde = cfg.number("model.gamma_tilde");
        if (*p.gamma_tilde < 0.0)
            throw ConfigError("model.gamma_tilde: must be non-negative");
    }

    const auto crossing = s.crossing_time();
    if (!crossing && !cfg.has("flow.t_end"))
        throw ConfigError("flow.t_end: required for a schedule without a crossing");
    const double tc = crossing ? *crossing : 0.0;
    const double be = reference_beta(s) * p.energy;
    const double total = cfg.positive_or("seeds.total", 1.0 / (2.0 * be));
    const auto count = cfg.integer_or("seeds.count", 21);
    if (count < 1)
        throw ConfigError("seeds.count: must be at least 1");
    const double t_s = start_time(cfg, s, p, total, tc);

    RunReport report;
    report.summary = base_summary(cfg);
    Json warnings = Json::array();

    std::vector<FlowState> seeds;
    const std::string placement = cfg.string_or("seeds.placement", "line");
    if (placement == "line") {
        seeds = seed_line(total, std::size_t(count), t_s);
    } else if (placement == "exponential") {
        const auto nbar = cfg.numbers_or("seeds.nbar", {0.5 * total, 0.5 * total});
        if (nbar.size() != 2 || nbar[0] < 0.0 || nbar[1] < 0.0)
            throw ConfigError("seeds.nbar: expected two non-negative mean occupations");
        auto st = seed_exponential({nbar[0], nbar[1]}, std::size_t(count), derive_seed(cfg.seed, 0), t_s);
        seeds = std::move(st.states);
        for (auto& w : st.warnings)
            warnings.push_back(w);
    } else {
        throw ConfigError("seeds.placement: expected \"line\" or \"exponential\"");
    }

    const double t_end = cfg.number_or("flow.t_end", tc + 5.0 * (s.kind() == ScheduleKind::Constant ? 1.0 : s.tau_q()));
    if (!(t_end > t_s))
        throw ConfigError("flow.t_end: must be later than the seed start time");
    FlowOptions fo;
    const auto samples = cfg.integer_or("flow.samples", 201);
    if (samples < 2)
        throw ConfigError("flow.samples: must be at least 2");
    fo.samples = std::size_t(samples);
    ClassifyOptions co;
    co.smallness = cfg.positive_or("flow.smallness", co.smallness);

    const ToyFlowRun qkt = run_flow_kind(FlowKind::Qkt, seeds, s, p, t_end, fo, co, cfg.workers);
    const ToyFlowRun tdgl = run_flow_kind(FlowKind::Tdgl, seeds, s, p, t_end, fo, co, cfg.workers);

    std::vector<std::size_t> all, upper;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        all.push_back(i);
        if (seeds[i].n1 > seeds[i].n0)
            upper.push_back(i);
    }

    Json outcomes;
    for (const auto& [kind, run] : {std::pair{FlowKind::Qkt, &qkt}, std::pair{FlowKind::Tdgl, &tdgl}}) {
        const std::string name = to_string(kind);
        CsvTable traj = table(cfg, {"seed", "t", "n0", "n1"});
        CsvTable out = table(cfg, {"seed", "outcome", "n0_final", "n1_final"});
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            for (const FlowState& f : run->trajectories[i])
                traj.add_row({std::uint64_t(i), f.t, f.n0, f.n1});
            const FlowState& fin = run->trajectories[i].back();
            out.add_row({std::uint64_t(i), std::string(to_string(run->outcomes[i])), fin.n0, fin.n1});
        }
        emit(report, cfg, "trajectories_" + name + ".csv", traj);
        emit(report, cfg, "outcomes_" + name + ".csv", out);
        outcomes[name] = {{"all", outcome_counts(run->outcomes, all)}, {"upper", outcome_counts(run->outcomes, upper)}};
    }
    report.summary["t_start"] = t_s;
    report.summary["t_end"] = t_end;
    report.summary["line_total"] = total;
    report.summary["threshold"] = p.n_c + 1.0;
    report.summary["outcomes"] = outcomes;
    report.summary["agreement"] = {{"all", agreement(qkt, tdgl, all)}, {"upper", agreement(qkt, tdgl, upper)}};

    // snapshot times shared by the Gaussian closure and the master equation
    std::vector<double> times;
    for (double t : cfg.output_times)
        times.push_back(t);
    for (double dt : cfg.numbers_or("output.times_after_start", {}))
        times.push_back(t_s + dt);
    times = sorted_unique(times);
    for (double t : times)
        if (!(t > t_s))
            throw ConfigError("output.times: every snapshot must follow the seed start time " + format_double(t_s));
    if (times.empty())
        times.push_back(t_s + 0.1 * (s.kind() == ScheduleKind::Constant ? 1.0 : s.tau_q()));
    const std::vector<double> inner(times.begin(), times.end() - 1);

    report.summary["gaussian"] = nullptr;
    if (cfg.boolean_or("gaussian.enabled", false)) {
        const Vec2 start{0.5 * total, 0.5 * total};
        GaussianOptions go;
        go.output_times = inner;
        std::vector<GaussianState> gs;
        try {
            gs = evolve_gaussian({start, {}, t_s}, s, p, times.back(), go);
        } catch (const NumericalError& e) {
            throw e.prefixed("gaussian closure: ");
        }
        gs.insert(gs.begin(), GaussianState{start, {}, t_s});
        CsvTable t = table(cfg, {"t", "n0", "n1", "c00", "c01", "c11", "semi_major", "semi_minor", "angle"});
        Json rows = Json::array();
        for (const GaussianState& g : gs) {
            const Ellipse e = contour68(g);
            t.add_row({g.t, g.mean[0], g.mean[1], g.cov[0][0], g.cov[0][1], g.cov[1][1], e.semi_major, e.semi_minor,
                       e.angle});
            const double disp = std::hypot(g.mean[0] - start[0], g.mean[1] - start[1]);
            rows.push_back({{"t", g.t},
                            {"semi_major", e.semi_major},
                            {"displacement", disp},
                            {"ratio", disp > 0.0 ? Json(e.semi_major / disp) : Json(nullptr)}});
        }
        emit(report, cfg, "gaussian.csv", t);
        report.summary["gaussian"] = rows;
    }

    report.summary["master"] = nullptr;
    if (cfg.boolean_or("master.enabled", false)) {
        const auto n_max = cfg.integer_or("master.n_max", 160);
        const int c0 = int(std::lround(0.5 * total));
        if (n_max < 2 * c0 + 2 || n_max > 4000)
            throw ConfigError("master.n_max: must hold the start point with room to grow (and be at most 4000)");
        MasterOptions mo;
        mo.leakage_threshold = cfg.positive_or("master.leakage_threshold", mo.leakage_threshold);
        const double m_end = t_s + cfg.positive_or("master.duration", times.back() - t_s);
        for (double t : times)
            if (t < m_end)
                mo.output_times.push_back(t);
        MasterTrajectory mt;
        try {
            mt = evolve_master(ProbabilityGrid::point_mass(int(n_max), c0, c0, t_s), s, p, m_end, mo);
        } catch (const NumericalError& e) {
            throw e.prefixed("master equation: ");
        }
        CsvTable grid = table(cfg, {"t", "n0", "n1", "p"});
        CsvTable mom = table(cfg, {"t", "mean0", "mean1", "c00", "c01", "c11", "total", "boundary_mass"});
        for (const ProbabilityGrid& g : mt.snapshots) {
            for (int a = 0; a <= g.n_max(); ++a)
                for (int b = 0; a + b <= g.n_max(); ++b)
                    grid.add_row({g.t, std::int64_t(a), std::int64_t(b), g(a, b)});
            const Moments m = marginal_moments(g);
            mom.add_row({g.t, m.mean[0], m.mean[1], m.cov[0][0], m.cov[0][1], m.cov[1][1], g.total(),
                         g.boundary_mass()});
        }
        emit(report, cfg, "master.csv", grid);
        emit(report, cfg, "master_moments.csv", mom);
        report.summary["master"] = {{"n_max", n_max}, {"steps", mt.steps}, {"snapshots", mt.snapshots.size()}};
    }

    report.summary["warnings"] = warnings;
    finish(report, cfg);
    return report;
}

namespace {

RunReport run_winding_experiment(const ExperimentConfig& cfg, bool with_samples)
{
    ScanOptions so;
    try {
        so.pipeline = parse_pipeline(cfg.string_or("ring.pipeline", "random-walk"));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("ring.pipeline: ") + e.what());
    }
    RingScanParams& p = so.params;
    p.length = cfg.positive_or("ring.length", p.length);
    const auto sites = cfg.integer_or("ring.sites", std::int64_t(p.sites));
    if (sites < 8)
        throw ConfigError("ring.sites: must be at least 8");
    p.sites = std::size_t(sites);
    p.gamma0 = cfg.positive_or("ring.gamma0", p.gamma0);
    p.beta_c = cfg.positive_or("ring.beta_c", p.beta_c);
    p.lambda = cfg.positive_or("ring.lambda", p.lambda);
    p.tau0 = cfg.positive_or("ring.tau0", p.tau0);
    p.k_max = int(cfg.integer_or("ring.k_max", p.k_max));
    if (p.k_max >= 0 && 2 * std::size_t(p.k_max) >= p.sites)
        throw ConfigError("ring.k_max: must be below ring.sites / 2");
    p.qkt_start = cfg.number_or("ring.qkt_start", p.qkt_start);
    p.handoff = cfg.number_or("ring.handoff", p.handoff);
    p.t_end = cfg.number_or("ring.t_end", p.t_end);
    p.dt = cfg.positive_or("ring.dt", p.dt);
    const auto runs = cfg.integer_or("ensemble.runs", 100);
    so.runs = std::size_t(runs);
    so.seed = cfg.seed;
    so.workers = cfg.workers;

    std::string variable = "tau_q";
    std::vector<double> n_domains;
    if (cfg.has("ring.n_domains")) {
        if (cfg.has("ring.tau_q"))
            throw ConfigError("ring.n_domains: give either ring.tau_q or ring.n_domains, not both");
        if (so.pipeline != Pipeline::RandomWalk)
            throw ConfigError("ring.n_domains: only meaningful for the random-walk pipeline");
        variable = "n_domains";
        n_domains = cfg.numbers_or("ring.n_domains", {});
        for (double nd : n_domains) {
            if (!(nd >= 1.0) || std::floor(nd) != nd)
                throw ConfigError("ring.n_domains: values must be positive integers");
            so.tau_qs.push_back(std::pow(p.length / nd, 4.0) / p.gamma0);
        }
    } else {
        if (!cfg.has("ring.tau_q"))
            throw ConfigError("ring.tau_q: required field missing");
        so.tau_qs = cfg.numbers_or("ring.tau_q", {});
        for (double tq : so.tau_qs)
            if (!(tq > 0.0) || !std::isfinite(tq))
                throw ConfigError("ring.tau_q: values must be positive and finite");
    }
    if (so.tau_qs.empty())
        throw ConfigError("ring." + variable + ": at least one value required");

    const ScanResult res = kz_scan(so);

    RunReport report;
    report.summary = base_summary(cfg);
    report.summary["pipeline"] = to_string(so.pipeline);
    report.summary["runs_per_point"] = so.runs;

    if (with_samples) {
        CsvTable w = table(cfg, {"tau_q", "n_domains", "run", "seed", "winding", "mean_density", "aborted"});
        for (std::size_t i = 0; i < res.samples.size(); ++i) {
            const WindingSample& ws = res.samples[i];
            const std::size_t nd = res.rows[i / so.runs].n_domains;
            w.add_row({ws.tau_q, std::uint64_t(nd), std::uint64_t(ws.run), ws.seed, std::int64_t(ws.winding),
                       ws.mean_density, std::int64_t(ws.aborted ? 1 : 0)});
        }
        emit(report, cfg, "windings.csv", w);
    }

    CsvTable scaling = table(cfg, {"tau_q", "xi_hat", "n_domains", "runs", "w_rms", "w_rms_stderr", "pipeline"});
    Json rows = Json::array();
    std::size_t aborted = 0;
    for (const ScanRow& r : res.rows) {
        scaling.add_row({r.tau_q, r.xi_hat, std::uint64_t(r.n_domains), std::uint64_t(r.runs), r.w_rms,
                         r.w_rms_stderr, std::string(to_string(r.pipeline))});
        rows.push_back({{"tau_q", r.tau_q},
                        {"xi_hat", r.xi_hat},
                        {"n_domains", r.n_domains},
                        {"runs", r.runs},
                        {"aborted", r.aborted},
                        {"w_rms", r.w_rms},
                        {"w_rms_stderr", r.w_rms_stderr}});
        aborted += r.aborted;
    }
    emit(report, cfg, "scaling.csv", scaling);
    report.summary["rows"] = rows;
    report.summary["aborted"] = aborted;
    Json errors = Json::array();
    for (const WindingSample& ws : res.samples)
        if (ws.aborted && errors.size() < 20)
            errors.push_back({{"tau_q", ws.tau_q}, {"run", ws.run}, {"error", ws.error}});
    report.summary["errors"] = errors;

    CsvTable fit = table(cfg, kFitColumns);
    Json fits = Json::object();
    if (res.fit) {
        add_fit_row(fit, "tau_q", *res.fit);
        fits["tau_q"] = fit_json(*res.fit);
    }
    if (variable == "n_domains") {
        std::vector<double> xs, ys;
        for (const ScanRow& r : res.rows)
            if (r.w_rms > 0.0) {
                xs.push_back(double(r.n_domains));
                ys.push_back(r.w_rms);
            }
        if (std::set<double>(xs.begin(), xs.end()).size() >= 3) {
            const PowerLawFit f = fit_power_law(xs, ys);
            add_fit_row(fit, "n_domains", f);
            fits["n_domains"] = fit_json(f);
        }
    }
    emit(report, cfg, "fit.csv", fit);
    report.summary["fit"] = fits;
    finish(report, cfg);
    return report;
}

} // namespace

RunReport run_ring(const ExperimentConfig& cfg) { return run_winding_experiment(cfg, true); }

RunReport run_scan(const ExperimentConfig& cfg) { return run_winding_experiment(cfg, false); }

RunReport run_experiment(const ExperimentConfig& cfg)
{
    if (cfg.experiment == "linear-qkt")
        return run_linear_qkt(cfg);
    if (cfg.experiment == "toy")
        return run_toy(cfg);
    if (cfg.experiment == "ring")
        return run_ring(cfg);
    if (cfg.experiment == "scan")
        return run_scan(cfg);
    throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

} // namespace quench
