#include "epifit/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "epifit/errors.hpp"
#include "epifit/evaluation.hpp"
#include "epifit/panel.hpp"

namespace epifit {

namespace {

constexpr double kCi95 = 1.959964;

std::string mode_name(SimMode mode) {
    return mode == SimMode::deterministic ? "deterministic" : "poisson";
}

SimMode mode_from_string(const std::string& name) {
    if (name == "deterministic") return SimMode::deterministic;
    if (name == "poisson") return SimMode::poisson;
    throw DataError("unknown simulation mode: " + name);
}

// ---------------------------------------------------------------------------
// Design <-> JSON

nlohmann::json design_to_json(const ExperimentDesign& d) {
    return nlohmann::json{
        {"n_regions", d.n_regions},
        {"horizon", d.horizon},
        {"beta0", d.beta0},
        {"gamma", d.gamma},
        {"mu", d.mu},
        {"delta_range", d.delta_range},
        {"population_range", d.population_range},
        {"seed_fraction_range", d.seed_fraction_range},
        {"treat_time_range", d.treat_time_range},
        {"never_treated_fraction", d.never_treated_fraction},
        {"tau", d.tau},
        {"mode", mode_name(d.mode)},
        {"master_seed", d.master_seed},
    };
}

ExperimentDesign design_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known = {
        "n_regions",       "horizon",
        "beta0",           "gamma",
        "mu",              "delta_range",
        "population_range", "seed_fraction_range",
        "treat_time_range", "never_treated_fraction",
        "tau",             "mode",
        "master_seed",
    };
    if (!j.is_object()) throw DataError("config root must be a JSON object");
    for (const auto& item : j.items()) {
        if (!known.count(item.key())) throw DataError("unknown config key: " + item.key());
    }
    ExperimentDesign d;
    try {
        if (j.contains("n_regions")) d.n_regions = j.at("n_regions").get<int>();
        if (j.contains("horizon")) d.horizon = j.at("horizon").get<int>();
        if (j.contains("beta0")) d.beta0 = j.at("beta0").get<double>();
        if (j.contains("gamma")) d.gamma = j.at("gamma").get<double>();
        if (j.contains("mu")) d.mu = j.at("mu").get<double>();
        if (j.contains("delta_range")) {
            d.delta_range = j.at("delta_range").get<std::array<double, 2>>();
        }
        if (j.contains("population_range")) {
            d.population_range = j.at("population_range").get<std::array<double, 2>>();
        }
        if (j.contains("seed_fraction_range")) {
            d.seed_fraction_range = j.at("seed_fraction_range").get<std::array<double, 2>>();
        }
        if (j.contains("treat_time_range")) {
            d.treat_time_range = j.at("treat_time_range").get<std::array<int, 2>>();
        }
        if (j.contains("never_treated_fraction")) {
            d.never_treated_fraction = j.at("never_treated_fraction").get<double>();
        }
        if (j.contains("tau")) d.tau = j.at("tau").get<double>();
        if (j.contains("mode")) d.mode = mode_from_string(j.at("mode").get<std::string>());
        if (j.contains("master_seed")) d.master_seed = j.at("master_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed config value: ") + e.what());
    }
    return d;
}

ExperimentDesign load_design(const std::filesystem::path& config_path) {
    if (config_path.empty()) return {};
    std::ifstream in(config_path);
    if (!in) throw DataError("cannot open config file: " + config_path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config is not valid JSON: ") + e.what());
    }
    return design_from_json(j);
}

// ---------------------------------------------------------------------------
// Transactional artifact output: written files are removed unless committed.

class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}

    ArtifactWriter(const ArtifactWriter&) = delete;
    ArtifactWriter& operator=(const ArtifactWriter&) = delete;

    ~ArtifactWriter() {
        if (committed_) return;
        std::error_code ec;
        for (const std::filesystem::path& p : written_) std::filesystem::remove(p, ec);
    }

    std::filesystem::path path_for(const std::string& name) const { return dir_ / name; }

    void write_text(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir_);
        const std::filesystem::path p = dir_ / name;
        std::ofstream f(p, std::ios::binary);
        if (!f) throw DataError("cannot write artifact: " + p.string());
        f << content;
        if (!f) throw DataError("failed while writing artifact: " + p.string());
        written_.push_back(p);
    }

    void commit() { committed_ = true; }

    const std::vector<std::filesystem::path>& written() const { return written_; }

  private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> written_;
    bool committed_ = false;
};

std::string trajectory_csv_text(const Trajectory& traj) {
    std::string out = "t,susceptible,infected,recovered,deceased,new_cases,cum_cases\n";
    double acc = 0.0;
    for (int t = 0; t <= traj.horizon; ++t) {
        const CompartmentState& st = traj.states[static_cast<std::size_t>(t)];
        acc += st.new_cases;
        out += std::to_string(t) + ',' + format_double(st.s) + ',' + format_double(st.i) +
               ',' + format_double(st.r) + ',' + format_double(st.d) + ',' +
               format_double(st.new_cases) + ',' + format_double(acc) + '\n';
    }
    return out;
}

std::string panel_csv_text(const PanelDataset& panel) {
    // export_csv writes straight to disk; route it through a temp string by
    // serializing to the same format here to keep the writer transactional.
    std::string out = "region_id,t,new_cases,cum_cases,population,treat_time";
    if (panel.has_outcome()) out += ",outcome_" + to_string(panel.outcome_kind());
    for (const auto& [name, values] : panel.covariates()) out += "," + name;
    out += "\n";
    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        const std::optional<int> tt = panel.treat_time(g);
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            if (!panel.present(g, p)) continue;
            const std::size_t idx = panel.row(g, p);
            out += panel.region_id(g);
            out += ',';
            out += std::to_string(panel.period(p));
            out += ',';
            out += format_double(panel.new_cases(g, p));
            out += ',';
            out += format_double(panel.cum_cases(g, p));
            out += ',';
            out += format_double(panel.population(g));
            out += ',';
            if (tt) out += std::to_string(*tt);
            if (panel.has_outcome()) {
                out += ',';
                if (const auto y = panel.outcome(idx)) out += format_double(*y);
            }
            for (const auto& [name, values] : panel.covariates()) {
                out += ',';
                if (!std::isnan(values[idx])) out += format_double(values[idx]);
            }
            out += '\n';
        }
    }
    return out;
}

std::string event_study_csv_text(const FitResult& fit, SeKind se_kind) {
    std::string out = "rel_time,estimate,ci_low,ci_high\n";
    std::vector<int> ks;
    ks.reserve(fit.event_columns.size() + 1);
    for (const auto& [k, col] : fit.event_columns) ks.push_back(k);
    ks.push_back(fit.spec.reference_period);
    std::sort(ks.begin(), ks.end());
    for (const int k : ks) {
        const double est = fit.event_coefficient(k).value_or(0.0);
        double lo = 0.0, hi = 0.0;
        if (k != fit.spec.reference_period) {
            const double se = fit.event_standard_error(k, se_kind).value_or(
                std::numeric_limits<double>::quiet_NaN());
            lo = est - kCi95 * se;
            hi = est + kCi95 * se;
        }
        out += std::to_string(k) + ',' + format_double(est) + ',' + format_double(lo) +
               ',' + format_double(hi) + '\n';
    }
    return out;
}

std::string fit_report_csv_text(const FitResult& fit) {
    std::string out = "term,estimate,se_classical,se_cluster,dropped\n";
    for (std::size_t c = 0; c < fit.names.size(); ++c) {
        const bool dropped =
            std::find(fit.dropped_columns.begin(), fit.dropped_columns.end(),
                      fit.names[c]) != fit.dropped_columns.end();
        out += fit.names[c] + ',' + format_double(fit.estimates[c]) + ',' +
               format_double(fit.se_classical[c]) + ',' + format_double(fit.se_cluster[c]) +
               ',' + (dropped ? "1" : "0") + '\n';
    }
    return out;
}

// Interval labels such as "[1,8)" hold a comma and need RFC-4180 quoting.
std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (const char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

std::string summary_csv_text(const std::vector<TimingGroupRow>& rows) {
    std::string out = "group,n_regions,mean_growth,mean_cum_per_10k\n";
    for (const TimingGroupRow& r : rows) {
        out += csv_field(r.label) + ',' + std::to_string(r.n_regions) + ',';
        if (r.mean_growth) out += format_double(*r.mean_growth);
        out += ',';
        if (r.mean_cum_per_10k) out += format_double(*r.mean_cum_per_10k);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_simulate(const RunConfig& config, ArtifactWriter& writer) {
    const RegionRoster roster = draw_roster(config.design);
    const std::vector<Trajectory> trajectories = simulate_batch(
        roster.params, config.design.horizon, config.design.mode, config.design.master_seed);
    const PanelDataset panel = build_panel(roster, trajectories);
    writer.write_text("panel.csv", panel_csv_text(panel));
}

void cmd_fit(const RunConfig& config, ArtifactWriter& writer) {
    if (config.input.empty()) throw DataError("fit needs an input panel CSV (--in)");
    std::vector<std::string> warnings;
    const PanelDataset panel = ingest_csv(config.input, {}, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";

    const FitResult fit = twfe_fit(panel, config.spec);
    writer.write_text("fit_report.csv", fit_report_csv_text(fit));
    if (config.spec.effect == EffectKind::dynamic) {
        writer.write_text("event_study.csv", event_study_csv_text(fit, config.spec.se));
    }

    std::cout << "observations: " << fit.nobs << " (" << fit.n_regions_used << " regions, "
              << fit.n_periods_used << " periods), residual dof " << fit.dof << "\n";
    if (!fit.dropped_columns.empty()) {
        std::cout << "dropped collinear terms:";
        for (const std::string& name : fit.dropped_columns) std::cout << ' ' << name;
        std::cout << "\n";
    }
    if (config.spec.effect == EffectKind::constant) {
        std::cout << "treat = " << format_double(fit.coefficient("treat").value_or(0.0))
                  << " (se " << to_string(config.spec.se) << " "
                  << format_double(
                         fit.standard_error("treat", config.spec.se).value_or(0.0))
                  << ")\n";
    } else if (const auto on_impact = fit.event_coefficient(0)) {
        std::cout << "on-impact (k=0) = " << format_double(*on_impact) << " (se "
                  << to_string(config.spec.se) << " "
                  << format_double(fit.event_standard_error(0, config.spec.se).value_or(0.0))
                  << ")\n";
    }
}

void cmd_table1(const RunConfig& config, ArtifactWriter& writer) {
    const std::vector<EvaluationRow> rows =
        table1_run(config.design, config.per_capita_rows);
    const std::string text = table1_text(rows);
    writer.write_text("table1.csv", table1_csv(rows));
    writer.write_text("table1.txt", text);
    std::cout << text;
}

void write_figure(const std::string& which, const RunConfig& config, ArtifactWriter& writer) {
    if (which == "fig1") {
        const FigureScenario sc = figure_scenario("fig1");
        for (std::size_t i = 0; i < sc.roster.size(); ++i) {
            const Trajectory traj = simulate(sc.roster.params[i], sc.horizon);
            writer.write_text("fig1_" + sc.roster.ids[i] + ".csv", trajectory_csv_text(traj));
        }
        return;
    }
    if (which == "fig2") {
        const FigureScenario sc = figure_scenario("fig2");
        const PanelDataset panel =
            build_panel(sc.roster, simulate_batch(sc.roster.params, sc.horizon));
        const PanelDataset log_panel = apply_outcome(panel, OutcomeKind::log_cases);
        const PanelDataset dlog_panel = apply_outcome(panel, OutcomeKind::delta_log);
        std::string out = "region_id,t,log_cases,delta_log\n";
        for (std::size_t g = 0; g < panel.n_regions(); ++g) {
            for (std::size_t p = 0; p < panel.n_periods(); ++p) {
                const std::size_t idx = panel.row(g, p);
                out += panel.region_id(g) + ',' + std::to_string(panel.period(p)) + ',';
                if (const auto v = log_panel.outcome(idx)) out += format_double(*v);
                out += ',';
                if (const auto v = dlog_panel.outcome(idx)) out += format_double(*v);
                out += '\n';
            }
        }
        writer.write_text("fig2_outcomes.csv", out);
        return;
    }
    if (which == "fig3") {
        const FigureScenario sc = figure_scenario("fig3");
        const PanelDataset panel = apply_outcome(
            build_panel(sc.roster, simulate_batch(sc.roster.params, sc.horizon)),
            OutcomeKind::log_cases);
        const std::vector<double> predicted = fe_projection(panel);
        std::string out = "region_id,t,observed_log_cases,fe_prediction\n";
        for (std::size_t g = 0; g < panel.n_regions(); ++g) {
            for (std::size_t p = 0; p < panel.n_periods(); ++p) {
                const std::size_t idx = panel.row(g, p);
                out += panel.region_id(g) + ',' + std::to_string(panel.period(p)) + ',';
                if (const auto v = panel.outcome(idx)) out += format_double(*v);
                out += ',';
                if (!std::isnan(predicted[idx])) out += format_double(predicted[idx]);
                out += '\n';
            }
        }
        writer.write_text("fig3_fe_prediction.csv", out);
        return;
    }
    if (which == "fig4") {
        const FigureScenario sc = figure_scenario("fig4");
        const TruthBundle truth = TruthBundle::generate(sc.roster, sc.horizon,
                                                        SimMode::deterministic, 0);
        writer.write_text("fig4_region1_observed.csv", trajectory_csv_text(truth.observed[0]));
        writer.write_text("fig4_region1_untreated.csv",
                          trajectory_csv_text(truth.untreated[0]));

        RegressionSpec spec;
        spec.outcome = OutcomeKind::delta_log;
        spec.effect = EffectKind::constant;
        const FitResult fit = twfe_fit(truth.observed_panel, spec);
        const std::vector<CounterfactualPath> paths =
            reconstruct_counterfactual_cases(fit, truth.observed_panel);
        const std::vector<double> true_cum = truth.untreated[0].cumulative_cases();
        const std::vector<double> obs_cum = truth.observed[0].cumulative_cases();
        std::string out = "t,observed_cum,true_untreated_cum,predicted_untreated_cum\n";
        for (std::size_t p = 0; p < paths[0].periods.size(); ++p) {
            const std::size_t t = static_cast<std::size_t>(paths[0].periods[p]);
            out += std::to_string(paths[0].periods[p]) + ',' + format_double(obs_cum[t]) +
                   ',' + format_double(true_cum[t]) + ',' +
                   format_double(paths[0].cum_cases[p]) + '\n';
        }
        writer.write_text("fig4_counterfactual.csv", out);
        return;
    }
    if (which == "appendix") {
        // Event-study coefficient paths for both policy variants on each
        // outcome scale, from the full experiment design.
        for (const auto& [policy, tau] :
             {std::pair<std::string, double>{"inefficient", 0.0},
              std::pair<std::string, double>{"efficient", std::log(0.9)}}) {
            ExperimentDesign d = config.design;
            d.tau = tau;
            const RegionRoster roster = draw_roster(d);
            const TruthBundle truth =
                TruthBundle::generate(roster, d.horizon, d.mode, d.master_seed);
            for (const OutcomeKind kind :
                 {OutcomeKind::cumulative, OutcomeKind::log_cases, OutcomeKind::delta_log}) {
                RegressionSpec spec;
                spec.outcome = kind;
                spec.effect = EffectKind::dynamic;
                spec.se = config.spec.se;
                const FitResult fit = twfe_fit(truth.observed_panel, spec);
                writer.write_text("appendix_event_study_" + policy + "_" + to_string(kind) +
                                      ".csv",
                                  event_study_csv_text(fit, spec.se));
            }
        }
        return;
    }
    throw DataError("unknown figure: " + which);
}

void cmd_figures(const RunConfig& config, ArtifactWriter& writer) {
    if (config.figures_which == "all") {
        for (const char* which : {"fig1", "fig2", "fig3", "fig4", "appendix"}) {
            write_figure(which, config, writer);
        }
    } else {
        write_figure(config.figures_which, config, writer);
    }
}

void cmd_summary(const RunConfig& config, ArtifactWriter& writer) {
    PanelDataset panel = [&] {
        if (!config.input.empty()) {
            std::vector<std::string> warnings;
            PanelDataset p = ingest_csv(config.input, {}, &warnings);
            for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
            return p;
        }
        const RegionRoster roster = draw_roster(config.design);
        return build_panel(roster,
                           simulate_batch(roster.params, config.design.horizon,
                                          config.design.mode, config.design.master_seed));
    }();
    const std::vector<TimingGroupRow> rows = timing_group_summary(
        panel, config.summary_bounds, config.summary_at, config.summary_window);
    const std::string csv = summary_csv_text(rows);
    writer.write_text("summary.csv", csv);
    std::cout << csv;
}

} // namespace

int run(const RunConfig& config) {
    try {
        if (config.print_config) {
            std::cout << design_to_json(config.design).dump(2) << "\n";
            return 0;
        }
        if (config.out_dir.empty()) {
            std::cerr << "error: an output directory is required (--out)\n";
            return 1;
        }
        ArtifactWriter writer(config.out_dir);
        if (config.command == "simulate") {
            cmd_simulate(config, writer);
        } else if (config.command == "fit") {
            cmd_fit(config, writer);
        } else if (config.command == "table1") {
            cmd_table1(config, writer);
        } else if (config.command == "figures") {
            cmd_figures(config, writer);
        } else if (config.command == "summary") {
            cmd_summary(config, writer);
        } else {
            std::cerr << "error: unknown command: " << config.command << "\n";
            return 1;
        }
        writer.commit();
        return 0;
    } catch (const DataError& e) {
        std::cerr << "error (data): " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error (numerical): " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

namespace {

struct DesignFlags {
    std::optional<int> n_regions, horizon;
    std::optional<double> beta0, gamma, mu, never_fraction, tau;
    std::vector<double> delta_range, population_range, seed_fraction_range;
    std::vector<int> treat_time_range;

    void apply(ExperimentDesign& d) const {
        if (n_regions) d.n_regions = *n_regions;
        if (horizon) d.horizon = *horizon;
        if (beta0) d.beta0 = *beta0;
        if (gamma) d.gamma = *gamma;
        if (mu) d.mu = *mu;
        if (!delta_range.empty()) d.delta_range = {delta_range[0], delta_range[1]};
        if (!population_range.empty()) {
            d.population_range = {population_range[0], population_range[1]};
        }
        if (!seed_fraction_range.empty()) {
            d.seed_fraction_range = {seed_fraction_range[0], seed_fraction_range[1]};
        }
        if (!treat_time_range.empty()) {
            d.treat_time_range = {treat_time_range[0], treat_time_range[1]};
        }
        if (never_fraction) d.never_treated_fraction = *never_fraction;
        if (tau) d.tau = *tau;
    }
};

void attach_design_flags(CLI::App* cmd, DesignFlags& flags) {
    cmd->add_option("--regions", flags.n_regions, "Number of regions");
    cmd->add_option("--horizon", flags.horizon, "Last simulated period");
    cmd->add_option("--beta0", flags.beta0, "Baseline infection rate");
    cmd->add_option("--gamma", flags.gamma, "Recovery hazard");
    cmd->add_option("--mu", flags.mu, "Case fatality share");
    cmd->add_option("--delta-range", flags.delta_range, "Region log-shifter range")
        ->expected(2);
    cmd->add_option("--population-range", flags.population_range, "Population range")
        ->expected(2);
    cmd->add_option("--seed-fraction-range", flags.seed_fraction_range,
                    "Initial infected share range")
        ->expected(2);
    cmd->add_option("--treat-time-range", flags.treat_time_range, "Adoption period range")
        ->expected(2);
    cmd->add_option("--never-fraction", flags.never_fraction,
                    "Share of regions never adopting the policy");
    cmd->add_option("--tau", flags.tau, "Policy effect on the log infection rate");
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Epidemic-policy estimation laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::string> mode;
    std::optional<std::string> se;
    std::optional<std::string> outcome;
    std::optional<std::uint64_t> seed;
    bool print_config = false;
    app.add_option("--config", config_path, "JSON experiment design")->expected(1);
    app.add_option("--seed", seed, "Master seed override");
    app.add_option("--out", out_dir, "Output directory for artifacts");
    app.add_option("--mode", mode, "Simulation mode: deterministic|poisson");
    app.add_option("--se", se, "Standard errors: classical|cluster");
    app.add_option("--outcome", outcome, "Outcome: cumulative|log|delta-log");
    app.add_flag("--print-config", print_config, "Print the resolved design and exit");
    app.fallthrough();

    RunConfig config;

    CLI::App* sim = app.add_subcommand("simulate", "Simulate a panel and export it as CSV");
    sim->fallthrough();
    DesignFlags sim_flags;
    attach_design_flags(sim, sim_flags);

    CLI::App* fit = app.add_subcommand("fit", "Fit a two-way fixed-effects model on a CSV panel");
    fit->fallthrough();
    std::string fit_in;
    std::string fit_effect = "constant";
    std::optional<int> fit_min_rel, fit_max_rel;
    int fit_ref = -1;
    bool fit_bin = false;
    bool fit_per_10k = false;
    bool fit_log_offset = false;
    std::vector<std::string> fit_covariates;
    fit->add_option("--in", fit_in, "Input panel CSV")->expected(1);
    fit->add_option("--effect", fit_effect, "Treatment effect: constant|dynamic");
    fit->add_option("--min-rel", fit_min_rel, "Smallest relative-time dummy");
    fit->add_option("--max-rel", fit_max_rel, "Largest relative-time dummy");
    fit->add_option("--ref", fit_ref, "Omitted relative time (default -1)");
    fit->add_flag("--bin-endpoints", fit_bin, "Pool horizons past the window edges");
    fit->add_flag("--per-10k", fit_per_10k, "Scale the cumulative outcome per 10k inhabitants");
    fit->add_flag("--log-offset-one", fit_log_offset, "Use log(1+x) for log outcomes");
    fit->add_option("--covariate", fit_covariates, "Panel covariate to include (repeatable)");

    CLI::App* table1 = app.add_subcommand("table1", "Run the estimator comparison study");
    table1->fallthrough();
    DesignFlags table1_flags;
    bool no_per_capita = false;
    attach_design_flags(table1, table1_flags);
    table1->add_flag("--no-per-capita", no_per_capita,
                     "Skip the per-10k cumulative variant rows");

    CLI::App* figures = app.add_subcommand("figures", "Write plot-ready figure datasets");
    figures->fallthrough();
    DesignFlags figures_flags;
    std::string which = "all";
    figures->add_option("--which", which, "fig1|fig2|fig3|fig4|appendix|all");
    attach_design_flags(figures, figures_flags);

    CLI::App* summary = app.add_subcommand("summary", "Adoption-timing group means");
    summary->fallthrough();
    DesignFlags summary_flags;
    std::string summary_in;
    std::vector<int> bounds;
    std::optional<int> at;
    int window = 7;
    summary->add_option("--in", summary_in, "Input panel CSV (otherwise simulates)");
    summary->add_option("--bounds", bounds, "Adoption-period group bounds (ascending)");
    summary->add_option("--at", at, "Period at which groups are compared");
    summary->add_option("--window", window, "Growth look-back window");
    attach_design_flags(summary, summary_flags);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        config.design = load_design(config_path);
    } catch (const DataError& e) {
        std::cerr << "error (data): " << e.what() << "\n";
        return 2;
    }
    config.out_dir = out_dir;
    config.print_config = print_config;
    try {
        if (mode) config.design.mode = mode_from_string(*mode);
        if (seed) config.design.master_seed = *seed;
        if (se) config.spec.se = se_kind_from_string(*se);
        if (outcome) config.spec.outcome = outcome_kind_from_string(*outcome);

        if (sim->parsed()) {
            config.command = "simulate";
            sim_flags.apply(config.design);
        } else if (fit->parsed()) {
            config.command = "fit";
            config.input = fit_in;
            config.spec.effect = effect_kind_from_string(fit_effect);
            config.spec.min_rel_time = fit_min_rel;
            config.spec.max_rel_time = fit_max_rel;
            config.spec.reference_period = fit_ref;
            config.spec.bin_endpoints = fit_bin;
            config.spec.outcome_options.per_10k = fit_per_10k;
            config.spec.outcome_options.log_offset_one = fit_log_offset;
            config.spec.covariates = fit_covariates;
            if (config.spec.outcome == OutcomeKind::none && !config.print_config) {
                std::cerr << "error: fit needs --outcome\n";
                return 1;
            }
        } else if (table1->parsed()) {
            config.command = "table1";
            table1_flags.apply(config.design);
            config.per_capita_rows = !no_per_capita;
        } else if (figures->parsed()) {
            config.command = "figures";
            figures_flags.apply(config.design);
            config.figures_which = which;
        } else if (summary->parsed()) {
            config.command = "summary";
            summary_flags.apply(config.design);
            config.input = summary_in;
            if (!bounds.empty()) config.summary_bounds = bounds;
            config.summary_at = at.value_or(config.design.horizon);
            config.summary_window = window;
        }
    } catch (const DataError& e) {
        std::cerr << "error (data): " << e.what() << "\n";
        return 2;
    }
    return run(config);
}

int run_cli(int argc, const char* const* argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args);
}

} // namespace epifit
