#include "epifit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "epifit/errors.hpp"

namespace epifit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct OutcomePair {
    PanelDataset observed;
    PanelDataset untreated;
};

OutcomePair outcome_pair(const TruthBundle& truth, OutcomeKind kind,
                         const OutcomeOptions& options) {
    return {apply_outcome(truth.observed_panel, kind, options),
            apply_outcome(truth.untreated_panel, kind, options)};
}

std::optional<double> effect_at(const OutcomePair& pair, std::size_t g, std::size_t p) {
    const std::optional<double> y1 = pair.observed.outcome(pair.observed.row(g, p));
    const std::optional<double> y0 = pair.untreated.outcome(pair.untreated.row(g, p));
    if (!y1 || !y0) return std::nullopt;
    return *y1 - *y0;
}

} // namespace

TruthBundle TruthBundle::generate(const RegionRoster& roster, int horizon, SimMode mode,
                                  std::uint64_t master_seed) {
    roster.validate();
    TruthBundle truth;
    truth.roster = roster;
    truth.horizon = horizon;
    truth.mode = mode;
    truth.master_seed = master_seed;
    truth.observed.reserve(roster.size());
    truth.untreated.reserve(roster.size());
    for (std::size_t i = 0; i < roster.size(); ++i) {
        PotentialOutcomes po = potential_outcomes(roster.params[i], horizon, mode,
                                                  derive_seed(master_seed, i));
        truth.observed.push_back(std::move(po.treated_arm));
        truth.untreated.push_back(std::move(po.untreated_arm));
    }
    truth.observed_panel = build_panel(roster, truth.observed);
    truth.untreated_panel = build_panel(roster, truth.untreated);
    return truth;
}

std::optional<double> true_att(const TruthBundle& truth, OutcomeKind kind, int t,
                               const OutcomeOptions& options) {
    const OutcomePair pair = outcome_pair(truth, kind, options);
    const std::optional<std::size_t> p = pair.observed.period_index(t);
    if (!p) return std::nullopt;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < pair.observed.n_regions(); ++g) {
        const std::optional<int> tt = pair.observed.treat_time(g);
        if (!tt || t < *tt) continue;
        if (const auto e = effect_at(pair, g, *p)) {
            sum += *e;
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

double true_att_on_impact(const TruthBundle& truth, OutcomeKind kind,
                          const OutcomeOptions& options) {
    const OutcomePair pair = outcome_pair(truth, kind, options);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < pair.observed.n_regions(); ++g) {
        const std::optional<int> tt = pair.observed.treat_time(g);
        if (!tt) continue;
        const std::optional<std::size_t> p = pair.observed.period_index(*tt);
        if (!p) continue;
        if (const auto e = effect_at(pair, g, *p)) {
            sum += *e;
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

double true_att_post_mean(const TruthBundle& truth, OutcomeKind kind,
                          const OutcomeOptions& options) {
    const OutcomePair pair = outcome_pair(truth, kind, options);
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t g = 0; g < pair.observed.n_regions(); ++g) {
        const std::optional<int> tt = pair.observed.treat_time(g);
        if (!tt) continue;
        double region_sum = 0.0;
        std::size_t region_n = 0;
        for (std::size_t p = 0; p < pair.observed.n_periods(); ++p) {
            if (pair.observed.period(p) < *tt) continue;
            if (const auto e = effect_at(pair, g, p)) {
                region_sum += *e;
                ++region_n;
            }
        }
        if (region_n > 0) {
            sum += region_sum / static_cast<double>(region_n);
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

BiasDecomposition bias_identity_check(const TruthBundle& truth, OutcomeKind kind,
                                      const OutcomeOptions& options, int base_period) {
    const OutcomePair pair = outcome_pair(truth, kind, options);
    const PanelDataset& obs = pair.observed;
    const PanelDataset& unt = pair.untreated;

    std::vector<std::size_t> treated_regions;
    std::vector<std::size_t> control_regions;
    std::optional<int> adoption;
    for (std::size_t g = 0; g < obs.n_regions(); ++g) {
        const std::optional<int> tt = obs.treat_time(g);
        if (!tt) {
            control_regions.push_back(g);
            continue;
        }
        if (adoption && *adoption != *tt) {
            throw DataError("bias decomposition needs a common adoption date");
        }
        adoption = *tt;
        treated_regions.push_back(g);
    }
    if (treated_regions.empty()) throw DataError("no treated region in the panel");
    if (control_regions.empty()) throw DataError("no never-treated region in the panel");
    const std::optional<std::size_t> base_idx = obs.period_index(base_period);
    if (!base_idx) throw DataError("base period is not in the panel");
    if (base_period > *adoption) {
        throw DataError("base period must not come after the adoption date");
    }

    BiasDecomposition out;
    out.base_period = base_period;
    for (std::size_t p = 0; p < obs.n_periods(); ++p) {
        if (obs.period(p) < base_period) continue;

        // Every mean below runs over the same region sets, so the residual is
        // an exact cancellation up to floating-point rounding.
        double t_did = 0.0, t_att = 0.0, t_rhs = 0.0;
        std::size_t n_t = 0;
        for (const std::size_t g : treated_regions) {
            const std::optional<double> y1_t = obs.outcome(obs.row(g, p));
            const std::optional<double> y1_b = obs.outcome(obs.row(g, *base_idx));
            const std::optional<double> y0_t = unt.outcome(unt.row(g, p));
            if (!y1_t || !y1_b || !y0_t) continue;
            t_did += *y1_t - *y1_b;
            t_att += *y1_t - *y0_t;
            t_rhs += *y0_t - *y1_b;
            ++n_t;
        }
        double c_did = 0.0, c_rhs = 0.0;
        std::size_t n_c = 0;
        for (const std::size_t g : control_regions) {
            const std::optional<double> y0_t = unt.outcome(unt.row(g, p));
            const std::optional<double> y0_b = unt.outcome(unt.row(g, *base_idx));
            if (!y0_t || !y0_b) continue;
            c_did += *y0_t - *y0_b;
            c_rhs += *y0_t - *y0_b;
            ++n_c;
        }

        out.periods.push_back(obs.period(p));
        if (n_t == 0 || n_c == 0) {
            out.did.push_back(kNaN);
            out.att.push_back(kNaN);
            out.rhs.push_back(kNaN);
            out.residual.push_back(kNaN);
            continue;
        }
        const double nt = static_cast<double>(n_t);
        const double nc = static_cast<double>(n_c);
        const double did = t_did / nt - c_did / nc;
        const double att = t_att / nt;
        const double rhs = t_rhs / nt - c_rhs / nc;
        out.did.push_back(did);
        out.att.push_back(att);
        out.rhs.push_back(rhs);
        out.residual.push_back(did - att - rhs);
    }
    return out;
}

std::vector<CounterfactualPath> reconstruct_counterfactual_cases(const FitResult& fit,
                                                                 const PanelDataset& raw_panel) {
    // The fit may have been produced from a panel whose outcome was applied on
    // the fly; re-apply so row alignment and options match the fitted model.
    const PanelDataset panel =
        fit.spec.outcome != OutcomeKind::none
            ? apply_outcome(raw_panel, fit.spec.outcome, fit.spec.outcome_options)
            : raw_panel;
    if (fit.fitted.size() != panel.n_obs()) {
        throw DataError("fit result does not match panel shape");
    }
    return reconstruct_counterfactual_cases(predict_counterfactual(fit, panel), fit.outcome,
                                            fit.spec.outcome_options, panel);
}

std::vector<CounterfactualPath> reconstruct_counterfactual_cases(
    const std::vector<double>& prediction, OutcomeKind kind, const OutcomeOptions& options,
    const PanelDataset& panel) {
    if (prediction.size() != panel.n_obs()) {
        throw DataError("prediction vector does not match panel shape");
    }
    if (kind == OutcomeKind::none) throw DataError("reconstruction needs an outcome kind");

    std::vector<CounterfactualPath> paths;
    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        const std::optional<int> tt = panel.treat_time(g);
        if (!tt) continue;
        const std::optional<std::size_t> anchor = panel.period_index(*tt - 1);
        if (!anchor || !panel.present(g, *anchor)) {
            throw DataError("region " + panel.region_id(g) +
                            " has no observed period immediately before adoption");
        }

        CounterfactualPath path;
        path.region_id = panel.region_id(g);
        path.treat_time = *tt;
        path.periods.reserve(panel.n_periods());
        path.cum_cases.reserve(panel.n_periods());

        const double per_10k_scale =
            options.per_10k ? panel.population(g) / 1e4 : 1.0;
        double cum = 0.0;
        double flow_level = panel.new_cases(g, *anchor);
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            const int t = panel.period(p);
            const std::size_t idx = panel.row(g, p);
            if (t < *tt) {
                if (panel.present(g, p)) cum = panel.cum_cases(g, p);
            } else {
                const double y0 = prediction[idx];
                if (!std::isnan(y0)) {
                    switch (kind) {
                        case OutcomeKind::cumulative:
                            cum = y0 * per_10k_scale;
                            break;
                        case OutcomeKind::log_cases: {
                            double flow = std::exp(y0) - (options.log_offset_one ? 1.0 : 0.0);
                            cum += std::max(flow, 0.0);
                            break;
                        }
                        case OutcomeKind::delta_log: {
                            if (options.log_offset_one) {
                                flow_level =
                                    std::max((flow_level + 1.0) * std::exp(y0) - 1.0, 0.0);
                            } else {
                                flow_level *= std::exp(y0);
                            }
                            cum += flow_level;
                            break;
                        }
                        case OutcomeKind::none:
                            break; // rejected on entry
                    }
                }
            }
            path.periods.push_back(t);
            path.cum_cases.push_back(cum);
        }
        paths.push_back(std::move(path));
    }
    return paths;
}

double counterfactual_rmse(const std::vector<CounterfactualPath>& paths,
                           const TruthBundle& truth) {
    double sq_sum = 0.0;
    std::size_t n = 0;
    for (const CounterfactualPath& path : paths) {
        std::size_t region = truth.roster.size();
        for (std::size_t i = 0; i < truth.roster.size(); ++i) {
            if (truth.roster.ids[i] == path.region_id) {
                region = i;
                break;
            }
        }
        if (region == truth.roster.size()) {
            throw DataError("reconstructed region " + path.region_id +
                            " is not in the truth bundle");
        }
        const std::vector<double> true_cum = truth.untreated[region].cumulative_cases();
        for (std::size_t p = 0; p < path.periods.size(); ++p) {
            const int t = path.periods[p];
            if (t < path.treat_time) continue;
            if (t < 0 || static_cast<std::size_t>(t) >= true_cum.size()) continue;
            const double err = path.cum_cases[p] - true_cum[static_cast<std::size_t>(t)];
            if (std::isnan(err)) continue;
            sq_sum += err * err;
            ++n;
        }
    }
    return n > 0 ? std::sqrt(sq_sum / static_cast<double>(n)) : kNaN;
}

namespace {

struct DepvarChoice {
    std::string label;
    OutcomeKind kind;
    OutcomeOptions options;
};

EvaluationRow evaluate_model(const TruthBundle& truth, const std::string& policy,
                             const std::string& model, const DepvarChoice& depvar) {
    RegressionSpec spec;
    spec.outcome = depvar.kind;
    spec.outcome_options = depvar.options;
    spec.effect = model == "did" ? EffectKind::constant : EffectKind::dynamic;
    spec.se = SeKind::cluster_by_region;

    const FitResult fit = twfe_fit(truth.observed_panel, spec);

    EvaluationRow row;
    row.policy = policy;
    row.model = model;
    row.depvar = depvar.label;
    if (spec.effect == EffectKind::constant) {
        row.estimate = fit.coefficient("treat").value_or(kNaN);
        row.se_cluster = fit.standard_error("treat", SeKind::cluster_by_region).value_or(kNaN);
        row.se_classical = fit.standard_error("treat", SeKind::classical).value_or(kNaN);
    } else {
        row.estimate = fit.event_coefficient(0).value_or(kNaN);
        row.se_cluster =
            fit.event_standard_error(0, SeKind::cluster_by_region).value_or(kNaN);
        row.se_classical = fit.event_standard_error(0, SeKind::classical).value_or(kNaN);
    }
    const std::vector<CounterfactualPath> paths =
        reconstruct_counterfactual_cases(fit, truth.observed_panel);
    row.rmse = counterfactual_rmse(paths, truth);
    row.true_att_impact = true_att_on_impact(truth, depvar.kind, depvar.options);
    row.true_att_post_mean = true_att_post_mean(truth, depvar.kind, depvar.options);
    return row;
}

} // namespace

std::vector<EvaluationRow> table1_run(const ExperimentDesign& design,
                                      bool include_per_capita) {
    const std::vector<std::pair<std::string, double>> policies = {
        {"inefficient", 0.0},
        {"efficient", std::log(0.9)},
    };
    std::vector<DepvarChoice> depvars = {
        {"cumulative", OutcomeKind::cumulative, {}},
        {"log", OutcomeKind::log_cases, {}},
        {"delta_log", OutcomeKind::delta_log, {}},
    };
    if (include_per_capita) {
        depvars.insert(depvars.begin() + 1,
                       {"cumulative_per_10k", OutcomeKind::cumulative, {.per_10k = true}});
    }

    std::vector<EvaluationRow> rows;
    for (const auto& [policy, tau] : policies) {
        ExperimentDesign d = design;
        d.tau = tau;
        const RegionRoster roster = draw_roster(d);
        const TruthBundle truth =
            TruthBundle::generate(roster, d.horizon, d.mode, d.master_seed);
        for (const std::string& model : {std::string("did"), std::string("event_study")}) {
            for (const DepvarChoice& depvar : depvars) {
                rows.push_back(evaluate_model(truth, policy, model, depvar));
            }
        }
    }
    return rows;
}

std::string table1_csv(const std::vector<EvaluationRow>& rows) {
    std::string out =
        "policy,model,depvar,estimate,se_cluster,se_classical,rmse,"
        "true_att_impact,true_att_post_mean\n";
    for (const EvaluationRow& r : rows) {
        out += r.policy + ',' + r.model + ',' + r.depvar + ',';
        out += format_double(r.estimate) + ',';
        out += format_double(r.se_cluster) + ',';
        out += format_double(r.se_classical) + ',';
        out += format_double(r.rmse) + ',';
        out += format_double(r.true_att_impact) + ',';
        out += format_double(r.true_att_post_mean) + '\n';
    }
    return out;
}

std::string table1_text(const std::vector<EvaluationRow>& rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-12s %-12s %-18s %12s %12s %12s %12s %12s\n", "policy",
                  "model", "depvar", "estimate", "se_cluster", "rmse", "att_impact",
                  "att_post");
    std::string out = buf;
    out += std::string(out.size() - 1, '-') + "\n";
    for (const EvaluationRow& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-12s %-12s %-18s %12.5g %12.5g %12.5g %12.5g %12.5g\n",
                      r.policy.c_str(), r.model.c_str(), r.depvar.c_str(), r.estimate,
                      r.se_cluster, r.rmse, r.true_att_impact, r.true_att_post_mean);
        out += buf;
    }
    return out;
}

} // namespace epifit
