#pragma once
// Ground-truth bookkeeping and estimator evaluation on simulated panels.
//
// A TruthBundle carries both potential-outcome arms of every region, so true
// policy effects are available on any outcome scale next to what an estimator
// recovers from the observed arm alone.  The bias decomposition splits a
// difference-in-differences path into the true effect plus the comparison
// terms that remain when control regions differ, and the counterfactual
// reconstruction turns fitted no-policy outcomes back into cumulative case
// paths comparable against the untreated arm.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epifit/epidemic.hpp"
#include "epifit/estimators.hpp"
#include "epifit/panel.hpp"
#include "epifit/scenario.hpp"

namespace epifit {

struct TruthBundle {
    RegionRoster roster;
    int horizon = 0;
    SimMode mode = SimMode::deterministic;
    std::uint64_t master_seed = 0;
    std::vector<Trajectory> observed;  // policy arm where adopted, both arms equal otherwise
    std::vector<Trajectory> untreated; // the same regions with the policy switched off
    PanelDataset observed_panel;       // raw columns, no outcome applied
    PanelDataset untreated_panel;

    // Simulates both arms of every region; the observed arm is bit-identical
    // to simulate_batch over the roster with the same mode and master seed.
    static TruthBundle generate(const RegionRoster& roster, int horizon, SimMode mode,
                                std::uint64_t master_seed);
};

// Mean effect of the policy on the given outcome scale at period t, averaged
// over regions treated at or before t (observed minus untreated arm).
// nullopt when no region is treated by t or no effect term is defined there.
std::optional<double> true_att(const TruthBundle& truth, OutcomeKind kind, int t,
                               const OutcomeOptions& options = {});

// Mean effect at each treated region's own adoption period.
double true_att_on_impact(const TruthBundle& truth, OutcomeKind kind,
                          const OutcomeOptions& options = {});

// Mean over treated regions of the region's average effect from adoption on.
double true_att_post_mean(const TruthBundle& truth, OutcomeKind kind,
                          const OutcomeOptions& options = {});

struct BiasDecomposition {
    int base_period = 0;
    std::vector<int> periods;    // t >= base_period
    std::vector<double> did;     // difference-in-differences path
    std::vector<double> att;     // true effect among treated at t
    std::vector<double> rhs;     // comparison terms from the decomposition
    std::vector<double> residual; // did - att - rhs; zero up to rounding
};

// Decomposes the DID path on the given outcome scale:
//   did_t = att_t + [mean_T(Y_t(0) - Y_b^obs) - mean_C(Y_t(0) - Y_b(0))]
// where b is the base period, T/C are treated and never-treated regions, and
// Y(0) is the untreated arm.  The bracket collapses to the familiar
// trend-difference term when the policy has no effect at the base period.
BiasDecomposition bias_identity_check(const TruthBundle& truth, OutcomeKind kind,
                                      const OutcomeOptions& options, int base_period);

struct CounterfactualPath {
    std::string region_id;
    int treat_time = 0;
    std::vector<int> periods;      // all panel periods, ascending
    std::vector<double> cum_cases; // observed until adoption, reconstructed after
};

// Turns model-implied untreated outcomes back into cumulative case paths for
// every treated region.  The pre-adoption path is observed; from adoption on,
// the cumulative outcome maps back directly (undoing per-10k scaling), the
// log outcome exponentiates into case flows added to the anchor cumulative
// count, and the delta-log outcome compounds growth from the last
// pre-adoption flow.  Periods with no model prediction contribute no change.
std::vector<CounterfactualPath> reconstruct_counterfactual_cases(const FitResult& fit,
                                                                 const PanelDataset& panel);

// Same reconstruction from any vector of untreated-outcome predictions
// aligned to panel rows (NaN = no prediction).  Feeding the true untreated
// outcome back in reproduces the untreated cumulative path with zero error on
// the cumulative scale.
std::vector<CounterfactualPath> reconstruct_counterfactual_cases(
    const std::vector<double>& predictions, OutcomeKind kind, const OutcomeOptions& options,
    const PanelDataset& panel);

// Root mean squared error of reconstructed cumulative cases against the
// untreated arm, pooled over treated regions and periods from adoption on.
double counterfactual_rmse(const std::vector<CounterfactualPath>& paths,
                           const TruthBundle& truth);

struct EvaluationRow {
    std::string policy; // "inefficient" (no true effect) or "efficient"
    std::string model;  // "did" or "event_study"
    std::string depvar; // outcome label, e.g. "cumulative", "cumulative_per_10k"
    double estimate = 0;
    double se_cluster = 0;
    double se_classical = 0;
    double rmse = 0;
    double true_att_impact = 0;
    double true_att_post_mean = 0;
};

// Full estimator-comparison run: simulates one roster per policy variant
// (identical draws, only the policy effect differs), fits the constant-effect
// and dynamic two-way fixed-effects models on each outcome scale, and scores
// every fit against the truth.  include_per_capita adds the per-10k variant
// of the cumulative rows next to the raw-count rows.
std::vector<EvaluationRow> table1_run(const ExperimentDesign& design,
                                      bool include_per_capita = true);

std::string table1_csv(const std::vector<EvaluationRow>& rows);
std::string table1_text(const std::vector<EvaluationRow>& rows);

} // namespace epifit
