#pragma once
// Two-way fixed-effects estimation on region-by-period panels.
//
// Estimation runs on the panel's prepared outcome column.  The within
// transformation removes region and period means, in closed form when the set
// of used observations forms a complete region-by-period grid and otherwise by
// alternating demeaning sweeps.  The remaining least-squares problem is solved
// by column-pivoted QR so exactly collinear columns are detected and dropped
// (with a recorded name and a zero coefficient) instead of breaking the solve.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "epifit/panel.hpp"

namespace epifit {

enum class EffectKind { constant, dynamic };
enum class SeKind { classical, cluster_by_region };

std::string to_string(EffectKind kind);
std::string to_string(SeKind kind);
EffectKind effect_kind_from_string(std::string_view name);
SeKind se_kind_from_string(std::string_view name);

struct RegressionSpec {
    OutcomeKind outcome = OutcomeKind::none; // none = use the panel's outcome as-is
    OutcomeOptions outcome_options;
    EffectKind effect = EffectKind::constant;
    std::optional<int> min_rel_time; // dynamic-effect window; defaults to observed extremes
    std::optional<int> max_rel_time;
    int reference_period = -1;  // relative time whose dummy is omitted
    bool bin_endpoints = false; // pool k <= min and k >= max into endpoint bins
    SeKind se = SeKind::cluster_by_region;
    std::vector<std::string> covariates; // names of panel covariates to include
};

struct FitResult {
    RegressionSpec spec;
    OutcomeKind outcome = OutcomeKind::none; // outcome actually fitted

    std::vector<std::string> names;   // one entry per requested column, design order
    std::vector<double> estimates;    // dropped columns carry 0
    std::vector<double> se_classical; // NaN for dropped columns or when dof <= 0
    std::vector<double> se_cluster;
    std::vector<std::string> dropped_columns;

    std::vector<double> vcov_classical; // row-major over retained columns
    std::vector<double> vcov_cluster;
    std::vector<std::string> retained; // retained column names, vcov order

    std::vector<double> fitted;    // aligned to panel rows; NaN where unused
    std::vector<double> residuals; // same alignment

    std::size_t nobs = 0;
    std::size_t n_regions_used = 0;
    std::size_t n_periods_used = 0;
    long dof = 0;       // residual degrees of freedom after both fixed effects
    double sigma2 = 0.0; // residual variance estimate; NaN when dof <= 0

    std::map<int, std::size_t> event_columns; // relative time -> column index
    std::optional<int> bin_low;  // pooled lead-bin threshold when binning
    std::optional<int> bin_high; // pooled lag-bin threshold when binning

    std::optional<std::size_t> column_index(std::string_view name) const;
    std::optional<double> coefficient(std::string_view name) const;
    std::optional<double> standard_error(std::string_view name, SeKind kind) const;
    // Effect of being k periods from adoption under the fitted model: the
    // matching dummy's coefficient, an endpoint bin's coefficient when k lies
    // past it, and 0 at the reference period.  nullopt outside the window.
    std::optional<double> event_coefficient(int k) const;
    std::optional<double> event_standard_error(int k, SeKind kind) const;
};

FitResult twfe_fit(const PanelDataset& panel, const RegressionSpec& spec);

// Projection of the outcome onto region and period fixed effects alone,
// aligned to panel rows (NaN where the outcome is unavailable).
std::vector<double> fe_projection(const PanelDataset& panel);

// Model-implied untreated outcome: fitted value minus the treatment terms,
// aligned to panel rows (NaN where the model has no prediction).
std::vector<double> predict_counterfactual(const FitResult& fit, const PanelDataset& panel);

struct DidResult {
    int base_period = 0;
    std::vector<int> periods;      // t >= base_period, ascending
    std::vector<double> estimates; // NaN when either group is empty at t
    std::vector<std::size_t> n_treated;
    std::vector<std::size_t> n_control;
};

// Difference in mean outcome changes from the base period, treated versus
// never-treated, one estimate per period from the base onward.  Requires a
// common adoption date among treated regions and at least one never-treated
// region; base_period must be an observed period no later than the adoption.
DidResult did_estimator(const PanelDataset& panel, int base_period);

} // namespace epifit
