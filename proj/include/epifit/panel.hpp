#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "epifit/epidemic.hpp"
#include "epifit/scenario.hpp"

// Region-by-period panels over a balanced grid, outcome transforms, and the
// CSV wire format. Datasets are immutable: every operation returns a new one.
//
// CSV schema (UTF-8, comma separated, header row):
//   region_id,t,new_cases,cum_cases,population,treat_time[,outcome_<kind>][,<covariate>...]
// treat_time is empty for never-treated regions; a missing outcome is an
// empty field. Numeric fields use shortest exact round-trip formatting, so
// export -> ingest reproduces every double bit for bit and identical inputs
// export byte-identical files.

namespace epifit {

enum class OutcomeKind { none, cumulative, log_cases, delta_log };

std::string to_string(OutcomeKind kind);
OutcomeKind outcome_kind_from_string(std::string_view name);

struct OutcomeOptions {
    bool log_offset_one = false;      // log(C + 1) instead of dropping C <= 0
    bool cumulative_sum_of_logs = false; // running sum of log C instead of C
    bool per_10k = false;             // cumulative scaled to per 10,000 capita
};

struct PanelObservation {
    std::string_view region_id;
    int t = 0;
    double new_cases = 0;
    double cum_cases = 0;
    bool treated = false;
    std::optional<int> rel_time;      // t - treat_time, when ever treated
    double population = 0;
    std::optional<double> outcome;
};

class PanelDataset {
public:
    std::size_t n_regions() const { return region_ids_.size(); }
    std::size_t n_periods() const { return periods_.size(); }
    std::size_t n_obs() const { return n_regions() * n_periods(); }
    std::size_t row(std::size_t region, std::size_t period) const {
        return region * n_periods() + period;
    }
    std::size_t region_of_row(std::size_t r) const { return r / n_periods(); }
    std::size_t period_of_row(std::size_t r) const { return r % n_periods(); }

    const std::string& region_id(std::size_t region) const { return region_ids_[region]; }
    std::optional<int> treat_time(std::size_t region) const { return treat_times_[region]; }
    double population(std::size_t region) const { return populations_[region]; }
    int period(std::size_t p) const { return periods_[p]; }
    std::optional<std::size_t> region_index(std::string_view id) const;
    std::optional<std::size_t> period_index(int t) const;

    double new_cases(std::size_t region, std::size_t period) const {
        return new_cases_[row(region, period)];
    }
    double cum_cases(std::size_t region, std::size_t period) const {
        return cum_cases_[row(region, period)];
    }
    // A cell can be absent when an unbalanced file was ingested explicitly.
    bool present(std::size_t region, std::size_t period) const;
    bool treated(std::size_t region, std::size_t period) const;
    std::optional<int> rel_time(std::size_t region, std::size_t period) const;

    OutcomeKind outcome_kind() const { return outcome_kind_; }
    const OutcomeOptions& outcome_options() const { return outcome_options_; }
    std::optional<double> outcome(std::size_t obs_row) const;
    bool has_outcome() const { return outcome_kind_ != OutcomeKind::none; }

    PanelObservation observation(std::size_t obs_row) const;

    const std::vector<std::pair<std::string, std::vector<double>>>& covariates() const {
        return covariates_;
    }
    const std::vector<double>* covariate(std::string_view name) const;

    // Construction from raw columns; used by ingest, tests and synthetic
    // panels. Rows may arrive in any order; the grid must be balanced unless
    // allow_unbalanced is set, in which case absent cells are representable.
    struct RawRow {
        std::string region_id;
        int t = 0;
        double new_cases = 0;
        double cum_cases = 0;
        double population = 0;
        std::optional<int> treat_time;
    };
    static PanelDataset from_rows(std::vector<RawRow> rows, bool allow_unbalanced = false);

    // Direct outcome injection for synthetic estimator inputs (values aligned
    // with obs rows; NaN = missing).
    PanelDataset with_outcome_values(OutcomeKind kind, std::vector<double> values) const;

    PanelDataset with_covariate(std::string name, std::vector<double> values) const;

private:
    friend PanelDataset build_panel(const RegionRoster&, const std::vector<Trajectory>&);
    friend PanelDataset apply_outcome(const PanelDataset&, OutcomeKind, const OutcomeOptions&);

    std::vector<std::string> region_ids_;
    std::vector<std::optional<int>> treat_times_;
    std::vector<double> populations_;
    std::vector<int> periods_;             // ascending
    std::vector<double> new_cases_;        // region-major grid, NaN = absent cell
    std::vector<double> cum_cases_;
    OutcomeKind outcome_kind_ = OutcomeKind::none;
    OutcomeOptions outcome_options_;
    std::vector<double> outcome_;          // empty unless has_outcome()
    std::vector<std::pair<std::string, std::vector<double>>> covariates_;
};

// Builds the raw panel for a simulated roster; trajectories must be parallel
// to the roster and share one horizon.
PanelDataset build_panel(const RegionRoster& roster,
                         const std::vector<Trajectory>& trajectories);

// Recomputes the outcome column from the raw case columns (re-application is
// therefore idempotent). delta_log is undefined at each region's first
// period; log outcomes at C <= 0 follow the zero policy in options.
PanelDataset apply_outcome(const PanelDataset& panel, OutcomeKind kind,
                           const OutcomeOptions& options = {});

struct IngestOptions {
    bool allow_unbalanced = false;
};

// Reads the schema above. Errors name the offending cell or column; an
// incomplete grid is an error unless options.allow_unbalanced. A file
// without a new_cases column recovers flows by differencing cum_cases.
// Non-monotone cumulative counts and negative derived flows produce
// warnings, not errors.
PanelDataset ingest_csv(const std::filesystem::path& path,
                        const IngestOptions& options = {},
                        std::vector<std::string>* warnings = nullptr);

void export_csv(const PanelDataset& panel, const std::filesystem::path& path);

void export_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

struct TimingGroupRow {
    std::string label;
    std::size_t n_regions = 0;
    std::optional<double> mean_growth;       // mean of log C_at - log C_{at-w}
    std::optional<double> mean_cum_per_10k;  // mean of cum_at / pop * 1e4
};

// Groups regions by treatment period into [bounds[j], bounds[j+1]) bins plus
// "never" (and "other" for treated regions outside every bin). Regions with
// nonpositive cases at either growth endpoint are skipped for the growth mean.
std::vector<TimingGroupRow> timing_group_summary(const PanelDataset& panel,
                                                 std::span<const int> group_bounds,
                                                 int at, int growth_window);

// Shortest exact round-trip decimal form of a double ("nan" for NaN).
std::string format_double(double v);

} // namespace epifit
