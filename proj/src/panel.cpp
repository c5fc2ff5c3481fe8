#include "epifit/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "epifit/errors.hpp"

namespace epifit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing(double v) { return std::isnan(v); }

double parse_double(std::string_view field, std::size_t line_no, const char* col) {
    double out = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw DataError("line " + std::to_string(line_no) + ": field '" + col +
                        "' is not a number: '" + std::string(field) + "'");
    }
    return out;
}

int parse_int(std::string_view field, std::size_t line_no, const char* col) {
    int out = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw DataError("line " + std::to_string(line_no) + ": field '" + col +
                        "' is not an integer: '" + std::string(field) + "'");
    }
    return out;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

} // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::none: return "none";
        case OutcomeKind::cumulative: return "cumulative";
        case OutcomeKind::log_cases: return "log";
        case OutcomeKind::delta_log: return "delta_log";
    }
    return "none";
}

OutcomeKind outcome_kind_from_string(std::string_view name) {
    if (name == "none") return OutcomeKind::none;
    if (name == "cumulative") return OutcomeKind::cumulative;
    if (name == "log") return OutcomeKind::log_cases;
    if (name == "delta_log" || name == "delta-log") return OutcomeKind::delta_log;
    throw DataError("unknown outcome kind: " + std::string(name));
}

std::optional<std::size_t> PanelDataset::region_index(std::string_view id) const {
    for (std::size_t g = 0; g < region_ids_.size(); ++g) {
        if (region_ids_[g] == id) return g;
    }
    return std::nullopt;
}

std::optional<std::size_t> PanelDataset::period_index(int t) const {
    const auto it = std::lower_bound(periods_.begin(), periods_.end(), t);
    if (it == periods_.end() || *it != t) return std::nullopt;
    return static_cast<std::size_t>(it - periods_.begin());
}

bool PanelDataset::present(std::size_t region, std::size_t period) const {
    return !is_missing(new_cases_[row(region, period)]);
}

bool PanelDataset::treated(std::size_t region, std::size_t period) const {
    const std::optional<int>& tt = treat_times_[region];
    return tt.has_value() && periods_[period] >= *tt;
}

std::optional<int> PanelDataset::rel_time(std::size_t region, std::size_t period) const {
    const std::optional<int>& tt = treat_times_[region];
    if (!tt) return std::nullopt;
    return periods_[period] - *tt;
}

std::optional<double> PanelDataset::outcome(std::size_t obs_row) const {
    if (!has_outcome()) return std::nullopt;
    const double v = outcome_[obs_row];
    if (is_missing(v)) return std::nullopt;
    return v;
}

PanelObservation PanelDataset::observation(std::size_t obs_row) const {
    const std::size_t g = region_of_row(obs_row);
    const std::size_t p = period_of_row(obs_row);
    PanelObservation obs;
    obs.region_id = region_ids_[g];
    obs.t = periods_[p];
    obs.new_cases = new_cases_[obs_row];
    obs.cum_cases = cum_cases_[obs_row];
    obs.treated = treated(g, p);
    obs.rel_time = rel_time(g, p);
    obs.population = populations_[g];
    obs.outcome = outcome(obs_row);
    return obs;
}

const std::vector<double>* PanelDataset::covariate(std::string_view name) const {
    for (const auto& [cov_name, values] : covariates_) {
        if (cov_name == name) return &values;
    }
    return nullptr;
}

PanelDataset PanelDataset::from_rows(std::vector<RawRow> rows, bool allow_unbalanced) {
    if (rows.empty()) throw DataError("panel has no rows");

    PanelDataset panel;
    std::map<std::string, std::size_t> region_pos;
    std::set<int> period_set;
    for (const RawRow& r : rows) period_set.insert(r.t);
    panel.periods_.assign(period_set.begin(), period_set.end());

    for (const RawRow& r : rows) {
        if (r.region_id.empty()) throw DataError("empty region_id");
        if (region_pos.emplace(r.region_id, panel.region_ids_.size()).second) {
            panel.region_ids_.push_back(r.region_id);
            panel.treat_times_.push_back(r.treat_time);
            panel.populations_.push_back(r.population);
        }
    }

    const std::size_t n = panel.n_obs();
    panel.new_cases_.assign(n, kNaN);
    panel.cum_cases_.assign(n, kNaN);

    for (const RawRow& r : rows) {
        const std::size_t g = region_pos.at(r.region_id);
        if (panel.treat_times_[g] != r.treat_time) {
            throw DataError("region " + r.region_id + " has inconsistent treat_time");
        }
        if (panel.populations_[g] != r.population) {
            throw DataError("region " + r.region_id + " has inconsistent population");
        }
        const auto p = panel.period_index(r.t);
        const std::size_t idx = panel.row(g, *p);
        if (!is_missing(panel.new_cases_[idx])) {
            throw DataError("duplicate cell: region " + r.region_id + " at period " +
                            std::to_string(r.t));
        }
        panel.new_cases_[idx] = r.new_cases;
        panel.cum_cases_[idx] = r.cum_cases;
    }

    if (!allow_unbalanced) {
        for (std::size_t g = 0; g < panel.n_regions(); ++g) {
            for (std::size_t p = 0; p < panel.n_periods(); ++p) {
                if (is_missing(panel.new_cases_[panel.row(g, p)])) {
                    throw DataError("unbalanced panel: missing cell for region " +
                                    panel.region_ids_[g] + " at period " +
                                    std::to_string(panel.periods_[p]));
                }
            }
        }
    }
    return panel;
}

PanelDataset PanelDataset::with_outcome_values(OutcomeKind kind,
                                               std::vector<double> values) const {
    if (values.size() != n_obs()) {
        throw DataError("outcome values size does not match panel grid");
    }
    PanelDataset out = *this;
    out.outcome_kind_ = kind;
    out.outcome_options_ = {};
    out.outcome_ = std::move(values);
    return out;
}

PanelDataset PanelDataset::with_covariate(std::string name,
                                          std::vector<double> values) const {
    if (values.size() != n_obs()) {
        throw DataError("covariate size does not match panel grid");
    }
    if (covariate(name) != nullptr) throw DataError("duplicate covariate: " + name);
    PanelDataset out = *this;
    out.covariates_.emplace_back(std::move(name), std::move(values));
    return out;
}

PanelDataset build_panel(const RegionRoster& roster,
                         const std::vector<Trajectory>& trajectories) {
    roster.validate();
    if (roster.size() != trajectories.size()) {
        throw DataError("roster and trajectory counts differ");
    }
    const int horizon = trajectories.empty() ? 0 : trajectories.front().horizon;
    for (const Trajectory& traj : trajectories) {
        if (traj.horizon != horizon) throw DataError("trajectories differ in horizon");
    }

    PanelDataset panel;
    panel.region_ids_ = roster.ids;
    panel.periods_.resize(static_cast<std::size_t>(horizon) + 1);
    for (int t = 0; t <= horizon; ++t) panel.periods_[static_cast<std::size_t>(t)] = t;
    panel.treat_times_.reserve(roster.size());
    panel.populations_.reserve(roster.size());
    for (const EpidemicParams& p : roster.params) {
        panel.treat_times_.push_back(p.treat_time);
        panel.populations_.push_back(p.population);
    }

    panel.new_cases_.resize(panel.n_obs());
    panel.cum_cases_.resize(panel.n_obs());
    for (std::size_t g = 0; g < roster.size(); ++g) {
        double acc = 0.0;
        for (std::size_t p = 0; p <= static_cast<std::size_t>(horizon); ++p) {
            const double c = trajectories[g].states[p].new_cases;
            acc += c;
            panel.new_cases_[panel.row(g, p)] = c;
            panel.cum_cases_[panel.row(g, p)] = acc;
        }
    }
    return panel;
}

PanelDataset apply_outcome(const PanelDataset& panel, OutcomeKind kind,
                           const OutcomeOptions& options) {
    if (kind == OutcomeKind::none) throw DataError("cannot apply outcome kind 'none'");
    if (options.per_10k && kind != OutcomeKind::cumulative) {
        throw DataError("per-capita scaling applies to the cumulative outcome only");
    }
    PanelDataset out = panel;
    out.outcome_kind_ = kind;
    out.outcome_options_ = options;
    out.outcome_.assign(panel.n_obs(), kNaN);

    const auto log_value = [&](double c) -> double {
        if (options.log_offset_one) return c >= 0.0 ? std::log1p(c) : kNaN;
        return c > 0.0 ? std::log(c) : kNaN;
    };

    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        const double scale = options.per_10k ? 1e4 / panel.population(g) : 1.0;
        double log_sum = 0.0;
        bool log_sum_defined = true;
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            const std::size_t idx = panel.row(g, p);
            const double c = panel.new_cases_[idx];
            if (is_missing(c)) {
                log_sum_defined = false;
                continue;
            }
            switch (kind) {
                case OutcomeKind::cumulative: {
                    if (options.cumulative_sum_of_logs) {
                        const double lc = log_value(c);
                        if (is_missing(lc)) log_sum_defined = false;
                        if (log_sum_defined) {
                            log_sum += lc;
                            out.outcome_[idx] = log_sum;
                        }
                    } else {
                        out.outcome_[idx] = panel.cum_cases_[idx] * scale;
                    }
                    break;
                }
                case OutcomeKind::log_cases:
                    out.outcome_[idx] = log_value(c);
                    break;
                case OutcomeKind::delta_log: {
                    if (p == 0) break;
                    const double prev = panel.new_cases_[panel.row(g, p - 1)];
                    if (is_missing(prev)) break;
                    const double lc = log_value(c);
                    const double lp = log_value(prev);
                    if (!is_missing(lc) && !is_missing(lp)) out.outcome_[idx] = lc - lp;
                    break;
                }
                case OutcomeKind::none:
                    break;
            }
        }
    }
    return out;
}

namespace {

struct ParsedCsv {
    std::vector<PanelDataset::RawRow> rows;
    std::vector<double> outcome_values;          // parallel to rows
    bool has_outcome = false;
    OutcomeKind outcome_kind = OutcomeKind::none;
    std::vector<std::string> covariate_names;
    std::vector<std::vector<double>> covariate_values; // per covariate, parallel to rows
    bool had_new_cases_column = false;
};

ParsedCsv parse_panel_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty CSV file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string_view> header = split_csv_line(line);
    int col_region = -1, col_t = -1, col_new = -1, col_cum = -1, col_pop = -1,
        col_treat = -1, col_outcome = -1;
    ParsedCsv parsed;
    std::vector<int> covariate_cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string_view name = header[c];
        const int ci = static_cast<int>(c);
        if (name == "region_id") col_region = ci;
        else if (name == "t") col_t = ci;
        else if (name == "new_cases") col_new = ci;
        else if (name == "cum_cases") col_cum = ci;
        else if (name == "population") col_pop = ci;
        else if (name == "treat_time") col_treat = ci;
        else if (name.rfind("outcome_", 0) == 0) {
            if (col_outcome >= 0) throw DataError("multiple outcome columns in CSV");
            col_outcome = ci;
            parsed.has_outcome = true;
            parsed.outcome_kind = outcome_kind_from_string(name.substr(8));
        } else {
            covariate_cols.push_back(ci);
            parsed.covariate_names.emplace_back(name);
        }
    }
    if (col_region < 0 || col_t < 0 || col_pop < 0 || col_treat < 0) {
        throw DataError("CSV header must contain region_id, t, population, treat_time");
    }
    if (col_new < 0 && col_cum < 0) {
        throw DataError("CSV header must contain new_cases or cum_cases");
    }
    parsed.had_new_cases_column = col_new >= 0;
    parsed.covariate_values.resize(covariate_cols.size());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string_view> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        PanelDataset::RawRow r;
        r.region_id = std::string(fields[static_cast<std::size_t>(col_region)]);
        r.t = parse_int(fields[static_cast<std::size_t>(col_t)], line_no, "t");
        r.population =
            parse_double(fields[static_cast<std::size_t>(col_pop)], line_no, "population");
        const std::string_view treat = fields[static_cast<std::size_t>(col_treat)];
        if (!treat.empty()) r.treat_time = parse_int(treat, line_no, "treat_time");
        if (col_new >= 0) {
            r.new_cases =
                parse_double(fields[static_cast<std::size_t>(col_new)], line_no, "new_cases");
        }
        if (col_cum >= 0) {
            r.cum_cases =
                parse_double(fields[static_cast<std::size_t>(col_cum)], line_no, "cum_cases");
        }
        if (col_outcome >= 0) {
            const std::string_view field = fields[static_cast<std::size_t>(col_outcome)];
            parsed.outcome_values.push_back(
                field.empty() ? kNaN : parse_double(field, line_no, "outcome"));
        }
        for (std::size_t k = 0; k < covariate_cols.size(); ++k) {
            parsed.covariate_values[k].push_back(
                parse_double(fields[static_cast<std::size_t>(covariate_cols[k])], line_no,
                             parsed.covariate_names[k].c_str()));
        }
        parsed.rows.push_back(std::move(r));
    }
    if (parsed.rows.empty()) throw DataError("CSV has a header but no data rows");
    return parsed;
}

} // namespace

PanelDataset ingest_csv(const std::filesystem::path& path, const IngestOptions& options,
                        std::vector<std::string>* warnings) {
    ParsedCsv parsed = parse_panel_csv(path);

    // Track per-region period order to derive flows and check monotonicity.
    std::map<std::string, std::vector<std::size_t>> region_rows;
    for (std::size_t k = 0; k < parsed.rows.size(); ++k) {
        region_rows[parsed.rows[k].region_id].push_back(k);
    }
    for (auto& [id, idxs] : region_rows) {
        std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
            return parsed.rows[a].t < parsed.rows[b].t;
        });
        bool warned_monotone = false;
        double prev_cum = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < idxs.size(); ++j) {
            PanelDataset::RawRow& r = parsed.rows[idxs[j]];
            if (!parsed.had_new_cases_column) {
                // Differencing fallback: the first observed period keeps its
                // whole cumulative count as flow.
                const double prev = j == 0 ? 0.0 : parsed.rows[idxs[j - 1]].cum_cases;
                r.new_cases = r.cum_cases - prev;
                if (r.new_cases < 0.0 && warnings) {
                    warnings->push_back("region " + id + " period " + std::to_string(r.t) +
                                        ": negative derived new_cases from differencing");
                }
            }
            if (r.cum_cases < prev_cum && !warned_monotone) {
                if (warnings) {
                    warnings->push_back("region " + id +
                                        ": cum_cases not monotone from period " +
                                        std::to_string(r.t));
                }
                warned_monotone = true;
            }
            prev_cum = r.cum_cases;
        }
        // An absent cum column is rebuilt as the running sum of flows.
        bool have_cum = false;
        for (std::size_t j = 0; j < idxs.size() && !have_cum; ++j) {
            have_cum = parsed.rows[idxs[j]].cum_cases != 0.0;
        }
        if (parsed.had_new_cases_column && !have_cum) {
            double acc = 0.0;
            for (std::size_t j = 0; j < idxs.size(); ++j) {
                acc += parsed.rows[idxs[j]].new_cases;
                parsed.rows[idxs[j]].cum_cases = acc;
            }
        }
    }

    // Keep (region, period) keys before the rows are consumed by from_rows, so
    // outcome and covariate columns can ride along by grid lookup.
    std::vector<std::pair<std::string, int>> row_keys;
    row_keys.reserve(parsed.rows.size());
    for (const PanelDataset::RawRow& r : parsed.rows) row_keys.emplace_back(r.region_id, r.t);

    PanelDataset panel =
        PanelDataset::from_rows(std::move(parsed.rows), options.allow_unbalanced);

    if (parsed.has_outcome || !parsed.covariate_names.empty()) {
        std::vector<double> outcome(panel.n_obs(), kNaN);
        std::vector<std::vector<double>> covs(
            parsed.covariate_names.size(),
            std::vector<double>(panel.n_obs(), kNaN));
        for (std::size_t k = 0; k < row_keys.size(); ++k) {
            const auto g = panel.region_index(row_keys[k].first);
            const auto p = panel.period_index(row_keys[k].second);
            const std::size_t idx = panel.row(*g, *p);
            if (parsed.has_outcome) outcome[idx] = parsed.outcome_values[k];
            for (std::size_t c = 0; c < covs.size(); ++c) {
                covs[c][idx] = parsed.covariate_values[c][k];
            }
        }
        if (parsed.has_outcome) {
            panel = panel.with_outcome_values(parsed.outcome_kind, std::move(outcome));
        }
        for (std::size_t c = 0; c < covs.size(); ++c) {
            panel = panel.with_covariate(parsed.covariate_names[c], std::move(covs[c]));
        }
    }
    return panel;
}

void export_csv(const PanelDataset& panel, const std::filesystem::path& path) {
    std::string out;
    out.reserve(panel.n_obs() * 64);
    out += "region_id,t,new_cases,cum_cases,population,treat_time";
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
                const std::optional<double> y = panel.outcome(idx);
                if (y) out += format_double(*y);
            }
            for (const auto& [name, values] : panel.covariates()) {
                out += ',';
                if (!is_missing(values[idx])) out += format_double(values[idx]);
            }
            out += '\n';
        }
    }

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write CSV file: " + path.string());
    f << out;
}

void export_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
    std::string out = "t,susceptible,infected,recovered,deceased,new_cases,cum_cases\n";
    double acc = 0.0;
    for (int t = 0; t <= traj.horizon; ++t) {
        const CompartmentState& st = traj.states[static_cast<std::size_t>(t)];
        acc += st.new_cases;
        out += std::to_string(t);
        out += ',';
        out += format_double(st.s);
        out += ',';
        out += format_double(st.i);
        out += ',';
        out += format_double(st.r);
        out += ',';
        out += format_double(st.d);
        out += ',';
        out += format_double(st.new_cases);
        out += ',';
        out += format_double(acc);
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write CSV file: " + path.string());
    f << out;
}

std::vector<TimingGroupRow> timing_group_summary(const PanelDataset& panel,
                                                 std::span<const int> group_bounds,
                                                 int at, int growth_window) {
    if (growth_window < 1) throw DataError("growth window must be >= 1");
    for (std::size_t j = 1; j < group_bounds.size(); ++j) {
        if (group_bounds[j] <= group_bounds[j - 1]) {
            throw DataError("group bounds must be strictly ascending");
        }
    }
    const auto p_at = panel.period_index(at);
    const auto p_back = panel.period_index(at - growth_window);
    if (!p_at || !p_back) {
        throw DataError("summary periods " + std::to_string(at) + " and " +
                        std::to_string(at - growth_window) + " must both be in the panel");
    }

    struct Acc {
        std::size_t n = 0;
        double growth_sum = 0;
        std::size_t growth_n = 0;
        double cum_sum = 0;
        std::size_t cum_n = 0;
    };
    const std::size_t n_bins = group_bounds.size() >= 2 ? group_bounds.size() - 1 : 0;
    std::vector<Acc> bins(n_bins + 2); // bins..., other, never
    const std::size_t other_slot = n_bins;
    const std::size_t never_slot = n_bins + 1;

    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        const std::optional<int> tt = panel.treat_time(g);
        std::size_t slot = never_slot;
        if (tt) {
            slot = other_slot;
            for (std::size_t j = 0; j < n_bins; ++j) {
                if (*tt >= group_bounds[j] && *tt < group_bounds[j + 1]) {
                    slot = j;
                    break;
                }
            }
        }
        Acc& acc = bins[slot];
        acc.n += 1;
        if (panel.present(g, *p_at) && panel.present(g, *p_back)) {
            const double c1 = panel.new_cases(g, *p_at);
            const double c0 = panel.new_cases(g, *p_back);
            if (c1 > 0.0 && c0 > 0.0) {
                acc.growth_sum += std::log(c1) - std::log(c0);
                acc.growth_n += 1;
            }
            acc.cum_sum += panel.cum_cases(g, *p_at) / panel.population(g) * 1e4;
            acc.cum_n += 1;
        }
    }

    std::vector<TimingGroupRow> rows;
    const auto push = [&](std::size_t slot, std::string label) {
        const Acc& acc = bins[slot];
        if (acc.n == 0) return;
        TimingGroupRow row;
        row.label = std::move(label);
        row.n_regions = acc.n;
        if (acc.growth_n > 0) row.mean_growth = acc.growth_sum / static_cast<double>(acc.growth_n);
        if (acc.cum_n > 0) row.mean_cum_per_10k = acc.cum_sum / static_cast<double>(acc.cum_n);
        rows.push_back(std::move(row));
    };
    for (std::size_t j = 0; j < n_bins; ++j) {
        push(j, "[" + std::to_string(group_bounds[j]) + "," +
                    std::to_string(group_bounds[j + 1]) + ")");
    }
    push(other_slot, "other");
    push(never_slot, "never");
    return rows;
}

} // namespace epifit
