#include "epifit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "epifit/errors.hpp"
#include "epifit/kernels.hpp"

namespace epifit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kMaxDemeanSweeps = 1000;
constexpr double kDemeanTol = 1e-12;
constexpr double kRankThreshold = 1e-10;

// Usable observations and their position in the used region/period index
// space, plus whether they form a complete grid (every used region observed
// in the same set of periods), which unlocks the closed-form demeaning path.
struct WithinPlan {
    std::vector<std::size_t> rows;      // panel obs rows, region-major order
    std::vector<std::size_t> region_of; // used-region index per used row
    std::vector<std::size_t> period_of; // used-period index per used row
    std::size_t n_regions = 0;
    std::size_t n_periods = 0;
    bool complete_grid = false;
    std::vector<std::size_t> panel_regions; // used-region -> panel region index
};

WithinPlan plan_within(const PanelDataset& panel, const std::vector<char>& use_row) {
    WithinPlan plan;
    std::vector<std::vector<std::size_t>> region_periods; // per used region
    std::vector<std::size_t> period_map(panel.n_periods(),
                                        std::numeric_limits<std::size_t>::max());
    std::vector<char> period_seen(panel.n_periods(), 0);

    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        bool any = false;
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            if (use_row[panel.row(g, p)]) {
                any = true;
                period_seen[p] = 1;
            }
        }
        if (any) plan.panel_regions.push_back(g);
    }
    for (std::size_t p = 0; p < panel.n_periods(); ++p) {
        if (period_seen[p]) {
            period_map[p] = plan.n_periods;
            ++plan.n_periods;
        }
    }
    plan.n_regions = plan.panel_regions.size();

    region_periods.resize(plan.n_regions);
    for (std::size_t ug = 0; ug < plan.n_regions; ++ug) {
        const std::size_t g = plan.panel_regions[ug];
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            if (!use_row[panel.row(g, p)]) continue;
            plan.rows.push_back(panel.row(g, p));
            plan.region_of.push_back(ug);
            plan.period_of.push_back(period_map[p]);
            region_periods[ug].push_back(period_map[p]);
        }
    }

    plan.complete_grid = true;
    for (std::size_t ug = 1; ug < plan.n_regions && plan.complete_grid; ++ug) {
        plan.complete_grid = region_periods[ug] == region_periods[0];
    }
    if (plan.n_regions == 0) plan.complete_grid = false;
    return plan;
}

// Closed-form two-pass demeaning on a complete grid, in place on `col`
// (ordered as plan.rows).  Uses the runtime-selected kernels.
void demean_complete_grid(const WithinPlan& plan, double* col) {
    const kern::Kernels& k = kern::active_kernels();
    const std::size_t nr = plan.n_regions;
    const std::size_t np = plan.n_periods;
    // plan.rows is region-major with identical period sets, so `col` already
    // is the grid buffer.
    std::vector<double> region_means(nr);
    for (std::size_t g = 0; g < nr; ++g) {
        region_means[g] = k.sum(col + g * np, np) / static_cast<double>(np);
    }
    std::vector<double> acc(np, 0.0);
    for (std::size_t g = 0; g < nr; ++g) k.vector_add(acc.data(), col + g * np, np);
    std::vector<double> period_means(np);
    for (std::size_t p = 0; p < np; ++p) period_means[p] = acc[p] / static_cast<double>(nr);
    const double grand_mean =
        k.sum(col, nr * np) / static_cast<double>(nr * np);
    k.demean_apply(col, nr, np, region_means.data(), period_means.data(), grand_mean);
}

// Alternating demeaning for incomplete grids; converges to the two-way
// projection.  Tolerance is relative to the column's initial magnitude.
void demean_alternating(const WithinPlan& plan, double* col) {
    const std::size_t n = plan.rows.size();
    double colmax = 0.0;
    for (std::size_t i = 0; i < n; ++i) colmax = std::max(colmax, std::abs(col[i]));
    const double tol = kDemeanTol * std::max(1.0, colmax);

    std::vector<double> mean_r(plan.n_regions);
    std::vector<std::size_t> cnt_r(plan.n_regions);
    std::vector<double> mean_p(plan.n_periods);
    std::vector<std::size_t> cnt_p(plan.n_periods);

    for (std::size_t sweep = 0; sweep < kMaxDemeanSweeps; ++sweep) {
        double shift = 0.0;
        std::fill(mean_r.begin(), mean_r.end(), 0.0);
        std::fill(cnt_r.begin(), cnt_r.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            mean_r[plan.region_of[i]] += col[i];
            cnt_r[plan.region_of[i]] += 1;
        }
        for (std::size_t g = 0; g < plan.n_regions; ++g) {
            mean_r[g] /= static_cast<double>(cnt_r[g]);
            shift = std::max(shift, std::abs(mean_r[g]));
        }
        for (std::size_t i = 0; i < n; ++i) col[i] -= mean_r[plan.region_of[i]];

        std::fill(mean_p.begin(), mean_p.end(), 0.0);
        std::fill(cnt_p.begin(), cnt_p.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            mean_p[plan.period_of[i]] += col[i];
            cnt_p[plan.period_of[i]] += 1;
        }
        for (std::size_t p = 0; p < plan.n_periods; ++p) {
            mean_p[p] /= static_cast<double>(cnt_p[p]);
            shift = std::max(shift, std::abs(mean_p[p]));
        }
        for (std::size_t i = 0; i < n; ++i) col[i] -= mean_p[plan.period_of[i]];

        if (shift <= tol) return;
    }
    throw NumericError("within transformation did not converge");
}

void demean_column(const WithinPlan& plan, double* col) {
    if (plan.complete_grid) {
        demean_complete_grid(plan, col);
    } else {
        demean_alternating(plan, col);
    }
}

PanelDataset prepare_outcome(const PanelDataset& panel, const RegressionSpec& spec) {
    if (spec.outcome != OutcomeKind::none) {
        return apply_outcome(panel, spec.outcome, spec.outcome_options);
    }
    if (!panel.has_outcome()) {
        throw DataError("panel has no outcome column; set one or pass an outcome kind");
    }
    return panel;
}

struct Design {
    WithinPlan plan;
    Eigen::VectorXd y;
    Eigen::MatrixXd x;
    std::vector<std::string> names;
    std::map<int, std::size_t> event_columns;
    std::optional<int> bin_low;
    std::optional<int> bin_high;
    std::vector<std::size_t> treatment_cols; // indices of treatment columns in x
};

Design build_design(const PanelDataset& panel, const RegressionSpec& spec) {
    std::vector<const std::vector<double>*> covs;
    covs.reserve(spec.covariates.size());
    for (const std::string& name : spec.covariates) {
        const std::vector<double>* values = panel.covariate(name);
        if (!values) throw DataError("unknown covariate: " + name);
        covs.push_back(values);
    }

    std::vector<char> use_row(panel.n_obs(), 0);
    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            const std::size_t idx = panel.row(g, p);
            if (!panel.present(g, p)) continue;
            if (!panel.outcome(idx)) continue;
            bool ok = true;
            for (const auto* values : covs) ok = ok && !std::isnan((*values)[idx]);
            if (ok) use_row[idx] = 1;
        }
    }

    Design design;
    design.plan = plan_within(panel, use_row);
    const std::size_t n = design.plan.rows.size();
    if (n == 0) throw DataError("no usable observations for the regression");

    design.y.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        design.y[static_cast<Eigen::Index>(i)] = *panel.outcome(design.plan.rows[i]);
    }

    if (spec.effect == EffectKind::constant) {
        design.names.emplace_back("treat");
        design.treatment_cols.push_back(0);
        design.x.resize(static_cast<Eigen::Index>(n),
                        static_cast<Eigen::Index>(1 + covs.size()));
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = design.plan.rows[i];
            const std::size_t g = panel.region_of_row(idx);
            const std::size_t p = panel.period_of_row(idx);
            design.x(static_cast<Eigen::Index>(i), 0) = panel.treated(g, p) ? 1.0 : 0.0;
        }
    } else {
        // Observed relative times among used observations bound the default
        // dummy window.
        int k_min = std::numeric_limits<int>::max();
        int k_max = std::numeric_limits<int>::min();
        bool any_rel = false;
        std::vector<std::optional<int>> rel(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t idx = design.plan.rows[i];
            rel[i] = panel.rel_time(panel.region_of_row(idx), panel.period_of_row(idx));
            if (rel[i]) {
                any_rel = true;
                k_min = std::min(k_min, *rel[i]);
                k_max = std::max(k_max, *rel[i]);
            }
        }
        if (!any_rel) {
            throw DataError("dynamic-effect regression needs at least one treated region");
        }
        const int lo = spec.min_rel_time.value_or(k_min);
        const int hi = spec.max_rel_time.value_or(k_max);
        if (lo > hi) throw DataError("relative-time window is empty");
        if (spec.bin_endpoints) {
            if (lo >= hi) throw DataError("endpoint binning needs a window of width >= 2");
            if (spec.reference_period <= lo || spec.reference_period >= hi) {
                throw DataError("reference period must lie strictly inside the bins");
            }
            design.bin_low = lo;
            design.bin_high = hi;
        }

        std::vector<int> column_ks;
        for (int k = lo; k <= hi; ++k) {
            if (k == spec.reference_period) continue;
            column_ks.push_back(k);
        }
        if (column_ks.empty()) {
            throw DataError("relative-time window contains only the reference period");
        }
        design.x.setZero(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(column_ks.size() + covs.size()));
        for (std::size_t c = 0; c < column_ks.size(); ++c) {
            const int k = column_ks[c];
            std::string name;
            if (design.bin_low && k == *design.bin_low) {
                name = "rel[<=" + std::to_string(k) + "]";
            } else if (design.bin_high && k == *design.bin_high) {
                name = "rel[>=" + std::to_string(k) + "]";
            } else {
                name = "rel[" + std::to_string(k) + "]";
            }
            design.names.push_back(std::move(name));
            design.event_columns[k] = c;
            design.treatment_cols.push_back(c);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!rel[i]) continue;
            int k = *rel[i];
            if (design.bin_low) k = std::max(k, *design.bin_low);
            if (design.bin_high) k = std::min(k, *design.bin_high);
            if (k < lo || k > hi || k == spec.reference_period) continue;
            const auto it = design.event_columns.find(k);
            design.x(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(it->second)) = 1.0;
        }
    }

    const std::size_t cov_base = design.names.size();
    for (std::size_t c = 0; c < covs.size(); ++c) {
        design.names.push_back(spec.covariates[c]);
        for (std::size_t i = 0; i < n; ++i) {
            design.x(static_cast<Eigen::Index>(i),
                     static_cast<Eigen::Index>(cov_base + c)) =
                (*covs[c])[design.plan.rows[i]];
        }
    }
    return design;
}

} // namespace

std::string to_string(EffectKind kind) {
    return kind == EffectKind::constant ? "constant" : "dynamic";
}

std::string to_string(SeKind kind) {
    return kind == SeKind::classical ? "classical" : "cluster";
}

EffectKind effect_kind_from_string(std::string_view name) {
    if (name == "constant") return EffectKind::constant;
    if (name == "dynamic" || name == "event_study" || name == "event-study") {
        return EffectKind::dynamic;
    }
    throw DataError("unknown effect kind: " + std::string(name));
}

SeKind se_kind_from_string(std::string_view name) {
    if (name == "classical") return SeKind::classical;
    if (name == "cluster" || name == "cluster_by_region") return SeKind::cluster_by_region;
    throw DataError("unknown standard-error kind: " + std::string(name));
}

std::optional<std::size_t> FitResult::column_index(std::string_view name) const {
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (names[c] == name) return c;
    }
    return std::nullopt;
}

std::optional<double> FitResult::coefficient(std::string_view name) const {
    const auto c = column_index(name);
    if (!c) return std::nullopt;
    return estimates[*c];
}

std::optional<double> FitResult::standard_error(std::string_view name, SeKind kind) const {
    const auto c = column_index(name);
    if (!c) return std::nullopt;
    return kind == SeKind::classical ? se_classical[*c] : se_cluster[*c];
}

std::optional<double> FitResult::event_coefficient(int k) const {
    if (k == spec.reference_period) return 0.0;
    int key = k;
    if (bin_low) key = std::max(key, *bin_low);
    if (bin_high) key = std::min(key, *bin_high);
    const auto it = event_columns.find(key);
    if (it == event_columns.end()) return std::nullopt;
    return estimates[it->second];
}

std::optional<double> FitResult::event_standard_error(int k, SeKind kind) const {
    if (k == spec.reference_period) return 0.0;
    int key = k;
    if (bin_low) key = std::max(key, *bin_low);
    if (bin_high) key = std::min(key, *bin_high);
    const auto it = event_columns.find(key);
    if (it == event_columns.end()) return std::nullopt;
    return kind == SeKind::classical ? se_classical[it->second] : se_cluster[it->second];
}

FitResult twfe_fit(const PanelDataset& raw_panel, const RegressionSpec& spec) {
    const PanelDataset panel = prepare_outcome(raw_panel, spec);
    Design design = build_design(panel, spec);
    const std::size_t n = design.plan.rows.size();
    const std::size_t n_cols = static_cast<std::size_t>(design.x.cols());

    Eigen::VectorXd y_dm = design.y;
    demean_column(design.plan, y_dm.data());
    Eigen::MatrixXd x_dm = design.x;
    for (std::size_t c = 0; c < n_cols; ++c) {
        demean_column(design.plan, x_dm.col(static_cast<Eigen::Index>(c)).data());
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> pivoted(x_dm);
    pivoted.setThreshold(kRankThreshold);
    const std::size_t rank = static_cast<std::size_t>(pivoted.rank());

    std::vector<std::size_t> retained_cols;
    retained_cols.reserve(rank);
    {
        const auto& perm = pivoted.colsPermutation().indices();
        for (std::size_t i = 0; i < rank; ++i) {
            retained_cols.push_back(static_cast<std::size_t>(perm[static_cast<Eigen::Index>(i)]));
        }
        std::sort(retained_cols.begin(), retained_cols.end());
    }
    std::vector<char> is_retained(n_cols, 0);
    for (const std::size_t c : retained_cols) is_retained[c] = 1;

    FitResult result;
    result.spec = spec;
    result.outcome = panel.outcome_kind();
    result.names = design.names;
    result.event_columns = design.event_columns;
    result.bin_low = design.bin_low;
    result.bin_high = design.bin_high;
    result.nobs = n;
    result.n_regions_used = design.plan.n_regions;
    result.n_periods_used = design.plan.n_periods;
    for (std::size_t c = 0; c < n_cols; ++c) {
        if (!is_retained[c]) result.dropped_columns.push_back(design.names[c]);
    }

    if (spec.effect == EffectKind::constant && !is_retained[0]) {
        throw NumericError(
            "treatment indicator has no identifying variation after fixed effects");
    }
    if (spec.effect == EffectKind::dynamic) {
        bool any_effect = false;
        for (const std::size_t c : design.treatment_cols) any_effect |= is_retained[c] != 0;
        if (!any_effect) {
            throw NumericError(
                "all relative-time terms are collinear with the fixed effects");
        }
    }

    Eigen::MatrixXd x_ret(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(rank));
    for (std::size_t i = 0; i < rank; ++i) {
        x_ret.col(static_cast<Eigen::Index>(i)) =
            x_dm.col(static_cast<Eigen::Index>(retained_cols[i]));
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x_ret);
    const Eigen::VectorXd beta = qr.solve(y_dm);
    const Eigen::VectorXd resid = y_dm - x_ret * beta;
    const double rss = resid.squaredNorm();

    const long dof = static_cast<long>(n) - static_cast<long>(rank) -
                     (static_cast<long>(design.plan.n_regions) - 1) -
                     (static_cast<long>(design.plan.n_periods) - 1) - 1;
    result.dof = dof;
    result.sigma2 = dof > 0 ? rss / static_cast<double>(dof) : kNaN;

    // (X'X)^-1 from the retained QR factor.
    Eigen::MatrixXd bread;
    if (rank > 0) {
        const Eigen::MatrixXd r_inv =
            qr.matrixQR()
                .topRows(static_cast<Eigen::Index>(rank))
                .triangularView<Eigen::Upper>()
                .solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(rank),
                                                 static_cast<Eigen::Index>(rank)));
        bread = r_inv * r_inv.transpose();
    }

    Eigen::MatrixXd vcov_classical;
    Eigen::MatrixXd vcov_cluster;
    if (rank > 0) {
        vcov_classical = result.sigma2 * bread;

        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rank),
                                                     static_cast<Eigen::Index>(rank));
        Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(
            static_cast<Eigen::Index>(design.plan.n_regions),
            static_cast<Eigen::Index>(rank));
        for (std::size_t i = 0; i < n; ++i) {
            scores.row(static_cast<Eigen::Index>(design.plan.region_of[i])) +=
                resid[static_cast<Eigen::Index>(i)] * x_ret.row(static_cast<Eigen::Index>(i));
        }
        meat = scores.transpose() * scores;
        const double n_groups = static_cast<double>(design.plan.n_regions);
        const double factor =
            dof > 0 && design.plan.n_regions > 1
                ? n_groups / (n_groups - 1.0) * (static_cast<double>(n) - 1.0) /
                      static_cast<double>(dof)
                : kNaN;
        vcov_cluster = factor * (bread * meat * bread);
    }

    result.estimates.assign(n_cols, 0.0);
    result.se_classical.assign(n_cols, kNaN);
    result.se_cluster.assign(n_cols, kNaN);
    for (std::size_t i = 0; i < rank; ++i) {
        const std::size_t c = retained_cols[i];
        result.estimates[c] = beta[static_cast<Eigen::Index>(i)];
        const double v_cl = vcov_classical(static_cast<Eigen::Index>(i),
                                           static_cast<Eigen::Index>(i));
        const double v_cr = vcov_cluster(static_cast<Eigen::Index>(i),
                                         static_cast<Eigen::Index>(i));
        result.se_classical[c] = v_cl >= 0.0 ? std::sqrt(v_cl) : kNaN;
        result.se_cluster[c] = v_cr >= 0.0 ? std::sqrt(v_cr) : kNaN;
    }
    result.retained.reserve(rank);
    for (const std::size_t c : retained_cols) result.retained.push_back(design.names[c]);
    result.vcov_classical.resize(rank * rank);
    result.vcov_cluster.resize(rank * rank);
    for (std::size_t i = 0; i < rank; ++i) {
        for (std::size_t j = 0; j < rank; ++j) {
            result.vcov_classical[i * rank + j] =
                vcov_classical(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            result.vcov_cluster[i * rank + j] =
                vcov_cluster(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
    }

    result.fitted.assign(panel.n_obs(), kNaN);
    result.residuals.assign(panel.n_obs(), kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = design.plan.rows[i];
        const double r = resid[static_cast<Eigen::Index>(i)];
        result.residuals[idx] = r;
        result.fitted[idx] = design.y[static_cast<Eigen::Index>(i)] - r;
    }
    return result;
}

std::vector<double> fe_projection(const PanelDataset& panel) {
    if (!panel.has_outcome()) throw DataError("panel has no outcome column");
    std::vector<char> use_row(panel.n_obs(), 0);
    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            const std::size_t idx = panel.row(g, p);
            if (panel.present(g, p) && panel.outcome(idx)) use_row[idx] = 1;
        }
    }
    const WithinPlan plan = plan_within(panel, use_row);
    if (plan.rows.empty()) throw DataError("no usable observations for the projection");

    std::vector<double> y(plan.rows.size());
    for (std::size_t i = 0; i < plan.rows.size(); ++i) y[i] = *panel.outcome(plan.rows[i]);
    std::vector<double> y_dm = y;
    demean_column(plan, y_dm.data());

    std::vector<double> projection(panel.n_obs(), kNaN);
    for (std::size_t i = 0; i < plan.rows.size(); ++i) {
        projection[plan.rows[i]] = y[i] - y_dm[i];
    }
    return projection;
}

std::vector<double> predict_counterfactual(const FitResult& fit, const PanelDataset& panel) {
    if (fit.fitted.size() != panel.n_obs()) {
        throw DataError("fit result does not match panel shape");
    }
    std::vector<double> prediction(panel.n_obs(), kNaN);
    const bool constant = fit.spec.effect == EffectKind::constant;
    const double tau = constant ? fit.coefficient("treat").value_or(0.0) : 0.0;
    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        for (std::size_t p = 0; p < panel.n_periods(); ++p) {
            const std::size_t idx = panel.row(g, p);
            const double fitted = fit.fitted[idx];
            if (std::isnan(fitted)) continue;
            double contribution = 0.0;
            if (constant) {
                contribution = panel.treated(g, p) ? tau : 0.0;
            } else if (const std::optional<int> k = panel.rel_time(g, p)) {
                contribution = fit.event_coefficient(*k).value_or(0.0);
            }
            prediction[idx] = fitted - contribution;
        }
    }
    return prediction;
}

DidResult did_estimator(const PanelDataset& panel, int base_period) {
    if (!panel.has_outcome()) throw DataError("panel has no outcome column");

    std::vector<std::size_t> treated_regions;
    std::vector<std::size_t> control_regions;
    std::optional<int> adoption;
    for (std::size_t g = 0; g < panel.n_regions(); ++g) {
        const std::optional<int> tt = panel.treat_time(g);
        if (!tt) {
            control_regions.push_back(g);
            continue;
        }
        if (adoption && *adoption != *tt) {
            throw DataError("treated regions adopt at different dates; "
                            "this estimator needs a common adoption date");
        }
        adoption = *tt;
        treated_regions.push_back(g);
    }
    if (treated_regions.empty()) throw DataError("no treated region in the panel");
    if (control_regions.empty()) throw DataError("no never-treated region in the panel");

    const std::optional<std::size_t> base_idx = panel.period_index(base_period);
    if (!base_idx) throw DataError("base period is not in the panel");
    if (base_period > *adoption) {
        throw DataError("base period must not come after the adoption date");
    }

    DidResult result;
    result.base_period = base_period;
    const auto change_from_base = [&](std::size_t g, std::size_t p) -> std::optional<double> {
        const std::optional<double> y_t = panel.outcome(panel.row(g, p));
        const std::optional<double> y_b = panel.outcome(panel.row(g, *base_idx));
        if (!y_t || !y_b) return std::nullopt;
        return *y_t - *y_b;
    };

    for (std::size_t p = 0; p < panel.n_periods(); ++p) {
        if (panel.period(p) < base_period) continue;
        double sum_treated = 0.0, sum_control = 0.0;
        std::size_t n_treated = 0, n_control = 0;
        for (const std::size_t g : treated_regions) {
            if (const auto d = change_from_base(g, p)) {
                sum_treated += *d;
                ++n_treated;
            }
        }
        for (const std::size_t g : control_regions) {
            if (const auto d = change_from_base(g, p)) {
                sum_control += *d;
                ++n_control;
            }
        }
        result.periods.push_back(panel.period(p));
        result.n_treated.push_back(n_treated);
        result.n_control.push_back(n_control);
        result.estimates.push_back(
            n_treated > 0 && n_control > 0
                ? sum_treated / static_cast<double>(n_treated) -
                      sum_control / static_cast<double>(n_control)
                : kNaN);
    }
    return result;
}

} // namespace epifit
