#include "epifit/scenario.hpp"

#include <cmath>
#include <random>
#include <set>

#include "epifit/errors.hpp"

namespace epifit {

void ExperimentDesign::validate() const {
    if (n_regions < 1) throw DataError("design needs at least one region");
    if (horizon < 1) throw DataError("design horizon must be >= 1");
    if (delta_range[0] > delta_range[1] || population_range[0] > population_range[1] ||
        seed_fraction_range[0] > seed_fraction_range[1] ||
        treat_time_range[0] > treat_time_range[1]) {
        throw DataError("design ranges must be ordered low <= high");
    }
    if (population_range[0] <= 0.0 || seed_fraction_range[0] <= 0.0 ||
        seed_fraction_range[1] > 1.0) {
        throw DataError("population and seed-fraction ranges must be positive (fraction <= 1)");
    }
    if (treat_time_range[0] < 0 || treat_time_range[1] > horizon) {
        throw DataError("treat-time range must lie within [0, horizon]");
    }
    if (never_treated_fraction < 0.0 || never_treated_fraction > 1.0) {
        throw DataError("never_treated_fraction must lie in [0, 1]");
    }
    if (!std::isfinite(tau) || !std::isfinite(beta0) || beta0 <= 0.0) {
        throw DataError("beta0 must be positive and tau finite");
    }
}

void RegionRoster::validate() const {
    if (ids.size() != params.size()) throw DataError("roster ids/params size mismatch");
    if (ids.empty()) throw DataError("roster is empty");
    std::set<std::string> seen;
    for (const std::string& id : ids) {
        if (id.empty()) throw DataError("roster contains an empty region id");
        if (!seen.insert(id).second) throw DataError("duplicate region id: " + id);
    }
    for (const EpidemicParams& p : params) p.validate();
}

RegionRoster draw_roster(const ExperimentDesign& design) {
    design.validate();
    std::mt19937_64 rng(design.master_seed);
    std::uniform_real_distribution<double> delta_dist(design.delta_range[0],
                                                      design.delta_range[1]);
    std::uniform_real_distribution<double> pop_dist(design.population_range[0],
                                                    design.population_range[1]);
    std::uniform_real_distribution<double> frac_dist(design.seed_fraction_range[0],
                                                     design.seed_fraction_range[1]);
    std::uniform_int_distribution<int> treat_dist(design.treat_time_range[0],
                                                  design.treat_time_range[1]);

    RegionRoster roster;
    const int n = design.n_regions;
    roster.ids.reserve(static_cast<std::size_t>(n));
    roster.params.reserve(static_cast<std::size_t>(n));
    int width = 1;
    for (int v = n; v >= 10; v /= 10) ++width;
    for (int idx = 0; idx < n; ++idx) {
        EpidemicParams p;
        p.beta0 = design.beta0;
        p.gamma = design.gamma;
        p.mu = design.mu;
        p.tau = design.tau;
        p.delta = delta_dist(rng);
        p.population = pop_dist(rng);
        p.initial_infected = frac_dist(rng) * p.population;
        p.treat_time = treat_dist(rng);
        std::string id = std::to_string(idx + 1);
        roster.ids.push_back("r" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id);
        roster.params.push_back(p);
    }

    const long never = std::lround(design.never_treated_fraction * n);
    if (never > 0) {
        // Partial Fisher-Yates over region indices keeps the subset choice on
        // the same stream as the parameter draws.
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int idx = 0; idx < n; ++idx) order[static_cast<std::size_t>(idx)] = idx;
        for (long j = 0; j < never; ++j) {
            std::uniform_int_distribution<long> pick(j, n - 1);
            std::swap(order[static_cast<std::size_t>(j)],
                      order[static_cast<std::size_t>(pick(rng))]);
            roster.params[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]
                .treat_time.reset();
        }
    }
    return roster;
}

namespace {

EpidemicParams demo_region(double beta0, double delta, double tau,
                           std::optional<int> treat_time, double drift = 0.0) {
    EpidemicParams p;
    p.beta0 = beta0;
    p.delta = delta;
    p.tau = tau;
    p.gamma = 0.1;
    p.mu = 0.01;
    p.population = 1e6;
    p.initial_infected = 100.0;
    p.treat_time = treat_time;
    p.beta_drift = drift;
    return p;
}

} // namespace

FigureScenario figure_scenario(const std::string& which) {
    FigureScenario sc;
    sc.which = which;
    sc.horizon = 150;
    if (which == "fig1") {
        // Policy at 20 plus an exogenous decay of the infection rate; the
        // decay alone; and a clean constant-rate baseline.
        const double drift = 0.01;
        sc.roster.ids = {"policy_confounded", "no_policy_confounded", "no_policy_clean"};
        sc.roster.params = {demo_region(0.3, 0.0, std::log(0.9), 20, drift),
                            demo_region(0.3, 0.0, 0.0, std::nullopt, drift),
                            demo_region(0.3, 0.0, 0.0, std::nullopt)};
    } else if (which == "fig2") {
        sc.roster.ids = {"region1", "region2"};
        sc.roster.params = {demo_region(0.3, 0.0, 0.0, 20),
                            demo_region(0.3, std::log(1.2), 0.0, std::nullopt)};
    } else if (which == "fig3") {
        sc.roster.ids = {"region1", "region2"};
        sc.roster.params = {demo_region(0.3, 0.0, 0.0, std::nullopt),
                            demo_region(0.3, std::log(1.2), 0.0, std::nullopt)};
    } else if (which == "fig4") {
        sc.roster.ids = {"region1", "region2"};
        sc.roster.params = {demo_region(0.3, 0.0, std::log(0.9), 20),
                            demo_region(0.3, 0.0, 0.0, std::nullopt)};
    } else {
        throw DataError("unknown figure scenario: " + which);
    }
    sc.roster.validate();
    return sc;
}

} // namespace epifit
