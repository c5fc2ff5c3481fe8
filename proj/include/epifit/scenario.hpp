#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "epifit/epidemic.hpp"

// Experiment designs for the Monte Carlo study and the fixed two- and
// three-region demonstration scenarios.

namespace epifit {

struct ExperimentDesign {
    int n_regions = 100;
    int horizon = 150;
    double beta0 = 0.12;
    double gamma = 0.1;
    double mu = 0.01;
    std::array<double, 2> delta_range{0.0, 0.5};
    std::array<double, 2> population_range{1e5, 1e6};
    std::array<double, 2> seed_fraction_range{0.001, 0.01}; // I0 as share of N
    std::array<int, 2> treat_time_range{1, 150};
    double never_treated_fraction = 0.0;
    double tau = std::log(0.9);
    SimMode mode = SimMode::deterministic;
    std::uint64_t master_seed = 42;

    void validate() const; // throws DataError
};

struct RegionRoster {
    std::vector<std::string> ids;            // unique, parallel to params
    std::vector<EpidemicParams> params;

    std::size_t size() const { return ids.size(); }
    void validate() const;                   // unique ids, valid params
};

// Draws region heterogeneity with a generator seeded by design.master_seed.
// Draw order per region: delta, population, seed fraction, treat time; the
// never-treated subset (round(fraction * n) regions) is then sampled without
// replacement from the same stream. Rosters depend only on the design, never
// on the simulation mode.
RegionRoster draw_roster(const ExperimentDesign& design);

struct FigureScenario {
    std::string which;
    RegionRoster roster;
    int horizon = 150;
};

// Fixed demonstration configurations:
//   fig1: one epidemic under policy + exogenous decay of beta, the same
//         epidemic without the policy, and a clean no-decay baseline.
//   fig2: two untreated-alike regions whose infection rates differ by 20%,
//         the lower-rate region nominally "treated" at period 20 with a null
//         policy (tau = 0).
//   fig3: the same 20% gap with no treatment anywhere.
//   fig4: two identical regions, region 1 treated at period 20 with a policy
//         multiplier exp(tau) = 0.9.
FigureScenario figure_scenario(const std::string& which);

} // namespace epifit
