#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

// Discrete-time SIRD epidemic with a policy-dependent infection rate.
//
// Dynamics per period, for a region with population N:
//   flow_t = beta_t * I_t * S_t / N          (confirmed new cases at t)
//   S_{t+1} = S_t - flow_t
//   I_{t+1} = I_t + flow_t - gamma * I_t
//   R_{t+1} = R_t + (1 - mu) * gamma * I_t
//   D_{t+1} = D_t + mu * gamma * I_t
// with beta_t = beta0 * exp(delta + tau * policy_t - beta_drift * t) and
// policy_t = 1 from treat_time onward. new_cases at period t is the flow
// generated from the period-t state, so a policy starting at t* scales the
// period-t* flow by exp(tau) while S and I at t* are still predetermined.

namespace epifit {

enum class SimMode { deterministic, poisson };

struct EpidemicParams {
    double beta0 = 0.12;              // baseline infection rate
    double delta = 0.0;               // region-specific log shifter
    double tau = 0.0;                 // policy effect on log infection rate
    double gamma = 0.1;               // recovery hazard
    double mu = 0.01;                 // case fatality share of resolved cases
    double population = 1e5;
    double initial_infected = 100.0;
    std::optional<int> treat_time;    // first policy period; empty = never
    double beta_drift = 0.0;          // exogenous decay rate of beta over time

    void validate() const;            // throws DataError on nonsense
};

struct CompartmentState {
    double s = 0, i = 0, r = 0, d = 0;
    double new_cases = 0;

    double total() const { return ((s + i) + r) + d; }
};

struct Trajectory {
    EpidemicParams params;
    int horizon = 0;                              // periods 0..horizon
    std::vector<CompartmentState> states;         // size horizon + 1

    const CompartmentState& at(int t) const { return states.at(static_cast<std::size_t>(t)); }
    // Running sum of new_cases through each period.
    std::vector<double> cumulative_cases() const;
};

struct PotentialOutcomes {
    Trajectory treated_arm;     // policy active from treat_time
    Trajectory untreated_arm;   // same region, policy never adopted
};

bool treated_at(const EpidemicParams& p, int t);

// beta0 * exp(delta + tau * treated - beta_drift * t)
double infection_rate(const EpidemicParams& p, int t, bool treated);

// beta / gamma at the given period and policy state.
double basic_reproduction_number(const EpidemicParams& p, int t, bool treated);

// One deterministic transition. The returned state holds the advanced
// compartments together with the infection flow consumed by this step
// (computed from the input state). Throws NumericError if an update drives
// a compartment below -1e-9 * population; smaller undershoots clamp to zero.
CompartmentState step(const CompartmentState& state, const EpidemicParams& p, int t);

// Simulates periods 0..horizon from (N - I0, I0, 0, 0). In poisson mode the
// per-period infection flow is drawn Poisson with the deterministic mean,
// truncated at S; recovery and death flows stay deterministic. The seed is
// ignored in deterministic mode.
Trajectory simulate(const EpidemicParams& p, int horizon,
                    SimMode mode = SimMode::deterministic, std::uint64_t seed = 0);

// Batched simulation, one lane per region. Deterministic trajectories are
// advanced through the SIMD kernel set in structure-of-arrays layout and are
// bit-identical to region-by-region simulate() calls. Poisson regions draw
// from independent streams derived from master_seed and the region index.
std::vector<Trajectory> simulate_batch(std::span<const EpidemicParams> params,
                                       int horizon,
                                       SimMode mode = SimMode::deterministic,
                                       std::uint64_t master_seed = 0);

// Both arms of the same region under identical randomness: the arms share
// the seed, so their draws coincide through t* - 1 and the trajectories
// diverge only through the policy flag from t* onward.
PotentialOutcomes potential_outcomes(const EpidemicParams& p, int horizon,
                                     SimMode mode = SimMode::deterministic,
                                     std::uint64_t seed = 0);

// Stable per-region stream seed (splitmix64 of master_seed and index).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index);

} // namespace epifit
