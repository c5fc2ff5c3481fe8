#include "epifit/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "epifit/errors.hpp"
#include "epifit/kernels.hpp"

namespace epifit {

namespace {

constexpr double kNegativeTol = 1e-9; // relative to population

void check_finite_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
        throw DataError(std::string("epidemic parameter ") + name +
                        " must be finite and positive");
    }
}

// Clamps tiny negative undershoots; anything worse is a real domain breach.
void enforce_nonnegative(double& v, double population, const char* name, int t) {
    if (v >= 0.0) return;
    if (v >= -kNegativeTol * population) {
        v = 0.0;
        return;
    }
    throw NumericError(std::string("compartment ") + name + " negative at period " +
                       std::to_string(t) + " (" + std::to_string(v) + ")");
}

struct Soa {
    std::vector<double> beta, gamma, recov, death, inv_pop;
    std::vector<double> s, i, r, d, flow;

    explicit Soa(std::size_t n)
        : beta(n), gamma(n), recov(n), death(n), inv_pop(n), s(n), i(n), r(n), d(n),
          flow(n) {}
};

} // namespace

void EpidemicParams::validate() const {
    check_finite_positive(beta0, "beta0");
    check_finite_positive(gamma, "gamma");
    check_finite_positive(population, "population");
    if (!std::isfinite(delta) || !std::isfinite(tau) || !std::isfinite(beta_drift)) {
        throw DataError("epidemic parameters delta/tau/beta_drift must be finite");
    }
    if (gamma > 1.0) throw DataError("gamma must lie in (0, 1]");
    if (mu < 0.0 || mu > 1.0 || !std::isfinite(mu)) {
        throw DataError("mu must lie in [0, 1]");
    }
    if (!std::isfinite(initial_infected) || initial_infected <= 0.0 ||
        initial_infected > population) {
        throw DataError("initial_infected must lie in (0, population]");
    }
    if (beta_drift < 0.0) throw DataError("beta_drift must be non-negative");
    if (treat_time && *treat_time < 0) throw DataError("treat_time must be >= 0");
}

std::vector<double> Trajectory::cumulative_cases() const {
    std::vector<double> cum(states.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        acc += states[t].new_cases;
        cum[t] = acc;
    }
    return cum;
}

bool treated_at(const EpidemicParams& p, int t) {
    return p.treat_time.has_value() && t >= *p.treat_time;
}

double infection_rate(const EpidemicParams& p, int t, bool treated) {
    const double exponent = p.delta + (treated ? p.tau : 0.0) - p.beta_drift * t;
    return p.beta0 * std::exp(exponent);
}

double basic_reproduction_number(const EpidemicParams& p, int t, bool treated) {
    return infection_rate(p, t, treated) / p.gamma;
}

CompartmentState step(const CompartmentState& state, const EpidemicParams& p, int t) {
    Soa lane(1);
    lane.beta[0] = infection_rate(p, t, treated_at(p, t));
    lane.gamma[0] = p.gamma;
    lane.recov[0] = (1.0 - p.mu) * p.gamma;
    lane.death[0] = p.mu * p.gamma;
    lane.inv_pop[0] = 1.0 / p.population;
    lane.s[0] = state.s;
    lane.i[0] = state.i;
    lane.r[0] = state.r;
    lane.d[0] = state.d;

    const kern::Kernels& k = kern::active_kernels();
    k.sird_step(lane.beta.data(), lane.gamma.data(), lane.recov.data(),
                lane.death.data(), lane.inv_pop.data(), lane.s.data(), lane.i.data(),
                lane.r.data(), lane.d.data(), lane.flow.data(), 1);

    CompartmentState next{lane.s[0], lane.i[0], lane.r[0], lane.d[0], lane.flow[0]};
    enforce_nonnegative(next.s, p.population, "S", t + 1);
    enforce_nonnegative(next.i, p.population, "I", t + 1);
    enforce_nonnegative(next.r, p.population, "R", t + 1);
    enforce_nonnegative(next.d, p.population, "D", t + 1);
    return next;
}

namespace {

Trajectory simulate_poisson(const EpidemicParams& p, int horizon, std::uint64_t seed) {
    Trajectory traj{p, horizon, std::vector<CompartmentState>(
                                    static_cast<std::size_t>(horizon) + 1)};
    std::mt19937_64 rng(seed);
    double s = p.population - p.initial_infected;
    double i = p.initial_infected;
    double r = 0.0, d = 0.0;
    const double recov = (1.0 - p.mu) * p.gamma;
    const double death = p.mu * p.gamma;
    const double inv_pop = 1.0 / p.population;
    for (int t = 0; t <= horizon; ++t) {
        const double beta = infection_rate(p, t, treated_at(p, t));
        const double mean = ((beta * i) * s) * inv_pop;
        double flow = 0.0;
        if (mean > 0.0) {
            std::poisson_distribution<long long> dist(mean);
            // Truncation at S keeps the susceptible stock non-negative and
            // conservation exact even when the draw overshoots.
            flow = std::min(static_cast<double>(dist(rng)), s);
        }
        traj.states[static_cast<std::size_t>(t)] = {s, i, r, d, flow};
        if (t < horizon) {
            const double shed = p.gamma * i;
            const double i_next = (i + flow) - shed;
            const double s_next = s - flow;
            const double r_next = r + recov * i;
            const double d_next = d + death * i;
            s = s_next;
            i = i_next;
            r = r_next;
            d = d_next;
            enforce_nonnegative(s, p.population, "S", t + 1);
            enforce_nonnegative(i, p.population, "I", t + 1);
            enforce_nonnegative(r, p.population, "R", t + 1);
            enforce_nonnegative(d, p.population, "D", t + 1);
        }
    }
    return traj;
}

std::vector<Trajectory> simulate_batch_deterministic(
    std::span<const EpidemicParams> params, int horizon) {
    const std::size_t n = params.size();
    Soa lanes(n);
    std::vector<Trajectory> out;
    out.reserve(n);
    for (std::size_t l = 0; l < n; ++l) {
        const EpidemicParams& p = params[l];
        lanes.gamma[l] = p.gamma;
        lanes.recov[l] = (1.0 - p.mu) * p.gamma;
        lanes.death[l] = p.mu * p.gamma;
        lanes.inv_pop[l] = 1.0 / p.population;
        lanes.s[l] = p.population - p.initial_infected;
        lanes.i[l] = p.initial_infected;
        lanes.r[l] = 0.0;
        lanes.d[l] = 0.0;
        out.push_back(Trajectory{p, horizon,
                                 std::vector<CompartmentState>(
                                     static_cast<std::size_t>(horizon) + 1)});
    }

    const kern::Kernels& k = kern::active_kernels();
    std::vector<double> s_prev(n), i_prev(n), r_prev(n), d_prev(n);
    for (int t = 0; t <= horizon; ++t) {
        for (std::size_t l = 0; l < n; ++l) {
            lanes.beta[l] = infection_rate(params[l], t, treated_at(params[l], t));
        }
        s_prev = lanes.s;
        i_prev = lanes.i;
        r_prev = lanes.r;
        d_prev = lanes.d;
        k.sird_step(lanes.beta.data(), lanes.gamma.data(), lanes.recov.data(),
                    lanes.death.data(), lanes.inv_pop.data(), lanes.s.data(),
                    lanes.i.data(), lanes.r.data(), lanes.d.data(), lanes.flow.data(),
                    n);
        for (std::size_t l = 0; l < n; ++l) {
            out[l].states[static_cast<std::size_t>(t)] = {s_prev[l], i_prev[l],
                                                          r_prev[l], d_prev[l],
                                                          lanes.flow[l]};
        }
        if (t < horizon) {
            for (std::size_t l = 0; l < n; ++l) {
                enforce_nonnegative(lanes.s[l], params[l].population, "S", t + 1);
                enforce_nonnegative(lanes.i[l], params[l].population, "I", t + 1);
                enforce_nonnegative(lanes.r[l], params[l].population, "R", t + 1);
                enforce_nonnegative(lanes.d[l], params[l].population, "D", t + 1);
            }
        }
    }
    return out;
}

} // namespace

Trajectory simulate(const EpidemicParams& p, int horizon, SimMode mode,
                    std::uint64_t seed) {
    p.validate();
    if (horizon < 0) throw DataError("horizon must be >= 0");
    if (mode == SimMode::poisson) return simulate_poisson(p, horizon, seed);
    return std::move(simulate_batch_deterministic({&p, 1}, horizon).front());
}

std::vector<Trajectory> simulate_batch(std::span<const EpidemicParams> params,
                                       int horizon, SimMode mode,
                                       std::uint64_t master_seed) {
    for (const EpidemicParams& p : params) p.validate();
    if (horizon < 0) throw DataError("horizon must be >= 0");
    if (mode == SimMode::deterministic) {
        return simulate_batch_deterministic(params, horizon);
    }
    std::vector<Trajectory> out;
    out.reserve(params.size());
    for (std::size_t idx = 0; idx < params.size(); ++idx) {
        out.push_back(
            simulate_poisson(params[idx], horizon, derive_seed(master_seed, idx)));
    }
    return out;
}

PotentialOutcomes potential_outcomes(const EpidemicParams& p, int horizon,
                                     SimMode mode, std::uint64_t seed) {
    EpidemicParams untreated = p;
    untreated.treat_time.reset();
    return PotentialOutcomes{simulate(p, horizon, mode, seed),
                             simulate(untreated, horizon, mode, seed)};
}

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace epifit
