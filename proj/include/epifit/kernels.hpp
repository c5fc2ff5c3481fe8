#pragma once

#include <cstddef>
#include <cstdint>

// Low-level numeric kernels behind the simulator and the panel estimators.
// Each kernel exists as a scalar reference implementation and, on x86-64,
// an AVX2 variant. The active set is chosen once at runtime; see dispatch
// notes on active_kernels().
//
// Contract: sird_step, demean_apply and vector_add perform per-element
// arithmetic in a fixed operation order with no FMA contraction, so every
// implementation produces bit-identical results. sum and dot block their
// accumulators, so implementations may differ by reassociation rounding;
// callers must not depend on their last bits.

namespace epifit::kern {

// Advances one SIRD transition for n independent regions held in
// structure-of-arrays layout. Writes the per-region infection flow
// (beta * i * s * inv_pop) to new_cases and updates s/i/r/d in place.
// recov_coef = (1 - mu) * gamma, death_coef = mu * gamma, precomputed per
// region so all implementations share one rounding path.
using SirdStepFn = void (*)(const double* beta, const double* gamma,
                            const double* recov_coef, const double* death_coef,
                            const double* inv_pop, double* s, double* i,
                            double* r, double* d, double* new_cases,
                            std::size_t n);

// Two-way demeaning apply step on a complete region-by-period grid stored
// region-major: y[g*n_periods + p] -= (region_mean[g] - grand_mean) + period_mean[p].
using DemeanApplyFn = void (*)(double* y, std::size_t n_regions,
                               std::size_t n_periods, const double* region_means,
                               const double* period_means, double grand_mean);

// acc[k] += x[k]
using VectorAddFn = void (*)(double* acc, const double* x, std::size_t n);

using SumFn = double (*)(const double* x, std::size_t n);
using DotFn = double (*)(const double* a, const double* b, std::size_t n);

struct Kernels {
    SirdStepFn sird_step;
    DemeanApplyFn demean_apply;
    VectorAddFn vector_add;
    SumFn sum;
    DotFn dot;
    const char* name;
};

const Kernels& scalar_kernels();

// Null when the AVX2 translation unit is not built for this target.
const Kernels* avx2_kernels();

bool avx2_supported();

// Best implementation the CPU supports. EPIFIT_ISA=scalar|avx2 overrides;
// requesting avx2 on a CPU without it falls back to scalar.
const Kernels& active_kernels();

} // namespace epifit::kern
