#include "epifit/kernels.hpp"

// Reference implementations. Expression shapes here are load-bearing: the
// SIMD variants mirror them operation for operation so that lanes match
// bitwise (sum/dot excepted, see header).

namespace epifit::kern {

namespace {

void sird_step_scalar(const double* beta, const double* gamma,
                      const double* recov_coef, const double* death_coef,
                      const double* inv_pop, double* s, double* i, double* r,
                      double* d, double* new_cases, std::size_t n) {
    for (std::size_t l = 0; l < n; ++l) {
        const double flow = ((beta[l] * i[l]) * s[l]) * inv_pop[l];
        const double shed = gamma[l] * i[l];
        const double i_next = (i[l] + flow) - shed;
        const double s_next = s[l] - flow;
        const double r_next = r[l] + recov_coef[l] * i[l];
        const double d_next = d[l] + death_coef[l] * i[l];
        new_cases[l] = flow;
        s[l] = s_next;
        i[l] = i_next;
        r[l] = r_next;
        d[l] = d_next;
    }
}

void demean_apply_scalar(double* y, std::size_t n_regions, std::size_t n_periods,
                         const double* region_means, const double* period_means,
                         double grand_mean) {
    for (std::size_t g = 0; g < n_regions; ++g) {
        const double adj = region_means[g] - grand_mean;
        double* row = y + g * n_periods;
        for (std::size_t p = 0; p < n_periods; ++p) {
            row[p] = (row[p] - adj) - period_means[p];
        }
    }
}

void vector_add_scalar(double* acc, const double* x, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) acc[k] += x[k];
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += x[k];
    return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

} // namespace

const Kernels& scalar_kernels() {
    static const Kernels k{sird_step_scalar, demean_apply_scalar,
                           vector_add_scalar, sum_scalar, dot_scalar, "scalar"};
    return k;
}

} // namespace epifit::kern
