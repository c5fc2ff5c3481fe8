#include "epifit/kernels.hpp"

// AVX2 variants, 4 doubles per vector. Compiled with -mavx2 only (no -mfma),
// so no contraction: each lane performs the same mul/add/sub sequence as the
// scalar reference and matches it bitwise. Tails reuse the scalar expression
// shapes verbatim.

#ifdef __AVX2__

#include <immintrin.h>

namespace epifit::kern {

namespace {

void sird_step_avx2(const double* beta, const double* gamma,
                    const double* recov_coef, const double* death_coef,
                    const double* inv_pop, double* s, double* i, double* r,
                    double* d, double* new_cases, std::size_t n) {
    std::size_t l = 0;
    for (; l + 4 <= n; l += 4) {
        const __m256d vb = _mm256_loadu_pd(beta + l);
        const __m256d vg = _mm256_loadu_pd(gamma + l);
        const __m256d vrc = _mm256_loadu_pd(recov_coef + l);
        const __m256d vdc = _mm256_loadu_pd(death_coef + l);
        const __m256d vinv = _mm256_loadu_pd(inv_pop + l);
        const __m256d vs = _mm256_loadu_pd(s + l);
        const __m256d vi = _mm256_loadu_pd(i + l);
        const __m256d vr = _mm256_loadu_pd(r + l);
        const __m256d vd = _mm256_loadu_pd(d + l);

        const __m256d flow =
            _mm256_mul_pd(_mm256_mul_pd(_mm256_mul_pd(vb, vi), vs), vinv);
        const __m256d shed = _mm256_mul_pd(vg, vi);
        const __m256d i_next = _mm256_sub_pd(_mm256_add_pd(vi, flow), shed);
        const __m256d s_next = _mm256_sub_pd(vs, flow);
        const __m256d r_next = _mm256_add_pd(vr, _mm256_mul_pd(vrc, vi));
        const __m256d d_next = _mm256_add_pd(vd, _mm256_mul_pd(vdc, vi));

        _mm256_storeu_pd(new_cases + l, flow);
        _mm256_storeu_pd(s + l, s_next);
        _mm256_storeu_pd(i + l, i_next);
        _mm256_storeu_pd(r + l, r_next);
        _mm256_storeu_pd(d + l, d_next);
    }
    for (; l < n; ++l) {
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

void demean_apply_avx2(double* y, std::size_t n_regions, std::size_t n_periods,
                       const double* region_means, const double* period_means,
                       double grand_mean) {
    for (std::size_t g = 0; g < n_regions; ++g) {
        const double adj = region_means[g] - grand_mean;
        const __m256d vadj = _mm256_set1_pd(adj);
        double* row = y + g * n_periods;
        std::size_t p = 0;
        for (; p + 4 <= n_periods; p += 4) {
            const __m256d vy = _mm256_loadu_pd(row + p);
            const __m256d vpm = _mm256_loadu_pd(period_means + p);
            _mm256_storeu_pd(row + p, _mm256_sub_pd(_mm256_sub_pd(vy, vadj), vpm));
        }
        for (; p < n_periods; ++p) {
            row[p] = (row[p] - adj) - period_means[p];
        }
    }
}

void vector_add_avx2(double* acc, const double* x, std::size_t n) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(
            acc + k, _mm256_add_pd(_mm256_loadu_pd(acc + k), _mm256_loadu_pd(x + k)));
    }
    for (; k < n; ++k) acc[k] += x[k];
}

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d pair = _mm_add_pd(lo, hi);
    const __m128d swapped = _mm_unpackhi_pd(pair, pair);
    return _mm_cvtsd_f64(_mm_add_sd(pair, swapped));
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + k));
    double total = hsum(acc);
    for (; k < n; ++k) total += x[k];
    return total;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        acc = _mm256_add_pd(acc,
                            _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
    }
    double total = hsum(acc);
    for (; k < n; ++k) total += a[k] * b[k];
    return total;
}

} // namespace

const Kernels* avx2_kernels() {
    static const Kernels k{sird_step_avx2, demean_apply_avx2, vector_add_avx2,
                           sum_avx2, dot_avx2, "avx2"};
    return &k;
}

} // namespace epifit::kern

#else

namespace epifit::kern {
const Kernels* avx2_kernels() { return nullptr; }
} // namespace epifit::kern

#endif
