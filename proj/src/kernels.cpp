#include "fdmgdl/kernels.hpp"

#include <algorithm>
#include <cmath>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define FDMGDL_SIMD_AVX2 1
#endif
#if defined(FDMGDL_SIMD_AVX2) && defined(__AVX512F__)
#define FDMGDL_SIMD_AVX512 1
#endif

#ifdef FDMGDL_HAVE_OPENMP
#include <omp.h>
#endif

// Every accumulation step is a fused multiply-add, in vector and scalar code
// alike, so the value of C(i,k) does not depend on which path computed it.

namespace fdmgdl::kernels {

namespace {

constexpr int kInnerBlock = 512;

#ifdef FDMGDL_SIMD_AVX512
constexpr int kColBlock = 8;
#else
constexpr int kColBlock = 6;
#endif

// Offset of N(k, j); NT reads N as the transpose of its storage.
template <bool NT>
inline long nidx(int k, int j, int ldn) {
  return NT ? static_cast<long>(j) * ldn + k : static_cast<long>(k) * ldn + j;
}

template <bool NT>
void scalar_rows(int i0, int i1, int cb, int s, const double* M, int ldm, const double* N,
                 int ldn, const double* bias, bool resume, double* C, int ldc) {
  for (int k = 0; k < cb; ++k) {
    double* ccol = C + static_cast<long>(k) * ldc;
    for (int i = i0; i < i1; ++i) {
      double acc = resume ? ccol[i] : (bias ? bias[i] : 0.0);
      for (int j = 0; j < s; ++j) acc = std::fma(M[static_cast<long>(j) * ldm + i], N[nidx<NT>(k, j, ldn)], acc);
      ccol[i] = acc;
    }
  }
}

#ifdef FDMGDL_SIMD_AVX2
template <int CB, bool NT>
void tile8(int i0, int s, const double* M, int ldm, const double* N, int ldn, const double* bias,
           bool resume, double* C, int ldc) {
  __m256d lo[CB], hi[CB];
  const __m256d blo = bias ? _mm256_loadu_pd(bias + i0) : _mm256_setzero_pd();
  const __m256d bhi = bias ? _mm256_loadu_pd(bias + i0 + 4) : _mm256_setzero_pd();
  for (int k = 0; k < CB; ++k) {
    lo[k] = resume ? _mm256_loadu_pd(C + static_cast<long>(k) * ldc + i0) : blo;
    hi[k] = resume ? _mm256_loadu_pd(C + static_cast<long>(k) * ldc + i0 + 4) : bhi;
  }
  const double* mp = M + i0;
  for (int j = 0; j < s; ++j) {
    const __m256d a0 = _mm256_loadu_pd(mp);
    const __m256d a1 = _mm256_loadu_pd(mp + 4);
    mp += ldm;
    for (int k = 0; k < CB; ++k) {
      const __m256d nv = _mm256_broadcast_sd(N + nidx<NT>(k, j, ldn));
      lo[k] = _mm256_fmadd_pd(a0, nv, lo[k]);
      hi[k] = _mm256_fmadd_pd(a1, nv, hi[k]);
    }
  }
  for (int k = 0; k < CB; ++k) {
    _mm256_storeu_pd(C + static_cast<long>(k) * ldc + i0, lo[k]);
    _mm256_storeu_pd(C + static_cast<long>(k) * ldc + i0 + 4, hi[k]);
  }
}

#ifdef FDMGDL_SIMD_AVX512
template <int CB, bool NT>
void tile16(int i0, int s, const double* M, int ldm, const double* N, int ldn, const double* bias,
            bool resume, double* C, int ldc) {
  __m512d lo[CB], hi[CB];
  const __m512d blo = bias ? _mm512_loadu_pd(bias + i0) : _mm512_setzero_pd();
  const __m512d bhi = bias ? _mm512_loadu_pd(bias + i0 + 8) : _mm512_setzero_pd();
  for (int k = 0; k < CB; ++k) {
    lo[k] = resume ? _mm512_loadu_pd(C + static_cast<long>(k) * ldc + i0) : blo;
    hi[k] = resume ? _mm512_loadu_pd(C + static_cast<long>(k) * ldc + i0 + 8) : bhi;
  }
  const double* mp = M + i0;
  for (int j = 0; j < s; ++j) {
    const __m512d a0 = _mm512_loadu_pd(mp);
    const __m512d a1 = _mm512_loadu_pd(mp + 8);
    mp += ldm;
    for (int k = 0; k < CB; ++k) {
      const __m512d nv = _mm512_set1_pd(N[nidx<NT>(k, j, ldn)]);
      lo[k] = _mm512_fmadd_pd(a0, nv, lo[k]);
      hi[k] = _mm512_fmadd_pd(a1, nv, hi[k]);
    }
  }
  for (int k = 0; k < CB; ++k) {
    _mm512_storeu_pd(C + static_cast<long>(k) * ldc + i0, lo[k]);
    _mm512_storeu_pd(C + static_cast<long>(k) * ldc + i0 + 8, hi[k]);
  }
}
#endif

template <int CB, bool NT>
void tile4(int i0, int s, const double* M, int ldm, const double* N, int ldn, const double* bias,
           bool resume, double* C, int ldc) {
  __m256d acc[CB];
  const __m256d b0 = bias ? _mm256_loadu_pd(bias + i0) : _mm256_setzero_pd();
  for (int k = 0; k < CB; ++k) acc[k] = resume ? _mm256_loadu_pd(C + static_cast<long>(k) * ldc + i0) : b0;
  const double* mp = M + i0;
  for (int j = 0; j < s; ++j) {
    const __m256d a0 = _mm256_loadu_pd(mp);
    mp += ldm;
    for (int k = 0; k < CB; ++k)
      acc[k] = _mm256_fmadd_pd(a0, _mm256_broadcast_sd(N + nidx<NT>(k, j, ldn)), acc[k]);
  }
  for (int k = 0; k < CB; ++k) _mm256_storeu_pd(C + static_cast<long>(k) * ldc + i0, acc[k]);
}

template <int CB, bool NT>
void column_block_fixed(int r, int s, const double* M, int ldm, const double* N, int ldn,
                        const double* bias, bool resume, double* C, int ldc) {
  int i = 0;
#ifdef FDMGDL_SIMD_AVX512
  for (; i + 16 <= r; i += 16) tile16<CB, NT>(i, s, M, ldm, N, ldn, bias, resume, C, ldc);
#endif
  for (; i + 8 <= r; i += 8) tile8<CB, NT>(i, s, M, ldm, N, ldn, bias, resume, C, ldc);
  for (; i + 4 <= r; i += 4) tile4<CB, NT>(i, s, M, ldm, N, ldn, bias, resume, C, ldc);
  if (i < r) scalar_rows<NT>(i, r, CB, s, M, ldm, N, ldn, bias, resume, C, ldc);
}
#endif

template <bool NT>
void column_block(int r, int s, int cb, const double* M, int ldm, const double* N, int ldn,
                  const double* bias, bool resume, double* C, int ldc) {
#ifdef FDMGDL_SIMD_AVX2
  switch (cb) {
#ifdef FDMGDL_SIMD_AVX512
    case 8: return column_block_fixed<8, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
    case 7: return column_block_fixed<7, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
#endif
    case 6: return column_block_fixed<6, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
    case 5: return column_block_fixed<5, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
    case 4: return column_block_fixed<4, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
    case 3: return column_block_fixed<3, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
    case 2: return column_block_fixed<2, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
    default: return column_block_fixed<1, NT>(r, s, M, ldm, N, ldn, bias, resume, C, ldc);
  }
#else
  scalar_rows<NT>(0, r, cb, s, M, ldm, N, ldn, bias, resume, C, ldc);
#endif
}

template <bool NT>
void gemm_impl(int r, int s, int c, const double* M, int ldm, const double* N, int ldn,
               const double* bias, double* C, int ldc) {
  const int blocks = (c + kColBlock - 1) / kColBlock;
#ifdef FDMGDL_HAVE_OPENMP
  const long work = static_cast<long>(r) * s * c;
#pragma omp parallel for schedule(static) if (work > 200000)
#endif
  for (int blk = 0; blk < blocks; ++blk) {
    const int k0 = blk * kColBlock;
    const int cb = std::min(kColBlock, c - k0);
    const double* nblk = NT ? N + k0 : N + static_cast<long>(k0) * ldn;
    // Long inner dimensions are split into chunks that stay in cache; the
    // chunks are visited in order, so the summation order is unchanged.
    int j0 = 0;
    do {
      const int sb = std::min(kInnerBlock, s - j0);
      const double* nchunk = NT ? nblk + static_cast<long>(j0) * ldn : nblk + j0;
      column_block<NT>(r, sb, cb, M + static_cast<long>(j0) * ldm, ldm, nchunk, ldn, bias, j0 > 0,
                       C + static_cast<long>(k0) * ldc, ldc);
      j0 += kInnerBlock;
    } while (j0 < s);
  }
}

}  // namespace

void gemm(int r, int s, int c, const double* M, int ldm, const double* N, int ldn,
          const double* bias, double* C, int ldc) {
  gemm_impl<false>(r, s, c, M, ldm, N, ldn, bias, C, ldc);
}

void gemm_nt(int r, int s, int c, const double* M, int ldm, const double* N, int ldn,
             const double* bias, double* C, int ldc) {
  gemm_impl<true>(r, s, c, M, ldm, N, ldn, bias, C, ldc);
}

void transpose(int r, int c, const double* src, int lds, double* dst, int ldd) {
  constexpr int B = 32;
  for (int k0 = 0; k0 < c; k0 += B)
    for (int i0 = 0; i0 < r; i0 += B)
      for (int k = k0; k < std::min(c, k0 + B); ++k)
        for (int i = i0; i < std::min(r, i0 + B); ++i)
          dst[static_cast<long>(i) * ldd + k] = src[static_cast<long>(k) * lds + i];
}

int thread_count() {
#ifdef FDMGDL_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
#ifdef FDMGDL_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace fdmgdl::kernels

namespace fdmgdl::kernels {

namespace {

constexpr double kTwoOverPi = 6.36619772367581382433e-01;
constexpr double kPio2a = 1.57079632673412561417e+00;
constexpr double kPio2b = 6.07710050630396597660e-11;
constexpr double kPio2c = 2.02226624871116645580e-21;

constexpr double kS0 = 1.58962301576546568060e-10;
constexpr double kS1 = -2.50507477628578072866e-8;
constexpr double kS2 = 2.75573136213857245213e-6;
constexpr double kS3 = -1.98412698295895385996e-4;
constexpr double kS4 = 8.33333333332211858878e-3;
constexpr double kS5 = -1.66666666666666307295e-1;

constexpr double kC0 = -1.13585365213876817300e-11;
constexpr double kC1 = 2.08757008419747316778e-9;
constexpr double kC2 = -2.75573141792967388112e-7;
constexpr double kC3 = 2.48015872888517045348e-5;
constexpr double kC4 = -1.38888888888730564116e-3;
constexpr double kC5 = 4.16666666666665929218e-2;

inline void reduce(double z, double& r, long& q) {
  const double k = std::nearbyint(z * kTwoOverPi);
  r = std::fma(-k, kPio2a, z);
  r = std::fma(-k, kPio2b, r);
  r = std::fma(-k, kPio2c, r);
  q = static_cast<long>(k);
}

inline double poly_sin(double r) {
  const double r2 = r * r;
  double p = std::fma(kS0, r2, kS1);
  p = std::fma(p, r2, kS2);
  p = std::fma(p, r2, kS3);
  p = std::fma(p, r2, kS4);
  p = std::fma(p, r2, kS5);
  return std::fma(r * r2, p, r);
}

inline double poly_cos(double r) {
  const double r2 = r * r;
  double p = std::fma(kC0, r2, kC1);
  p = std::fma(p, r2, kC2);
  p = std::fma(p, r2, kC3);
  p = std::fma(p, r2, kC4);
  p = std::fma(p, r2, kC5);
  return std::fma(r2 * r2, p, std::fma(-0.5, r2, 1.0));
}

}  // namespace

void sincos_array(long n, const double* z, double* s, double* c) {
  for (long i = 0; i < n; ++i) {
    double r;
    long q;
    reduce(z[i], r, q);
    const double ps = poly_sin(r);
    const double pc = poly_cos(r);
    const bool swap = (q & 1) != 0;
    const double sv = swap ? pc : ps;
    const double cv = swap ? ps : pc;
    s[i] = (q & 2) ? -sv : sv;
    c[i] = ((q + 1) & 2) ? -cv : cv;
  }
}

void sin_array(long n, const double* z, double* s) {
  for (long i = 0; i < n; ++i) {
    double r;
    long q;
    reduce(z[i], r, q);
    const double sv = (q & 1) ? poly_cos(r) : poly_sin(r);
    s[i] = (q & 2) ? -sv : sv;
  }
}

}  // namespace fdmgdl::kernels
