#pragma once

namespace fdmgdl::kernels {

// C(r x c) = M(r x s) * N(s x c) [+ bias broadcast over columns].
// Column-major storage. Every output entry is accumulated over the inner
// index in increasing order, independent of blocking and thread count.
void gemm(int r, int s, int c, const double* M, int ldm, const double* N, int ldn,
          const double* bias, double* C, int ldc);

// C(r x c) = M(r x s) * N^T with N stored column-major as (c x s).
void gemm_nt(int r, int s, int c, const double* M, int ldm, const double* N, int ldn,
             const double* bias, double* C, int ldc);

// Out-of-place transpose: dst(c x r) = src(r x c)^T.
void transpose(int r, int c, const double* src, int lds, double* dst, int ldd);

int thread_count();
// Caps the worker threads used by the data-parallel kernels.
void set_thread_count(int n);

}  // namespace fdmgdl::kernels

namespace fdmgdl::kernels {

// Elementwise sin and cos. Branch-free, so vector and scalar code paths agree
// bit for bit. Accurate to a few ulp for |z| < 1e5.
void sincos_array(long n, const double* z, double* s, double* c);
void sin_array(long n, const double* z, double* s);

}  // namespace fdmgdl::kernels
