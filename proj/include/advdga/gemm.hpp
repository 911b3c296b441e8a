#pragma once

namespace advdga {

// Row-major single-precision GEMM: C = alpha * op(A) * op(B) + beta * C.
// Backed by OpenBLAS when available, otherwise a plain loop implementation.
void sgemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
           const float* a, int lda, const float* b, int ldb, float beta,
           float* c, int ldc);

// Caps BLAS worker threads (no-op for the fallback implementation).
void set_blas_threads(int n);

}  // namespace advdga
