#pragma once

#include <cstddef>

namespace spoofsmith::kernels {

/// C[i][j] += sum_p A[i][p] * B[p][j] over row-major operands.
///
/// Every output element is reduced sequentially in p, starting from its
/// current value, and owned by exactly one worker. Results are therefore
/// bit-identical to a naive triple loop with the same starting value and do
/// not depend on the thread count.
template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                     const T* b, std::size_t ldb, T* c, std::size_t ldc);

/// dst[j][i] = src[i][j] for a rows x cols row-major source.
template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst);

/// Number of workers for intra-op loops (SPOOFSMITH_THREADS caps it).
int worker_count();
void set_worker_count(int n);

}  // namespace spoofsmith::kernels
