#include "spoofsmith/gemm.hpp"

#include <algorithm>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spoofsmith::kernels {

namespace {

int initial_workers() {
  int n = 1;
#ifdef _OPENMP
  n = omp_get_max_threads();
#endif
  if (const char* env = std::getenv("SPOOFSMITH_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return std::max(n, 1);
}

int g_workers = initial_workers();

template <typename T>
constexpr std::size_t kColTile = 256 / sizeof(T);

// `ap` is the A panel packed column-major: ap[p * MR + r] = A[r][p].
template <typename T, std::size_t MR, std::size_t NR>
inline void full_tile(std::size_t k, const T* ap, const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  T acc[MR][NR];
  for (std::size_t r = 0; r < MR; ++r)
    for (std::size_t j = 0; j < NR; ++j) acc[r][j] = c[r * ldc + j];
  for (std::size_t p = 0; p < k; ++p) {
    const T* brow = b + p * ldb;
    const T* acol = ap + p * MR;
#pragma GCC unroll 16
    for (std::size_t r = 0; r < MR; ++r) {
      const T av = acol[r];
      for (std::size_t j = 0; j < NR; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (std::size_t r = 0; r < MR; ++r)
    for (std::size_t j = 0; j < NR; ++j) c[r * ldc + j] = acc[r][j];
}

template <typename T>
void edge_tile(std::size_t mr, std::size_t nr, std::size_t k, const T* a, std::size_t lda, const T* b,
               std::size_t ldb, T* c, std::size_t ldc) {
  for (std::size_t r = 0; r < mr; ++r) {
    T* crow = c + r * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = a[r * lda + p];
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < nr; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T, std::size_t MR, std::size_t NR>
void run_tiles(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b,
               std::size_t ldb, T* c, std::size_t ldc) {
  const std::size_t row_tiles = (m + MR - 1) / MR;
  const std::size_t col_tiles = (n + NR - 1) / NR;
  const long long tiles = static_cast<long long>(row_tiles * col_tiles);
  std::vector<T> packed((m / MR) * MR * k);
  for (std::size_t i0 = 0; i0 + MR <= m; i0 += MR)
    for (std::size_t p = 0; p < k; ++p)
      for (std::size_t r = 0; r < MR; ++r) packed[i0 * k + p * MR + r] = a[(i0 + r) * lda + p];
  const bool parallel = g_workers > 1 && m * n * k > (1u << 16);
#pragma omp parallel for schedule(static) num_threads(g_workers) if (parallel)
  for (long long t = 0; t < tiles; ++t) {
    const std::size_t i0 = (static_cast<std::size_t>(t) % row_tiles) * MR;
    const std::size_t j0 = (static_cast<std::size_t>(t) / row_tiles) * NR;
    const std::size_t mr = std::min(MR, m - i0);
    const std::size_t nr = std::min(NR, n - j0);
    const T* ap = a + i0 * lda;
    const T* bp = b + j0;
    T* cp = c + i0 * ldc + j0;
    if (mr == MR && nr == NR) {
      full_tile<T, MR, NR>(k, packed.data() + i0 * k, bp, ldb, cp, ldc);
    } else {
      edge_tile<T>(mr, nr, k, ap, lda, bp, ldb, cp, ldc);
    }
  }
}

}  // namespace

int worker_count() { return g_workers; }
void set_worker_count(int n) { g_workers = std::max(n, 1); }

template <typename T>
void gemm_accumulate(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda,
                     const T* b, std::size_t ldb, T* c, std::size_t ldc) {
  if (m == 0 || n == 0 || k == 0) return;
  // Wide outputs use 4 x 4-vector tiles; narrow ones need more rows per tile
  // to keep enough independent accumulator chains in flight.
  if (n >= kColTile<T>) {
    run_tiles<T, 4, kColTile<T>>(m, n, k, a, lda, b, ldb, c, ldc);
  } else {
    run_tiles<T, 16, 64 / sizeof(T)>(m, n, k, a, lda, b, ldb, c, ldc);
  }
}

template <typename T>
void transpose(std::size_t rows, std::size_t cols, const T* src, T* dst) {
  constexpr std::size_t B = 32;
  for (std::size_t i0 = 0; i0 < rows; i0 += B)
    for (std::size_t j0 = 0; j0 < cols; j0 += B)
      for (std::size_t i = i0; i < std::min(rows, i0 + B); ++i)
        for (std::size_t j = j0; j < std::min(cols, j0 + B); ++j) dst[j * rows + i] = src[i * cols + j];
}

template void gemm_accumulate<float>(std::size_t, std::size_t, std::size_t, const float*, std::size_t,
                                     const float*, std::size_t, float*, std::size_t);
template void gemm_accumulate<double>(std::size_t, std::size_t, std::size_t, const double*, std::size_t,
                                      const double*, std::size_t, double*, std::size_t);
template void transpose<float>(std::size_t, std::size_t, const float*, float*);
template void transpose<double>(std::size_t, std::size_t, const double*, double*);

}  // namespace spoofsmith::kernels
