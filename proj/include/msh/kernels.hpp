#pragma once

#include <cstddef>
#include <span>

#include "msh/segments.hpp"

// Raw numeric kernels behind the differentiable ops.
//
// Two implementations share one signature set: `serial` is the reference kept
// for testing, `parallel` distributes independent output rows/segments across
// OpenMP threads. Every output element is accumulated by exactly one thread
// in the same order as the serial loop, so both produce identical bits
// regardless of thread count. All matrices are dense row-major; kernels that
// write into `out` accumulate (+=) unless stated otherwise.

namespace msh::kernels {

#define MSH_KERNEL_DECLS                                                                                      \
    /* c[m x n] += a[m x k] * b[k x n] */                                                                     \
    void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,      \
                std::size_t k, std::size_t n);                                                                 \
    /* c[k x n] += a[m x k]^T * b[m x n] */                                                                   \
    void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,   \
                   std::size_t k, std::size_t n);                                                              \
    /* c[m x k] += a[m x n] * b[k x n]^T */                                                                   \
    void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,   \
                   std::size_t n, std::size_t k);                                                              \
    /* out[e, :] = x[seg_of[e], :]  (overwrites) */                                                           \
    void gather_rows(std::span<const double> x, const Segments& seg, std::size_t d, std::span<double> out);    \
    /* out[s, :] += sum of values[e, :] over members e of segment s */                                        \
    void segment_sum(std::span<const double> values, const Segments& seg, std::size_t d,                       \
                     std::span<double> out);                                                                   \
    /* out[s, j] = max over members (0 for empty segments); argmax holds the first maximizing item */         \
    void segment_max(std::span<const double> values, const Segments& seg, std::size_t d, std::span<double> out, \
                     std::span<std::size_t> argmax);                                                           \
    /* per-segment max-shifted softmax of scalar scores (overwrites out) */                                   \
    void segment_softmax(std::span<const double> scores, const Segments& seg, std::span<double> out);          \
    /* dscores += y * (dy - sum_segment(y * dy)) */                                                           \
    void segment_softmax_backward(std::span<const double> y, std::span<const double> dy, const Segments& seg,  \
                                  std::span<double> dscores);                                                  \
    /* out[e, f] = sum_j fflat[dst_e, f*d + j] * h[src_e, j]  (overwrites) */                                 \
    void edge_project(std::span<const double> fflat, std::span<const double> h, const Segments& src,           \
                      const Segments& dst, std::size_t F, std::size_t d, std::span<double> out);               \
    /* dfflat[dst_e, f*d + j] += dp[e, f] * h[src_e, j] */                                                    \
    void edge_project_backward_f(std::span<const double> dp, std::span<const double> h, const Segments& src,   \
                                 const Segments& dst, std::size_t F, std::size_t d, std::span<double> dfflat); \
    /* dh[src_e, j] += sum_f dp[e, f] * fflat[dst_e, f*d + j] */                                              \
    void edge_project_backward_h(std::span<const double> dp, std::span<const double> fflat,                    \
                                 const Segments& src, const Segments& dst, std::size_t F, std::size_t d,       \
                                 std::span<double> dh);                                                        \
    /* out[e, k*2F + f] = sin(w_k p[e,f]); out[e, k*2F + F + f] = cos(w_k p[e,f])  (overwrites) */            \
    void harmonic_encode(std::span<const double> p, std::span<const double> freqs, std::size_t E,              \
                         std::size_t F, std::span<double> out);                                                \
    /* dp[e, f] += sum_k w_k (cos * dsin - sin * dcos), reading sin/cos back from `code` */                   \
    void harmonic_backward(std::span<const double> code, std::span<const double> dcode,                        \
                           std::span<const double> freqs, std::size_t E, std::size_t F, std::span<double> dp);

namespace serial {
MSH_KERNEL_DECLS
}  // namespace serial

namespace parallel {
MSH_KERNEL_DECLS
/// Threads OpenMP will use for a parallel region (1 when built without OpenMP).
int max_threads();
void set_num_threads(int n);
}  // namespace parallel

#undef MSH_KERNEL_DECLS

}  // namespace msh::kernels
