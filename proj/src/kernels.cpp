#include "msh/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace msh::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = 1u << 15;

inline void axpy_row(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

inline void matmul_row(const double* a_row, const double* b, double* c_row, std::size_t k, std::size_t n) {
    for (std::size_t p = 0; p < k; ++p) axpy_row(a_row[p], b + p * n, c_row, n);
}

constexpr std::size_t kTile = 256;
constexpr std::size_t kRowBlock = 4;

// Rows [i0, i0 + 4) of c += a * b, tiled over columns. Each entry still
// accumulates in ascending p, as matmul_row does.
inline void matmul_rows4(const double* a, const double* b, double* c, std::size_t i0, std::size_t k,
                         std::size_t n) {
    const double* a0 = a + i0 * k;
    const double* a1 = a0 + k;
    const double* a2 = a1 + k;
    const double* a3 = a2 + k;
    double* c0 = c + i0 * n;
    double* c1 = c0 + n;
    double* c2 = c1 + n;
    double* c3 = c2 + n;
    for (std::size_t j0 = 0; j0 < n; j0 += kTile) {
        const std::size_t j1 = std::min(n, j0 + kTile);
        for (std::size_t p = 0; p < k; ++p) {
            const double* bp = b + p * n;
            const double x0 = a0[p], x1 = a1[p], x2 = a2[p], x3 = a3[p];
            for (std::size_t j = j0; j < j1; ++j) {
                const double v = bp[j];
                c0[j] += x0 * v;
                c1[j] += x1 * v;
                c2[j] += x2 * v;
                c3[j] += x3 * v;
            }
        }
    }
}

// Columns [j0, j1) of c += a^T * b, rows of a and b visited in ascending i.
inline void matmul_tn_tile(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                           std::size_t n, std::size_t j0, std::size_t j1) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* bi = b + i * n;
        const double* ai = a + i * k;
        std::size_t p = 0;
        for (; p + 4 <= k; p += 4) {
            double* c0 = c + p * n;
            double* c1 = c0 + n;
            double* c2 = c1 + n;
            double* c3 = c2 + n;
            const double x0 = ai[p], x1 = ai[p + 1], x2 = ai[p + 2], x3 = ai[p + 3];
            for (std::size_t j = j0; j < j1; ++j) {
                const double v = bi[j];
                c0[j] += x0 * v;
                c1[j] += x1 * v;
                c2[j] += x2 * v;
                c3[j] += x3 * v;
            }
        }
        for (; p < k; ++p) axpy_row(ai[p], bi + j0, c + p * n + j0, j1 - j0);
    }
}

std::vector<double> transpose(std::span<const double> b, std::size_t rows, std::size_t cols) {
    std::vector<double> t(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) t[c * rows + r] = b[r * cols + c];
    return t;
}

inline double project_entry(const double* frow, const double* h, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += frow[j] * h[j];
    return acc;
}

inline void harmonic_row(const double* p, std::span<const double> freqs, std::size_t F, double* out) {
    const std::size_t K = freqs.size();
    for (std::size_t k = 0; k < K; ++k) {
        double* s = out + k * 2 * F;
        double* c = s + F;
        for (std::size_t f = 0; f < F; ++f) {
            const double x = freqs[k] * p[f];
            s[f] = std::sin(x);
            c[f] = std::cos(x);
        }
    }
}

inline void harmonic_backward_row(const double* code, const double* dcode, std::span<const double> freqs,
                                  std::size_t F, double* dp) {
    const std::size_t K = freqs.size();
    for (std::size_t f = 0; f < F; ++f) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const std::size_t base = k * 2 * F;
            acc += freqs[k] * (code[base + F + f] * dcode[base + f] - code[base + f] * dcode[base + F + f]);
        }
        dp[f] += acc;
    }
}

inline void softmax_segment(std::span<const double> scores, std::span<const std::size_t> members,
                            std::span<double> out) {
    if (members.empty()) return;
    double mx = scores[members[0]];
    for (auto e : members) mx = std::max(mx, scores[e]);
    double total = 0.0;
    for (auto e : members) {
        out[e] = std::exp(scores[e] - mx);
        total += out[e];
    }
    for (auto e : members) out[e] /= total;
}

inline void softmax_backward_segment(std::span<const double> y, std::span<const double> dy,
                                     std::span<const std::size_t> members, std::span<double> ds) {
    double dot = 0.0;
    for (auto e : members) dot += y[e] * dy[e];
    for (auto e : members) ds[e] += y[e] * (dy[e] - dot);
}

inline void edge_backward_h_entry(const double* dp_row, const double* fflat_row, std::size_t F, std::size_t d,
                                  double* dh_row) {
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t f = 0; f < F; ++f) acc += dp_row[f] * fflat_row[f * d + j];
        dh_row[j] += acc;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Serial reference
// ---------------------------------------------------------------------------
namespace serial {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) matmul_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) axpy_row(a[i * k + p], b.data() + i * n, c.data() + p * n, n);
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t n, std::size_t k) {
    const auto bt = transpose(b, k, n);
    for (std::size_t i = 0; i < m; ++i) matmul_row(a.data() + i * n, bt.data(), c.data() + i * k, n, k);
}

void gather_rows(std::span<const double> x, const Segments& seg, std::size_t d, std::span<double> out) {
    const auto idx = seg.segment_of();
    for (std::size_t e = 0; e < idx.size(); ++e)
        std::copy_n(x.data() + idx[e] * d, d, out.data() + e * d);
}

void segment_sum(std::span<const double> values, const Segments& seg, std::size_t d, std::span<double> out) {
    const auto idx = seg.segment_of();
    for (std::size_t e = 0; e < idx.size(); ++e) axpy_row(1.0, values.data() + e * d, out.data() + idx[e] * d, d);
}

void segment_max(std::span<const double> values, const Segments& seg, std::size_t d, std::span<double> out,
                 std::span<std::size_t> argmax) {
    const auto idx = seg.segment_of();
    std::vector<bool> seen(seg.num_segments(), false);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t e = 0; e < idx.size(); ++e) {
        const std::size_t s = idx[e];
        for (std::size_t j = 0; j < d; ++j) {
            const double v = values[e * d + j];
            if (!seen[s] || v > out[s * d + j]) {
                out[s * d + j] = v;
                argmax[s * d + j] = e;
            }
        }
        seen[s] = true;
    }
}

void segment_softmax(std::span<const double> scores, const Segments& seg, std::span<double> out) {
    for (std::size_t s = 0; s < seg.num_segments(); ++s) softmax_segment(scores, seg.members(s), out);
}

void segment_softmax_backward(std::span<const double> y, std::span<const double> dy, const Segments& seg,
                              std::span<double> dscores) {
    for (std::size_t s = 0; s < seg.num_segments(); ++s) softmax_backward_segment(y, dy, seg.members(s), dscores);
}

void edge_project(std::span<const double> fflat, std::span<const double> h, const Segments& src,
                  const Segments& dst, std::size_t F, std::size_t d, std::span<double> out) {
    const auto s = src.segment_of();
    const auto t = dst.segment_of();
    for (std::size_t e = 0; e < s.size(); ++e) {
        const double* frow = fflat.data() + t[e] * F * d;
        const double* hrow = h.data() + s[e] * d;
        for (std::size_t f = 0; f < F; ++f) out[e * F + f] = project_entry(frow + f * d, hrow, d);
    }
}

void edge_project_backward_f(std::span<const double> dp, std::span<const double> h, const Segments& src,
                             const Segments& dst, std::size_t F, std::size_t d, std::span<double> dfflat) {
    const auto s = src.segment_of();
    const auto t = dst.segment_of();
    for (std::size_t e = 0; e < s.size(); ++e) {
        double* drow = dfflat.data() + t[e] * F * d;
        const double* hrow = h.data() + s[e] * d;
        for (std::size_t f = 0; f < F; ++f) axpy_row(dp[e * F + f], hrow, drow + f * d, d);
    }
}

void edge_project_backward_h(std::span<const double> dp, std::span<const double> fflat, const Segments& src,
                             const Segments& dst, std::size_t F, std::size_t d, std::span<double> dh) {
    const auto s = src.segment_of();
    const auto t = dst.segment_of();
    for (std::size_t e = 0; e < s.size(); ++e)
        edge_backward_h_entry(dp.data() + e * F, fflat.data() + t[e] * F * d, F, d, dh.data() + s[e] * d);
}

void harmonic_encode(std::span<const double> p, std::span<const double> freqs, std::size_t E, std::size_t F,
                     std::span<double> out) {
    const std::size_t width = 2 * F * freqs.size();
    for (std::size_t e = 0; e < E; ++e) harmonic_row(p.data() + e * F, freqs, F, out.data() + e * width);
}

void harmonic_backward(std::span<const double> code, std::span<const double> dcode, std::span<const double> freqs,
                       std::size_t E, std::size_t F, std::span<double> dp) {
    const std::size_t width = 2 * F * freqs.size();
    for (std::size_t e = 0; e < E; ++e)
        harmonic_backward_row(code.data() + e * width, dcode.data() + e * width, freqs, F, dp.data() + e * F);
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP
// ---------------------------------------------------------------------------
namespace parallel {

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_num_threads(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
            std::size_t k, std::size_t n) {
    const bool big = m * k * n >= kMinParallelWork;
    const auto blocks = static_cast<std::ptrdiff_t>(m / kRowBlock);
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) matmul_rows4(a.data(), b.data(), c.data(), blk * kRowBlock, k, n);
    for (std::size_t i = blocks * kRowBlock; i < m; ++i)
        matmul_row(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void matmul_tn(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t k, std::size_t n) {
    const bool big = m * k * n >= kMinParallelWork;
    const auto tiles = static_cast<std::ptrdiff_t>((n + kTile - 1) / kTile);
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t t = 0; t < tiles; ++t)
        matmul_tn_tile(a.data(), b.data(), c.data(), m, k, n, t * kTile, std::min(n, (t + 1) * kTile));
}

void matmul_nt(std::span<const double> a, std::span<const double> b, std::span<double> c, std::size_t m,
               std::size_t n, std::size_t k) {
    matmul(a, transpose(b, k, n), c, m, n, k);
}

void gather_rows(std::span<const double> x, const Segments& seg, std::size_t d, std::span<double> out) {
    const auto idx = seg.segment_of();
    const bool big = idx.size() * d >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(idx.size());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t e = 0; e < n; ++e) std::copy_n(x.data() + idx[e] * d, d, out.data() + e * d);
}

void segment_sum(std::span<const double> values, const Segments& seg, std::size_t d, std::span<double> out) {
    const bool big = seg.size() * d >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(seg.num_segments());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t s = 0; s < n; ++s)
        for (auto e : seg.members(s)) axpy_row(1.0, values.data() + e * d, out.data() + s * d, d);
}

void segment_max(std::span<const double> values, const Segments& seg, std::size_t d, std::span<double> out,
                 std::span<std::size_t> argmax) {
    const bool big = seg.size() * d >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(seg.num_segments());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t s = 0; s < n; ++s) {
        const auto members = seg.members(s);
        for (std::size_t j = 0; j < d; ++j) {
            double best = 0.0;
            std::size_t arg = 0;
            bool first = true;
            for (auto e : members) {
                const double v = values[e * d + j];
                if (first || v > best) {
                    best = v;
                    arg = e;
                    first = false;
                }
            }
            out[s * d + j] = best;
            if (!first) argmax[s * d + j] = arg;
        }
    }
}

void segment_softmax(std::span<const double> scores, const Segments& seg, std::span<double> out) {
    const bool big = seg.size() * 16 >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(seg.num_segments());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t s = 0; s < n; ++s) softmax_segment(scores, seg.members(s), out);
}

void segment_softmax_backward(std::span<const double> y, std::span<const double> dy, const Segments& seg,
                              std::span<double> dscores) {
    const bool big = seg.size() * 4 >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(seg.num_segments());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t s = 0; s < n; ++s) softmax_backward_segment(y, dy, seg.members(s), dscores);
}

void edge_project(std::span<const double> fflat, std::span<const double> h, const Segments& src,
                  const Segments& dst, std::size_t F, std::size_t d, std::span<double> out) {
    const auto s = src.segment_of();
    const auto t = dst.segment_of();
    const bool big = s.size() * F * d >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(s.size());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t e = 0; e < n; ++e) {
        const double* frow = fflat.data() + t[e] * F * d;
        const double* hrow = h.data() + s[e] * d;
        for (std::size_t f = 0; f < F; ++f) out[e * F + f] = project_entry(frow + f * d, hrow, d);
    }
}

void edge_project_backward_f(std::span<const double> dp, std::span<const double> h, const Segments& src,
                             const Segments& dst, std::size_t F, std::size_t d, std::span<double> dfflat) {
    const auto s = src.segment_of();
    const bool big = s.size() * F * d >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(dst.num_segments());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t v = 0; v < n; ++v) {
        double* drow = dfflat.data() + v * F * d;
        for (auto e : dst.members(v)) {
            const double* hrow = h.data() + s[e] * d;
            for (std::size_t f = 0; f < F; ++f) axpy_row(dp[e * F + f], hrow, drow + f * d, d);
        }
    }
}

void edge_project_backward_h(std::span<const double> dp, std::span<const double> fflat, const Segments& src,
                             const Segments& dst, std::size_t F, std::size_t d, std::span<double> dh) {
    const auto t = dst.segment_of();
    const bool big = t.size() * F * d >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(src.num_segments());
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t u = 0; u < n; ++u) {
        for (auto e : src.members(u))
            edge_backward_h_entry(dp.data() + e * F, fflat.data() + t[e] * F * d, F, d, dh.data() + u * d);
    }
}

void harmonic_encode(std::span<const double> p, std::span<const double> freqs, std::size_t E, std::size_t F,
                     std::span<double> out) {
    const std::size_t width = 2 * F * freqs.size();
    const bool big = E * width * 8 >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(E);
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t e = 0; e < n; ++e) harmonic_row(p.data() + e * F, freqs, F, out.data() + e * width);
}

void harmonic_backward(std::span<const double> code, std::span<const double> dcode, std::span<const double> freqs,
                       std::size_t E, std::size_t F, std::span<double> dp) {
    const std::size_t width = 2 * F * freqs.size();
    const bool big = E * width >= kMinParallelWork;
    const auto n = static_cast<std::ptrdiff_t>(E);
#pragma omp parallel for schedule(static) if (big)
    for (std::ptrdiff_t e = 0; e < n; ++e)
        harmonic_backward_row(code.data() + e * width, dcode.data() + e * width, freqs, F, dp.data() + e * F);
}

}  // namespace parallel

}  // namespace msh::kernels
