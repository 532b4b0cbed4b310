#pragma once

#include <cstddef>
#include <vector>

#include "msh/rng.hpp"
#include "msh/segments.hpp"
#include "msh/tensor.hpp"

// Differentiable operations. Each records a backward closure on the active
// tape when any input requires a gradient; otherwise it is a plain
// computation. Shape errors throw DimensionError naming both shapes.

namespace msh::ops {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
/// a[N x d] + bias[d] broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& bias);
/// x[E x d] with row e multiplied by w[e]; w has E entries.
Tensor scale_rows(const Tensor& x, const Tensor& w);

Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, double slope);
Tensor sigmoid(const Tensor& a);

/// Inverted dropout: in training mode each entry survives with probability
/// 1 - rate and is scaled by 1 / (1 - rate); identity otherwise.
Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training);

/// Sum of all entries, as a 1-element tensor.
Tensor sum(const Tensor& a);
/// Rows [begin, end) of a matrix or entries [begin, end) of a vector.
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);

/// out[e, :] = x[seg.segment_of()[e], :]
Tensor gather_rows(const Tensor& x, const SegmentsPtr& seg);
/// Row s of the result sums the rows of `values` assigned to segment s.
Tensor segment_sum(const Tensor& values, const SegmentsPtr& seg);
Tensor segment_sum(const Tensor& values, const std::vector<std::size_t>& segment_of, std::size_t num_segments);
/// Per-segment mean; empty segments yield zero rows.
Tensor segment_mean(const Tensor& values, const SegmentsPtr& seg);
/// Per-segment elementwise max; empty segments yield zero rows.
Tensor segment_max(const Tensor& values, const SegmentsPtr& seg);
/// Scores of shape [E] or [E x 1]; result has the same shape and sums to 1
/// over the members of every non-empty segment.
Tensor segment_softmax(const Tensor& scores, const SegmentsPtr& seg);
Tensor segment_softmax(const Tensor& scores, const std::vector<std::size_t>& segment_of, std::size_t num_segments);

/// sum_l w[l] * xs[l]; all xs share one shape, w has xs.size() entries.
Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& w);

/// Receiver-conditioned projection for every edge e = (src_e -> dst_e):
/// out[e, f] = sum_j fflat[dst_e, f*d + j] * h[src_e, j], with fflat [N x F*d]
/// the row-major flattening of each node's F x d projection matrix.
Tensor edge_project(const Tensor& fflat, const Tensor& h, const SegmentsPtr& src, const SegmentsPtr& dst,
                    std::size_t F);

/// Frequency-major sine/cosine code: for p [E x F] and K frequencies the
/// result is [E x 2FK] with block k = [sin(w_k p) | cos(w_k p)]. Gradients
/// flow to p and, when tracked, to the frequencies.
Tensor harmonic_encode(const Tensor& p, const Tensor& freqs);

/// Mean cross-entropy of logits [N x C] against class indices.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels);

}  // namespace msh::ops
