#include "msh/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msh/errors.hpp"
#include "msh/kernels.hpp"

namespace msh::ops {

namespace K = msh::kernels::parallel;

namespace {

void record_if_needed(std::vector<Tensor> inputs, const Tensor& out, Tape::BackwardFn fn) {
    Tape* tape = Tape::active();
    if (!tape) return;
    const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor& t) { return t.requires_grad(); });
    if (!any) return;
    tape->record(std::move(inputs), out, std::move(fn));
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

void require_2d(const char* op, const Tensor& a) {
    if (a.dim() != 2) throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(a.shape()));
}

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& a, Fwd fwd, Bwd bwd) {
    Tensor out(a.shape());
    auto x = a.data();
    auto y = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
    const TensorImpl* in = a.impl();
    const TensorImpl* res = out.impl();
    record_if_needed({a}, out, [in, res, bwd](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * bwd(in->data[i], res->data[i]);
    });
    return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d("matmul", a);
    require_2d("matmul", b);
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (b.shape()[0] != k) shape_mismatch("matmul", a, b);
    Tensor out({m, n});
    K::matmul(a.data(), b.data(), out.data(), m, k, n);
    const TensorImpl* pa = a.impl();
    const TensorImpl* pb = b.impl();
    record_if_needed({a, b}, out, [pa, pb, m, k, n](std::span<const double> g, std::span<const std::span<double>> gi) {
        if (!gi[0].empty()) K::matmul_nt(g, pb->data, gi[0], m, n, k);
        if (!gi[1].empty()) K::matmul_tn(pa->data, g, gi[1], m, k, n);
    });
    return out;
}

Tensor transpose(const Tensor& a) {
    require_2d("transpose", a);
    const std::size_t r = a.shape()[0], c = a.shape()[1];
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a[i * c + j];
    record_if_needed({a}, out, [r, c](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gi[0][i * c + j] += g[j * r + i];
    });
    return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
    if (shape_numel(shape) != a.numel()) {
        throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    Tensor out(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
    record_if_needed({a}, out, [](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
    });
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_mismatch("add", a, b);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] + b[i];
    record_if_needed({a, b}, out, [](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (int s = 0; s < 2; ++s)
            if (!gi[s].empty())
                for (std::size_t i = 0; i < g.size(); ++i) gi[s][i] += g[i];
    });
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_mismatch("sub", a, b);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] - b[i];
    record_if_needed({a, b}, out, [](std::span<const double> g, std::span<const std::span<double>> gi) {
        if (!gi[0].empty())
            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
        if (!gi[1].empty())
            for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] -= g[i];
    });
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) shape_mismatch("mul", a, b);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a[i] * b[i];
    const TensorImpl* pa = a.impl();
    const TensorImpl* pb = b.impl();
    record_if_needed({a, b}, out, [pa, pb](std::span<const double> g, std::span<const std::span<double>> gi) {
        if (!gi[0].empty())
            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * pb->data[i];
        if (!gi[1].empty())
            for (std::size_t i = 0; i < g.size(); ++i) gi[1][i] += g[i] * pa->data[i];
    });
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
    require_2d("add_row", a);
    const std::size_t n = a.shape()[0], d = a.shape()[1];
    if (bias.numel() != d) shape_mismatch("add_row", a, bias);
    Tensor out(a.shape());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = a[i * d + j] + bias[j];
    record_if_needed({a, bias}, out, [n, d](std::span<const double> g, std::span<const std::span<double>> gi) {
        if (!gi[0].empty())
            for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i];
        if (!gi[1].empty())
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d; ++j) gi[1][j] += g[i * d + j];
    });
    return out;
}

Tensor scale_rows(const Tensor& x, const Tensor& w) {
    const std::size_t e = x.rows(), d = x.cols();
    if (w.numel() != e) shape_mismatch("scale_rows", x, w);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < e; ++i)
        for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x[i * d + j] * w[i];
    const TensorImpl* px = x.impl();
    const TensorImpl* pw = w.impl();
    record_if_needed({x, w}, out, [px, pw, e, d](std::span<const double> g, std::span<const std::span<double>> gi) {
        if (!gi[0].empty())
            for (std::size_t i = 0; i < e; ++i)
                for (std::size_t j = 0; j < d; ++j) gi[0][i * d + j] += g[i * d + j] * pw->data[i];
        if (!gi[1].empty())
            for (std::size_t i = 0; i < e; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < d; ++j) acc += g[i * d + j] * px->data[i * d + j];
                gi[1][i] += acc;
            }
    });
    return out;
}

Tensor sin(const Tensor& a) {
    return unary(a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Tensor cos(const Tensor& a) {
    return unary(a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Tensor relu(const Tensor& a) {
    return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(const Tensor& a, double slope) {
    return unary(
        a, [slope](double x) { return x > 0.0 ? x : slope * x; },
        [slope](double x, double) { return x > 0.0 ? 1.0 : slope; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        a,
        [](double x) {
            if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
            const double z = std::exp(x);
            return z / (1.0 + z);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor dropout(const Tensor& a, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) throw ContractError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
    if (!training || rate == 0.0) return a;
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(a.numel());
    for (auto& m : mask) m = rng.uniform() < rate ? 0.0 : keep_scale;
    Tensor out(a.shape());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = a[i] * mask[i];
    record_if_needed({a}, out, [mask = std::move(mask)](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (std::size_t i = 0; i < g.size(); ++i) gi[0][i] += g[i] * mask[i];
    });
    return out;
}

Tensor sum(const Tensor& a) {
    double acc = 0.0;
    for (double v : a.data()) acc += v;
    Tensor out = Tensor::scalar(acc);
    record_if_needed({a}, out, [](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (auto& x : gi[0]) x += g[0];
    });
    return out;
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
    if (begin > end || end > a.rows()) {
        throw IndexError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of bounds for " + shape_str(a.shape()));
    }
    const std::size_t c = a.cols();
    Shape shape = a.shape();
    if (shape.empty()) shape = {1};
    shape[0] = end - begin;
    Tensor out(shape, std::vector<double>(a.data().begin() + begin * c, a.data().begin() + end * c));
    record_if_needed({a}, out, [begin, c](std::span<const double> g, std::span<const std::span<double>> gi) {
        for (std::size_t i = 0; i < g.size(); ++i) gi[0][begin * c + i] += g[i];
    });
    return out;
}

Tensor gather_rows(const Tensor& x, const SegmentsPtr& seg) {
    if (x.rows() != seg->num_segments()) {
        throw DimensionError("gather_rows: source has " + std::to_string(x.rows()) + " rows but index targets " +
                             std::to_string(seg->num_segments()));
    }
    const std::size_t d = x.cols();
    Shape shape = x.shape();
    shape[0] = seg->size();
    Tensor out(shape);
    K::gather_rows(x.data(), *seg, d, out.data());
    record_if_needed({x}, out, [seg, d](std::span<const double> g, std::span<const std::span<double>> gi) {
        K::segment_sum(g, *seg, d, gi[0]);
    });
    return out;
}

Tensor segment_sum(const Tensor& values, const SegmentsPtr& seg) {
    if (values.rows() != seg->size()) {
        throw DimensionError("segment_sum: " + std::to_string(values.rows()) + " rows but " +
                             std::to_string(seg->size()) + " segment indices");
    }
    const std::size_t d = values.cols();
    Shape shape = values.shape();
    shape[0] = seg->num_segments();
    Tensor out(shape);
    K::segment_sum(values.data(), *seg, d, out.data());
    record_if_needed({values}, out, [seg, d](std::span<const double> g, std::span<const std::span<double>> gi) {
        const auto idx = seg->segment_of();
        for (std::size_t e = 0; e < idx.size(); ++e)
            for (std::size_t j = 0; j < d; ++j) gi[0][e * d + j] += g[idx[e] * d + j];
    });
    return out;
}

Tensor segment_sum(const Tensor& values, const std::vector<std::size_t>& segment_of, std::size_t num_segments) {
    return segment_sum(values, make_segments(segment_of, num_segments));
}

Tensor segment_mean(const Tensor& values, const SegmentsPtr& seg) {
    Tensor summed = segment_sum(values, seg);
    std::vector<double> inv(seg->num_segments());
    for (std::size_t s = 0; s < inv.size(); ++s) inv[s] = seg->count(s) ? 1.0 / static_cast<double>(seg->count(s)) : 0.0;
    return scale_rows(summed, Tensor::vector(std::move(inv)));
}

Tensor segment_max(const Tensor& values, const SegmentsPtr& seg) {
    if (values.rows() != seg->size()) {
        throw DimensionError("segment_max: " + std::to_string(values.rows()) + " rows but " +
                             std::to_string(seg->size()) + " segment indices");
    }
    const std::size_t d = values.cols();
    Shape shape = values.shape();
    shape[0] = seg->num_segments();
    Tensor out(shape);
    std::vector<std::size_t> argmax(out.numel(), 0);
    K::segment_max(values.data(), *seg, d, out.data(), argmax);
    record_if_needed({values}, out,
                     [seg, d, argmax = std::move(argmax)](std::span<const double> g, std::span<const std::span<double>> gi) {
                         for (std::size_t s = 0; s < seg->num_segments(); ++s) {
                             if (seg->count(s) == 0) continue;
                             for (std::size_t j = 0; j < d; ++j) gi[0][argmax[s * d + j] * d + j] += g[s * d + j];
                         }
                     });
    return out;
}

Tensor segment_softmax(const Tensor& scores, const SegmentsPtr& seg) {
    if (scores.numel() != seg->size() || scores.cols() != 1) {
        throw DimensionError("segment_softmax: scores " + shape_str(scores.shape()) + " do not match " +
                             std::to_string(seg->size()) + " segment indices");
    }
    Tensor out(scores.shape());
    K::segment_softmax(scores.data(), *seg, out.data());
    const TensorImpl* res = out.impl();
    record_if_needed({scores}, out, [seg, res](std::span<const double> g, std::span<const std::span<double>> gi) {
        K::segment_softmax_backward(res->data, g, *seg, gi[0]);
    });
    return out;
}

Tensor segment_softmax(const Tensor& scores, const std::vector<std::size_t>& segment_of, std::size_t num_segments) {
    return segment_softmax(scores, make_segments(segment_of, num_segments));
}

Tensor weighted_sum(const std::vector<Tensor>& xs, const Tensor& w) {
    if (xs.empty()) throw ContractError("weighted_sum of an empty list");
    if (w.numel() != xs.size()) {
        throw DimensionError("weighted_sum: " + std::to_string(xs.size()) + " inputs but " +
                             std::to_string(w.numel()) + " weights");
    }
    Tensor out(xs[0].shape());
    for (std::size_t l = 0; l < xs.size(); ++l) {
        if (xs[l].shape() != out.shape()) shape_mismatch("weighted_sum", xs[0], xs[l]);
        for (std::size_t i = 0; i < out.numel(); ++i) out[i] += w[l] * xs[l][i];
    }
    std::vector<Tensor> inputs(xs);
    inputs.push_back(w);
    std::vector<const TensorImpl*> px;
    for (const auto& x : xs) px.push_back(x.impl());
    const TensorImpl* pw = w.impl();
    record_if_needed(std::move(inputs), out,
                     [px = std::move(px), pw](std::span<const double> g, std::span<const std::span<double>> gi) {
                         const std::size_t L = px.size();
                         for (std::size_t l = 0; l < L; ++l) {
                             if (!gi[l].empty())
                                 for (std::size_t i = 0; i < g.size(); ++i) gi[l][i] += pw->data[l] * g[i];
                             if (!gi[L].empty()) {
                                 double acc = 0.0;
                                 for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * px[l]->data[i];
                                 gi[L][l] += acc;
                             }
                         }
                     });
    return out;
}

Tensor edge_project(const Tensor& fflat, const Tensor& h, const SegmentsPtr& src, const SegmentsPtr& dst,
                    std::size_t F) {
    require_2d("edge_project", fflat);
    require_2d("edge_project", h);
    const std::size_t d = h.shape()[1];
    if (fflat.shape()[1] != F * d) shape_mismatch("edge_project", fflat, h);
    if (src->size() != dst->size() || h.rows() != src->num_segments() || fflat.rows() != dst->num_segments()) {
        throw DimensionError("edge_project: edge index does not match node counts " + shape_str(fflat.shape()) +
                             " / " + shape_str(h.shape()));
    }
    Tensor out({src->size(), F});
    K::edge_project(fflat.data(), h.data(), *src, *dst, F, d, out.data());
    const TensorImpl* pf = fflat.impl();
    const TensorImpl* ph = h.impl();
    record_if_needed({fflat, h}, out,
                     [pf, ph, src, dst, F, d](std::span<const double> g, std::span<const std::span<double>> gi) {
                         if (!gi[0].empty()) K::edge_project_backward_f(g, ph->data, *src, *dst, F, d, gi[0]);
                         if (!gi[1].empty()) K::edge_project_backward_h(g, pf->data, *src, *dst, F, d, gi[1]);
                     });
    return out;
}

Tensor harmonic_encode(const Tensor& p, const Tensor& freqs) {
    require_2d("harmonic_encode", p);
    if (freqs.numel() == 0) throw ContractError("harmonic_encode requires at least one frequency");
    const std::size_t E = p.shape()[0], F = p.shape()[1], Kf = freqs.numel();
    const std::size_t width = 2 * F * Kf;
    Tensor out({E, width});
    K::harmonic_encode(p.data(), freqs.data(), E, F, out.data());
    const TensorImpl* pp = p.impl();
    const TensorImpl* pw = freqs.impl();
    const TensorImpl* res = out.impl();
    record_if_needed({p, freqs}, out,
                     [pp, pw, res, E, F, Kf, width](std::span<const double> g, std::span<const std::span<double>> gi) {
                         if (!gi[0].empty()) K::harmonic_backward(res->data, g, pw->data, E, F, gi[0]);
                         if (!gi[1].empty()) {
                             for (std::size_t k = 0; k < Kf; ++k) {
                                 double acc = 0.0;
                                 for (std::size_t e = 0; e < E; ++e) {
                                     const double* code = res->data.data() + e * width + k * 2 * F;
                                     const double* dcode = g.data() + e * width + k * 2 * F;
                                     for (std::size_t f = 0; f < F; ++f)
                                         acc += pp->data[e * F + f] * (code[F + f] * dcode[f] - code[f] * dcode[F + f]);
                                 }
                                 gi[1][k] += acc;
                             }
                         }
                     });
    return out;
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& labels) {
    require_2d("cross_entropy", logits);
    const std::size_t n = logits.shape()[0], c = logits.shape()[1];
    if (labels.size() != n) {
        throw DimensionError("cross_entropy: " + std::to_string(n) + " rows but " + std::to_string(labels.size()) +
                             " labels");
    }
    if (n == 0) throw ContractError("cross_entropy of an empty batch");
    std::vector<double> probs(n * c);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] >= c) {
            throw IndexError("label " + std::to_string(labels[i]) + " out of range for " + std::to_string(c) +
                             " classes");
        }
        const double* row = logits.data().data() + i * c;
        const double mx = *std::max_element(row, row + c);
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - mx);
        for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - mx) / z;
        total += (mx + std::log(z)) - row[labels[i]];
    }
    Tensor out = Tensor::scalar(total / static_cast<double>(n));
    record_if_needed({logits}, out,
                     [probs = std::move(probs), labels, n, c](std::span<const double> g, std::span<const std::span<double>> gi) {
                         const double s = g[0] / static_cast<double>(n);
                         for (std::size_t i = 0; i < n; ++i)
                             for (std::size_t j = 0; j < c; ++j)
                                 gi[0][i * c + j] += s * (probs[i * c + j] - (j == labels[i] ? 1.0 : 0.0));
                     });
    return out;
}

}  // namespace msh::ops
