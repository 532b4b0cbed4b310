#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace msh {

/// Assignment of E items (edges, nodes) to segments (destination nodes,
/// graphs), together with a grouping of item ids by segment.
///
/// Within a segment, items keep their original relative order. Every
/// segment reduction accumulates in that order, which is what makes the
/// serial and OpenMP kernels produce identical bits.
class Segments {
public:
    Segments() = default;
    /// Throws IndexError when an index is >= num_segments.
    Segments(std::vector<std::size_t> segment_of, std::size_t num_segments);

    std::size_t num_segments() const { return num_segments_; }
    std::size_t size() const { return segment_of_.size(); }
    std::span<const std::size_t> segment_of() const { return segment_of_; }
    /// num_segments + 1 offsets into order().
    std::span<const std::size_t> offsets() const { return offsets_; }
    std::span<const std::size_t> order() const { return order_; }
    std::size_t count(std::size_t segment) const { return offsets_[segment + 1] - offsets_[segment]; }
    std::span<const std::size_t> members(std::size_t segment) const {
        return std::span<const std::size_t>(order_).subspan(offsets_[segment], count(segment));
    }

private:
    std::size_t num_segments_ = 0;
    std::vector<std::size_t> segment_of_;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> order_;
};

using SegmentsPtr = std::shared_ptr<const Segments>;

inline SegmentsPtr make_segments(std::vector<std::size_t> segment_of, std::size_t num_segments) {
    return std::make_shared<const Segments>(std::move(segment_of), num_segments);
}

}  // namespace msh
