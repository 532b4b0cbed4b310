#include "msh/segments.hpp"

#include <string>

#include "msh/errors.hpp"

namespace msh {

Segments::Segments(std::vector<std::size_t> segment_of, std::size_t num_segments)
    : num_segments_(num_segments), segment_of_(std::move(segment_of)) {
    offsets_.assign(num_segments_ + 1, 0);
    for (std::size_t i = 0; i < segment_of_.size(); ++i) {
        const std::size_t s = segment_of_[i];
        if (s >= num_segments_) {
            throw IndexError("segment index " + std::to_string(s) + " at position " + std::to_string(i) +
                             " out of range for " + std::to_string(num_segments_) + " segments");
        }
        ++offsets_[s + 1];
    }
    for (std::size_t s = 0; s < num_segments_; ++s) offsets_[s + 1] += offsets_[s];
    order_.resize(segment_of_.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < segment_of_.size(); ++i) order_[cursor[segment_of_[i]]++] = i;
}

}  // namespace msh
