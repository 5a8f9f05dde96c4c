#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "paps/common.hpp"

namespace paps {

// Binary mask over an H×W grid, row-major.
struct BinaryMask {
    int h = 0, w = 0;
    std::vector<uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int h_, int w_) : h(h_), w(w_), data(static_cast<size_t>(h_) * w_, 0) {}

    uint8_t& at(int y, int x) { return data[static_cast<size_t>(y) * w + x]; }
    uint8_t at(int y, int x) const { return data[static_cast<size_t>(y) * w + x]; }
    size_t size() const { return data.size(); }

    int count() const;
    bool empty_mask() const { return count() == 0; }
    bool same_dims(const BinaryMask& o) const { return h == o.h && w == o.w; }

    bool is_subset_of(const BinaryMask& o) const;
    bool intersects(const BinaryMask& o) const;
    int intersection_count(const BinaryMask& o) const;
    BinaryMask set_union(const BinaryMask& o) const;
    BinaryMask set_difference(const BinaryMask& o) const;

    // Arithmetic-mean centroid of set pixels as (y, x). Requires a nonempty mask.
    std::pair<double, double> centroid() const;
};

double mask_iou(const BinaryMask& a, const BinaryMask& b);

// Run-length encoding over the row-major flattened mask: pairs of (start, length),
// starts strictly increasing, runs non-adjacent (canonical form).
std::vector<std::pair<uint32_t, uint32_t>> rle_encode(const BinaryMask& m);
BinaryMask rle_decode(const std::vector<std::pair<uint32_t, uint32_t>>& runs, int h, int w);

}  // namespace paps
