#include "paps/mask.hpp"

#include <string>

namespace paps {

int BinaryMask::count() const {
    int n = 0;
    for (uint8_t b : data) n += b != 0;
    return n;
}

bool BinaryMask::is_subset_of(const BinaryMask& o) const {
    for (size_t i = 0; i < data.size(); ++i)
        if (data[i] && !o.data[i]) return false;
    return true;
}

bool BinaryMask::intersects(const BinaryMask& o) const {
    for (size_t i = 0; i < data.size(); ++i)
        if (data[i] && o.data[i]) return true;
    return false;
}

int BinaryMask::intersection_count(const BinaryMask& o) const {
    int n = 0;
    for (size_t i = 0; i < data.size(); ++i) n += (data[i] && o.data[i]);
    return n;
}

BinaryMask BinaryMask::set_union(const BinaryMask& o) const {
    BinaryMask r(h, w);
    for (size_t i = 0; i < data.size(); ++i) r.data[i] = data[i] || o.data[i];
    return r;
}

BinaryMask BinaryMask::set_difference(const BinaryMask& o) const {
    BinaryMask r(h, w);
    for (size_t i = 0; i < data.size(); ++i) r.data[i] = data[i] && !o.data[i];
    return r;
}

std::pair<double, double> BinaryMask::centroid() const {
    double sy = 0.0, sx = 0.0;
    long n = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (at(y, x)) {
                sy += y;
                sx += x;
                ++n;
            }
    if (n == 0) throw InvariantError("centroid of empty mask");
    return {sy / n, sx / n};
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
    int inter = 0, uni = 0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        bool pa = a.data[i] != 0, pb = b.data[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
}

std::vector<std::pair<uint32_t, uint32_t>> rle_encode(const BinaryMask& m) {
    std::vector<std::pair<uint32_t, uint32_t>> runs;
    size_t n = m.data.size();
    size_t i = 0;
    while (i < n) {
        if (m.data[i]) {
            size_t start = i;
            while (i < n && m.data[i]) ++i;
            runs.emplace_back(static_cast<uint32_t>(start), static_cast<uint32_t>(i - start));
        } else {
            ++i;
        }
    }
    return runs;
}

BinaryMask rle_decode(const std::vector<std::pair<uint32_t, uint32_t>>& runs, int h, int w) {
    BinaryMask m(h, w);
    size_t n = m.data.size();
    uint64_t prev_end = 0;
    bool first = true;
    for (const auto& [start, len] : runs) {
        if (len == 0) throw ParseError("mask run with zero length");
        if (!first && start <= prev_end) throw ParseError("mask runs not strictly increasing");
        uint64_t end = static_cast<uint64_t>(start) + len;
        if (end > n) throw ParseError("mask run exceeds mask extent (start " + std::to_string(start) +
                                      ", length " + std::to_string(len) + ")");
        for (uint64_t i = start; i < end; ++i) m.data[i] = 1;
        prev_end = end;
        first = false;
    }
    return m;
}

}  // namespace paps
