#include "irattn/masks.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace irattn {

Bitmap::Bitmap(std::size_t h, std::size_t w, bool fill)
    : height(h), width(w), bits(h * w, fill ? 1 : 0) {
    if (h == 0 || w == 0) {
        throw DimensionError("bitmap extents must be positive");
    }
}

bool Bitmap::get(std::size_t y, std::size_t x) const {
    if (y >= height || x >= width) {
        throw DimensionError("bitmap index out of range");
    }
    return bits[y * width + x] != 0;
}

void Bitmap::set(std::size_t y, std::size_t x, bool value) {
    if (y >= height || x >= width) {
        throw DimensionError("bitmap index out of range");
    }
    bits[y * width + x] = value ? 1 : 0;
}

std::size_t Bitmap::count() const {
    std::size_t n = 0;
    for (std::uint8_t b : bits) {
        n += b != 0;
    }
    return n;
}

MaskSet::MaskSet(std::size_t height, std::size_t width, std::vector<SubjectMask> masks)
    : height_(height), width_(width), masks_(std::move(masks)) {
    if (height_ == 0 || width_ == 0) {
        throw DimensionError("mask set extents must be positive");
    }
    std::vector<int> seen;
    std::vector<std::uint8_t> claimed(area(), 0);
    for (const SubjectMask& m : masks_) {
        if (m.height != height_ || m.width != width_) {
            throw DimensionError("subject " + std::to_string(m.subject_id) +
                                 " does not match the set resolution");
        }
        if (m.subject_id < 1) {
            throw ConfigurationError("subject ids must be positive");
        }
        if (std::find(seen.begin(), seen.end(), m.subject_id) != seen.end()) {
            throw ConfigurationError("duplicate subject id " + std::to_string(m.subject_id));
        }
        seen.push_back(m.subject_id);
        if (m.count() == 0) {
            throw DegenerateSubjectError("subject " + std::to_string(m.subject_id) +
                                         " has an empty mask");
        }
        for (std::size_t p = 0; p < area(); ++p) {
            if (m.bits[p] == 0) {
                continue;
            }
            if (claimed[p]) {
                throw ConfigurationError("subject masks overlap at token " + std::to_string(p));
            }
            claimed[p] = 1;
        }
    }
}

const SubjectMask& MaskSet::mask(std::size_t i) const {
    if (i >= masks_.size()) {
        throw DimensionError("subject position out of range");
    }
    return masks_[i];
}

std::vector<int> MaskSet::label_grid() const {
    std::vector<int> labels(area(), 0);
    for (std::size_t i = 0; i < masks_.size(); ++i) {
        for (std::size_t p = 0; p < area(); ++p) {
            if (masks_[i].bits[p]) {
                labels[p] = static_cast<int>(i) + 1;
            }
        }
    }
    return labels;
}

SubjectMask downsample_mask(const SubjectMask& mask, std::size_t out_h, std::size_t out_w) {
    if (out_h == 0 || out_w == 0 || mask.height % out_h != 0 || mask.width % out_w != 0) {
        throw ResolutionError("cannot downsample " + std::to_string(mask.height) + "x" +
                              std::to_string(mask.width) + " to " + std::to_string(out_h) + "x" +
                              std::to_string(out_w));
    }
    if (mask.count() == 0) {
        throw DegenerateSubjectError("subject " + std::to_string(mask.subject_id) +
                                     " has an empty mask");
    }
    const std::size_t fy = mask.height / out_h;
    const std::size_t fx = mask.width / out_w;
    const std::size_t cell_area = fy * fx;

    SubjectMask out(out_h, out_w, mask.subject_id);
    std::vector<std::size_t> coverage(out_h * out_w, 0);
    for (std::size_t cy = 0; cy < out_h; ++cy) {
        for (std::size_t cx = 0; cx < out_w; ++cx) {
            std::size_t n = 0;
            for (std::size_t y = cy * fy; y < (cy + 1) * fy; ++y) {
                for (std::size_t x = cx * fx; x < (cx + 1) * fx; ++x) {
                    n += mask.get(y, x);
                }
            }
            coverage[cy * out_w + cx] = n;
            // Strict majority: coverage must exceed half the cell.
            out.set(cy, cx, 2 * n > cell_area);
        }
    }
    if (out.count() == 0) {
        std::size_t best = 0;
        for (std::size_t p = 1; p < coverage.size(); ++p) {
            if (coverage[p] > coverage[best]) {
                best = p;
            }
        }
        out.bits[best] = 1;
    }
    return out;
}

MaskSet disjointify(std::span<const SubjectMask> masks) {
    if (masks.empty()) {
        throw EmptyInputError("disjointify needs at least one mask");
    }
    const std::size_t h = masks[0].height, w = masks[0].width;
    for (const SubjectMask& m : masks) {
        if (m.height != h || m.width != w) {
            throw DimensionError("masks passed to disjointify differ in resolution");
        }
    }
    std::vector<std::uint8_t> claimed(h * w, 0);
    std::vector<SubjectMask> out(masks.begin(), masks.end());
    for (SubjectMask& m : out) {
        std::size_t kept = 0;
        for (std::size_t p = 0; p < h * w; ++p) {
            if (m.bits[p] == 0) {
                continue;
            }
            if (claimed[p]) {
                m.bits[p] = 0;
            } else {
                claimed[p] = 1;
                ++kept;
            }
        }
        if (kept == 0) {
            throw DegenerateSubjectError("subject " + std::to_string(m.subject_id) +
                                         " lost every pixel to earlier masks");
        }
    }
    return MaskSet(h, w, std::move(out));
}

BinaryMatrix build_isolation_mask(const MaskSet& set) {
    const std::size_t hw = set.area();
    const std::vector<int> labels = set.label_grid();
    BinaryMatrix gate = BinaryMatrix::ones(hw, hw);
    for (std::size_t p = 0; p < hw; ++p) {
        if (labels[p] == 0) {
            continue;
        }
        for (std::size_t q = 0; q < hw; ++q) {
            if (labels[q] != 0 && labels[q] != labels[p]) {
                gate.set(p, q, false);
            }
        }
    }
    return gate;
}

BinaryMatrix build_concat_mask(std::span<const SubjectMask> ref_masks, const BinaryMatrix& iso,
                               const MaskSet& query_set) {
    const std::size_t n = query_set.subject_count();
    if (ref_masks.size() != n) {
        throw ConfigurationError("got " + std::to_string(ref_masks.size()) +
                                 " reference masks for " + std::to_string(n) + " subjects");
    }
    const std::size_t hw = query_set.area();
    if (iso.rows() != hw || iso.cols() != hw) {
        throw DimensionError("target gate does not match the query grid");
    }
    std::size_t hw_ref = 0;
    for (const SubjectMask& m : ref_masks) {
        if (hw_ref == 0) {
            hw_ref = m.area();
        } else if (m.area() != hw_ref || m.height != ref_masks[0].height) {
            throw DimensionError("reference masks differ in resolution");
        }
    }

    const std::vector<int> labels = query_set.label_grid();
    BinaryMatrix gate(hw, n * hw_ref + hw, false);
    for (std::size_t p = 0; p < hw; ++p) {
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[p] != static_cast<int>(i) + 1) {
                continue;
            }
            for (std::size_t q = 0; q < hw_ref; ++q) {
                if (ref_masks[i].bits[q]) {
                    gate.set(p, i * hw_ref + q, true);
                }
            }
        }
        for (std::size_t q = 0; q < hw; ++q) {
            gate.set(p, n * hw_ref + q, iso.get(p, q));
        }
    }
    return gate;
}

Bitmap background_of(const MaskSet& set) {
    Bitmap bg(set.height(), set.width(), true);
    for (const SubjectMask& m : set.masks()) {
        for (std::size_t p = 0; p < bg.bits.size(); ++p) {
            if (m.bits[p]) {
                bg.bits[p] = 0;
            }
        }
    }
    return bg;
}

}  // namespace irattn
