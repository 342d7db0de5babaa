#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "irattn/errors.hpp"
#include "irattn/tensor.hpp"

namespace irattn {

// Row-major bit grid. Unlike SubjectMask it carries no identity and may be
// empty, which is what background regions and intermediate results need.
struct Bitmap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bits;

    Bitmap() = default;
    Bitmap(std::size_t h, std::size_t w, bool fill = false);

    bool get(std::size_t y, std::size_t x) const;
    void set(std::size_t y, std::size_t x, bool value);
    std::size_t count() const;
    std::size_t area() const noexcept { return height * width; }
};

// One subject's occupancy grid. Operations that require occupancy
// (MaskSet membership, downsampling, bounding boxes) reject empty masks.
struct SubjectMask : Bitmap {
    int subject_id = 0;

    SubjectMask() = default;
    SubjectMask(std::size_t h, std::size_t w, int id) : Bitmap(h, w), subject_id(id) {}
};

// Ordered collection of pairwise-disjoint, non-empty subject masks sharing
// one resolution. Pixels claimed by no subject form the background.
class MaskSet {
public:
    MaskSet(std::size_t height, std::size_t width, std::vector<SubjectMask> masks);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t area() const noexcept { return height_ * width_; }
    std::size_t subject_count() const noexcept { return masks_.size(); }
    const SubjectMask& mask(std::size_t i) const;
    std::span<const SubjectMask> masks() const noexcept { return masks_; }

    // 0 for background, i + 1 for the subject at position i.
    std::vector<int> label_grid() const;

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<SubjectMask> masks_;
};

// Reduce a mask to out_h x out_w, which must divide the source resolution
// evenly. A cell is set when strictly more than half its source pixels are
// set; if that leaves nothing, the cell with the highest coverage is set
// instead (ties go to the smallest row-major index).
SubjectMask downsample_mask(const SubjectMask& mask, std::size_t out_h, std::size_t out_w);

// Resolve overlaps by list order: the earliest mask keeps every contested
// pixel. A mask emptied by the removal raises DegenerateSubjectError.
MaskSet disjointify(std::span<const SubjectMask> masks);

// Square gate over flattened target tokens. Entry (p, q) is 0 exactly when
// p and q belong to two different subjects; rows and columns touching the
// background stay all-ones.
BinaryMatrix build_isolation_mask(const MaskSet& set);

// Gate over [reference block per subject | target block]. In reference
// block i, query p may attend key q only when p lies in query subject i and
// q is set in ref_masks[i]. The target block is taken from `iso` verbatim.
BinaryMatrix build_concat_mask(std::span<const SubjectMask> ref_masks, const BinaryMatrix& iso,
                               const MaskSet& query_set);

// Complement of the union of all subject masks.
Bitmap background_of(const MaskSet& set);

}  // namespace irattn
