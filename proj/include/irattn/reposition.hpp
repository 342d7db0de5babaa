#pragma once

#include <cstddef>

#include "irattn/masks.hpp"
#include "irattn/tensor.hpp"

namespace irattn {

struct BoundingBox {
    std::size_t top = 0;
    std::size_t left = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

// Nearest-neighbor resampling plan from one box to another. The vertical and
// horizontal scales are independent, so the aspect ratio may change.
struct RepositionTransform {
    BoundingBox src;
    BoundingBox dst;
    double scale_y = 0.0;
    double scale_x = 0.0;

    RepositionTransform(BoundingBox src_box, BoundingBox dst_box);
};

// Tightest box covering every set bit. Empty grids have no box.
BoundingBox bbox_of(const Bitmap& grid);

// Resample the feature content of t.src into t.dst on a same-size output
// grid. Destination cell (y, x) takes the source cell at
// src.top + floor((y - dst.top + 0.5) / scale_y) (likewise for x), clamped
// to the source box. Every cell outside t.dst is exactly zero.
Tensor reposition_features(const Tensor& feats, const RepositionTransform& t);

// Same sampling rule applied to mask bits. Raises DegenerateSubjectError
// when no bit survives.
SubjectMask reposition_mask(const SubjectMask& mask, const RepositionTransform& t);

}  // namespace irattn
