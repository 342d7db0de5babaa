#include "irattn/reposition.hpp"

#include <string>

namespace irattn {

namespace {

void check_box(const BoundingBox& box, std::size_t grid_h, std::size_t grid_w,
               const char* which) {
    if (box.height == 0 || box.width == 0) {
        throw GeometryError(std::string(which) + " box has a zero extent");
    }
    if (box.top + box.height > grid_h || box.left + box.width > grid_w) {
        throw GeometryError(std::string(which) + " box does not fit the grid");
    }
}

// floor((rel + 0.5) * src_extent / dst_extent) evaluated exactly in
// integers, then clamped to the source box.
std::size_t source_offset(std::size_t rel, std::size_t src_extent, std::size_t dst_extent) {
    std::size_t idx = ((2 * rel + 1) * src_extent) / (2 * dst_extent);
    if (idx >= src_extent) {
        idx = src_extent - 1;
    }
    return idx;
}

}  // namespace

RepositionTransform::RepositionTransform(BoundingBox src_box, BoundingBox dst_box)
    : src(src_box), dst(dst_box) {
    if (src.height == 0 || src.width == 0 || dst.height == 0 || dst.width == 0) {
        throw GeometryError("boxes must have positive extents");
    }
    scale_y = static_cast<double>(dst.height) / static_cast<double>(src.height);
    scale_x = static_cast<double>(dst.width) / static_cast<double>(src.width);
}

BoundingBox bbox_of(const Bitmap& grid) {
    std::size_t top = grid.height, bottom = 0, left = grid.width, right = 0;
    bool any = false;
    for (std::size_t y = 0; y < grid.height; ++y) {
        for (std::size_t x = 0; x < grid.width; ++x) {
            if (!grid.get(y, x)) {
                continue;
            }
            any = true;
            top = std::min(top, y);
            bottom = std::max(bottom, y);
            left = std::min(left, x);
            right = std::max(right, x);
        }
    }
    if (!any) {
        throw DegenerateSubjectError("cannot take the bounding box of an empty mask");
    }
    return {top, left, bottom - top + 1, right - left + 1};
}

Tensor reposition_features(const Tensor& feats, const RepositionTransform& t) {
    if (feats.rank() != 3) {
        throw DimensionError("reposition_features expects a height x width x channels tensor");
    }
    const std::size_t h = feats.extent(0), w = feats.extent(1), c = feats.extent(2);
    check_box(t.src, h, w, "source");
    check_box(t.dst, h, w, "destination");

    Tensor out({h, w, c});
    for (std::size_t y = t.dst.top; y < t.dst.top + t.dst.height; ++y) {
        const std::size_t sy = t.src.top + source_offset(y - t.dst.top, t.src.height, t.dst.height);
        for (std::size_t x = t.dst.left; x < t.dst.left + t.dst.width; ++x) {
            const std::size_t sx =
                t.src.left + source_offset(x - t.dst.left, t.src.width, t.dst.width);
            for (std::size_t ch = 0; ch < c; ++ch) {
                out.at(y, x, ch) = feats.at(sy, sx, ch);
            }
        }
    }
    return out;
}

SubjectMask reposition_mask(const SubjectMask& mask, const RepositionTransform& t) {
    check_box(t.src, mask.height, mask.width, "source");
    check_box(t.dst, mask.height, mask.width, "destination");

    SubjectMask out(mask.height, mask.width, mask.subject_id);
    for (std::size_t y = t.dst.top; y < t.dst.top + t.dst.height; ++y) {
        const std::size_t sy = t.src.top + source_offset(y - t.dst.top, t.src.height, t.dst.height);
        for (std::size_t x = t.dst.left; x < t.dst.left + t.dst.width; ++x) {
            const std::size_t sx =
                t.src.left + source_offset(x - t.dst.left, t.src.width, t.dst.width);
            out.set(y, x, mask.get(sy, sx));
        }
    }
    if (out.count() == 0) {
        throw DegenerateSubjectError("subject " + std::to_string(mask.subject_id) +
                                     " vanished under repositioning");
    }
    return out;
}

}  // namespace irattn
