#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "irattn/masks.hpp"
#include "irattn/tensor.hpp"

namespace irattn {

// Average attention weight per key token, measured from one subject's query
// rows into each key group. Groups with no keys (or no queries) report 0.
struct SubjectAttraction {
    int subject_id = 0;
    double avg_self = 0.0;
    double avg_other_subjects = 0.0;
    double avg_background = 0.0;
};

struct AttractionReport {
    std::vector<SubjectAttraction> subjects;
    double aggregate_other_subjects = 0.0;  // unweighted mean over subjects
    double aggregate_background = 0.0;
};

// attn must be a square tokens x tokens map over the grid described by
// `set`. avg_* is total weight into the group divided by (group key count
// times subject query count), so a uniform map yields identical averages
// everywhere.
AttractionReport measure_attraction(const Tensor& attn, const MaskSet& set);

struct DistanceBin {
    std::size_t distance = 0;
    double mean_response = 0.0;
    std::size_t pair_count = 0;
};

// Mean attention per Manhattan query-key distance, pooled over every map.
struct DistanceCurve {
    std::vector<DistanceBin> bins;
    std::size_t height = 0;
    std::size_t width = 0;
    double margin = 0.0;
};

// Tokens within ceil(margin * height) rows or ceil(margin * width) columns
// of an edge are excluded as both queries and keys. Each bin averages the
// responses of every surviving pair at that distance, unweighted, across
// all maps; self pairs land in the distance-0 bin.
DistanceCurve distance_curve(std::span<const Tensor> maps, std::size_t height, std::size_t width,
                             double margin);

}  // namespace irattn
