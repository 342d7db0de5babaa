#include "irattn/diagnostics.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace irattn {

AttractionReport measure_attraction(const Tensor& attn, const MaskSet& set) {
    const std::size_t hw = set.area();
    if (attn.rank() != 2 || attn.rows() != hw || attn.cols() != hw) {
        throw DimensionError("attraction needs a " + std::to_string(hw) + "x" +
                             std::to_string(hw) + " map to match the masks");
    }
    const std::vector<int> labels = set.label_grid();
    const std::size_t n = set.subject_count();

    std::vector<std::size_t> subject_tokens(n, 0);
    std::size_t background_tokens = 0;
    for (int l : labels) {
        if (l == 0) {
            ++background_tokens;
        } else {
            ++subject_tokens[static_cast<std::size_t>(l) - 1];
        }
    }

    AttractionReport report;
    for (std::size_t i = 0; i < n; ++i) {
        double sum_self = 0.0, sum_other = 0.0, sum_bg = 0.0;
        for (std::size_t p = 0; p < hw; ++p) {
            if (labels[p] != static_cast<int>(i) + 1) {
                continue;
            }
            for (std::size_t q = 0; q < hw; ++q) {
                const double v = attn.at(p, q);
                if (labels[q] == 0) {
                    sum_bg += v;
                } else if (labels[q] == static_cast<int>(i) + 1) {
                    sum_self += v;
                } else {
                    sum_other += v;
                }
            }
        }
        const std::size_t queries = subject_tokens[i];
        std::size_t other_keys = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                other_keys += subject_tokens[j];
            }
        }
        SubjectAttraction row;
        row.subject_id = set.mask(i).subject_id;
        const auto avg = [queries](double sum, std::size_t keys) {
            return (queries == 0 || keys == 0) ? 0.0
                                               : sum / (static_cast<double>(keys) *
                                                        static_cast<double>(queries));
        };
        row.avg_self = avg(sum_self, subject_tokens[i]);
        row.avg_other_subjects = avg(sum_other, other_keys);
        row.avg_background = avg(sum_bg, background_tokens);
        report.subjects.push_back(row);
    }
    if (n > 0) {
        for (const SubjectAttraction& row : report.subjects) {
            report.aggregate_other_subjects += row.avg_other_subjects;
            report.aggregate_background += row.avg_background;
        }
        report.aggregate_other_subjects /= static_cast<double>(n);
        report.aggregate_background /= static_cast<double>(n);
    }
    return report;
}

DistanceCurve distance_curve(std::span<const Tensor> maps, std::size_t height, std::size_t width,
                             double margin) {
    if (maps.empty()) {
        throw EmptyInputError("distance_curve needs at least one map");
    }
    if (!(margin >= 0.0 && margin < 0.5)) {
        throw ConfigurationError("margin must lie in [0, 0.5)");
    }
    const std::size_t hw = height * width;
    if (hw == 0) {
        throw DimensionError("grid extents must be positive");
    }
    for (const Tensor& m : maps) {
        if (m.rank() != 2 || m.rows() != hw || m.cols() != hw) {
            throw DimensionError("every map must be " + std::to_string(hw) + "x" +
                                 std::to_string(hw));
        }
    }
    // The epsilon absorbs binary rounding of the margin, so 0.05 * 20 still
    // excludes exactly one row.
    const std::size_t edge_y =
        static_cast<std::size_t>(std::ceil(margin * static_cast<double>(height) - 1e-9));
    const std::size_t edge_x =
        static_cast<std::size_t>(std::ceil(margin * static_cast<double>(width) - 1e-9));

    std::vector<std::size_t> included;
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            if (y >= edge_y && y + edge_y < height && x >= edge_x && x + edge_x < width) {
                included.push_back(y * width + x);
            }
        }
    }

    const std::size_t max_d = (height - 1) + (width - 1);
    std::vector<double> sums(max_d + 1, 0.0);
    std::vector<std::size_t> counts(max_d + 1, 0);
    for (const Tensor& m : maps) {
        for (std::size_t p : included) {
            const std::ptrdiff_t py = static_cast<std::ptrdiff_t>(p / width);
            const std::ptrdiff_t px = static_cast<std::ptrdiff_t>(p % width);
            for (std::size_t q : included) {
                const std::ptrdiff_t qy = static_cast<std::ptrdiff_t>(q / width);
                const std::ptrdiff_t qx = static_cast<std::ptrdiff_t>(q % width);
                const std::size_t dist =
                    static_cast<std::size_t>(std::abs(py - qy) + std::abs(px - qx));
                sums[dist] += m.at(p, q);
                counts[dist] += 1;
            }
        }
    }

    DistanceCurve curve;
    curve.height = height;
    curve.width = width;
    curve.margin = margin;
    for (std::size_t dist = 0; dist <= max_d; ++dist) {
        if (counts[dist] > 0) {
            curve.bins.push_back({dist, sums[dist] / static_cast<double>(counts[dist]),
                                  counts[dist]});
        }
    }
    return curve;
}

}  // namespace irattn
