#include <cstddef>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "irattn/attention.hpp"
#include "irattn/diagnostics.hpp"
#include "irattn/io.hpp"

namespace {

using irattn::AttentionProblem;
using irattn::AttentionResult;
using irattn::AttentionVariant;
using irattn::Bitmap;
using irattn::MaskSet;
using irattn::SubjectMask;
using irattn::Tensor;

std::vector<std::string> split_commas(const std::string& joined) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= joined.size()) {
        const std::size_t comma = joined.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(joined.substr(start));
            break;
        }
        parts.push_back(joined.substr(start, comma - start));
        start = comma + 1;
    }
    return parts;
}

std::vector<SubjectMask> load_subject_masks(const std::string& joined) {
    std::vector<SubjectMask> masks;
    int id = 1;
    for (const std::string& path : split_commas(joined)) {
        const Bitmap grid = irattn::read_mask(path);
        SubjectMask m(grid.height, grid.width, id++);
        m.bits = grid.bits;
        masks.push_back(std::move(m));
    }
    return masks;
}

struct AttendOptions {
    std::string variant = "vanilla";
    std::string target;
    std::string refs;
    std::string target_masks;
    std::string ref_masks;
    std::string weights;
    std::string out;
    std::string dump_attn;
    int heads = 1;
    double dropout = 0.0;
    std::uint64_t seed = 0;
    bool no_logit_scale = false;
};

irattn::ProjectionWeights load_weights(const AttendOptions& opt, std::size_t channels) {
    if (opt.weights.empty()) {
        return irattn::ProjectionWeights::identity(channels, opt.heads);
    }
    const Tensor stacked = irattn::read_tensor(opt.weights);
    if (stacked.rank() != 3 || stacked.extent(0) != 3) {
        throw irattn::DimensionError("weights file must hold a 3 x channels x dim tensor");
    }
    const std::size_t c = stacked.extent(1), d = stacked.extent(2);
    std::vector<Tensor> mats;
    for (std::size_t s = 0; s < 3; ++s) {
        Tensor m({c, d});
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                m.at(i, j) = stacked.at(s, i, j);
            }
        }
        mats.push_back(std::move(m));
    }
    return irattn::ProjectionWeights(std::move(mats[0]), std::move(mats[1]), std::move(mats[2]),
                                     opt.heads);
}

AttentionVariant parse_variant(const std::string& name) {
    if (name == "vanilla") return AttentionVariant::Vanilla;
    if (name == "mutual") return AttentionVariant::Mutual;
    if (name == "isolation") return AttentionVariant::Isolation;
    return AttentionVariant::Reposition;
}

int run_attend(const AttendOptions& opt, bool use_oracle) {
    const Tensor target = irattn::read_tensor(opt.target);
    if (target.rank() != 3) {
        throw irattn::DimensionError("target tensor must be height x width x channels");
    }
    const std::size_t h = target.extent(0), w = target.extent(1);

    std::vector<SubjectMask> target_masks;
    if (!opt.target_masks.empty()) {
        target_masks = load_subject_masks(opt.target_masks);
    }
    MaskSet set = target_masks.empty() ? MaskSet(h, w, {}) : irattn::disjointify(target_masks);

    std::vector<Tensor> ref_feats;
    if (!opt.refs.empty()) {
        for (const std::string& path : split_commas(opt.refs)) {
            ref_feats.push_back(irattn::read_tensor(path));
        }
    }
    std::vector<SubjectMask> ref_masks;
    if (!opt.ref_masks.empty()) {
        ref_masks = load_subject_masks(opt.ref_masks);
    }

    irattn::ProjectionWeights weights = load_weights(opt, target.extent(2));
    AttentionProblem problem{std::move(target),
                             std::move(ref_feats),
                             std::move(set),
                             std::move(ref_masks),
                             std::move(weights),
                             parse_variant(opt.variant),
                             opt.dropout,
                             opt.seed,
                             !opt.no_logit_scale};

    const AttentionResult result = use_oracle ? irattn::attend_oracle(problem)
                                              : irattn::attend(problem);
    irattn::write_tensor(result.output, opt.out);

    if (!opt.dump_attn.empty()) {
        const std::size_t rows = result.attention[0].rows();
        const std::size_t cols = result.attention[0].cols();
        Tensor stacked({result.attention.size(), rows, cols});
        std::size_t pos = 0;
        for (const Tensor& map : result.attention) {
            for (float v : map.values()) {
                stacked.values()[pos++] = v;
            }
        }
        irattn::write_tensor(stacked, opt.dump_attn);
    }
    return 0;
}

// Accepts a plain square map, or a stack holding exactly one.
Tensor load_single_map(const std::string& path) {
    Tensor t = irattn::read_tensor(path);
    if (t.rank() == 3 && t.extent(0) == 1) {
        return irattn::reshape(t, {t.extent(1), t.extent(2)});
    }
    return t;
}

int run_attraction(const std::string& attn_path, const std::string& masks_joined,
                   const std::string& json_path) {
    const Tensor attn = load_single_map(attn_path);
    const MaskSet set = irattn::disjointify(load_subject_masks(masks_joined));
    const irattn::AttractionReport report = irattn::measure_attraction(attn, set);

    nlohmann::json doc;
    doc["subjects"] = nlohmann::json::array();
    for (const irattn::SubjectAttraction& row : report.subjects) {
        doc["subjects"].push_back({{"id", row.subject_id},
                                   {"avg_other_subjects", row.avg_other_subjects * 1e3},
                                   {"avg_background", row.avg_background * 1e3}});
    }
    doc["aggregate"] = {{"avg_other_subjects", report.aggregate_other_subjects * 1e3},
                        {"avg_background", report.aggregate_background * 1e3}};
    doc["scale"] = "1e-3";

    std::ofstream out(json_path, std::ios::trunc);
    if (!out) {
        throw irattn::Error("cannot open " + json_path + " for writing");
    }
    out << doc.dump(2) << "\n";
    return 0;
}

int run_curve(const std::string& attn_joined, std::size_t height, std::size_t width,
              double margin, const std::string& csv_path) {
    std::vector<Tensor> maps;
    for (const std::string& path : split_commas(attn_joined)) {
        Tensor t = irattn::read_tensor(path);
        if (t.rank() == 3) {
            for (std::size_t s = 0; s < t.extent(0); ++s) {
                Tensor map({t.extent(1), t.extent(2)});
                const std::size_t plane = t.extent(1) * t.extent(2);
                for (std::size_t i = 0; i < plane; ++i) {
                    map.values()[i] = t.values()[s * plane + i];
                }
                maps.push_back(std::move(map));
            }
        } else {
            maps.push_back(std::move(t));
        }
    }
    const irattn::DistanceCurve curve = irattn::distance_curve(maps, height, width, margin);

    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) {
        throw irattn::Error("cannot open " + csv_path + " for writing");
    }
    out << "distance,mean_response,pair_count\n";
    char line[96];
    for (const irattn::DistanceBin& bin : curve.bins) {
        std::snprintf(line, sizeof(line), "%zu,%.10g,%zu\n", bin.distance, bin.mean_response,
                      bin.pair_count);
        out << line;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Subject-aware attention evaluator and attention-map diagnostics"};
    app.require_subcommand(1);

    AttendOptions attend_opt;
    const auto add_attend_flags = [&](CLI::App* cmd) {
        cmd->add_option("--variant", attend_opt.variant)
            ->check(CLI::IsMember({"vanilla", "mutual", "isolation", "reposition"}))
            ->capture_default_str();
        cmd->add_option("--target", attend_opt.target, "target feature tensor")->required();
        cmd->add_option("--refs", attend_opt.refs, "reference tensors, comma separated");
        cmd->add_option("--target-masks", attend_opt.target_masks,
                        "subject masks on the target grid, comma separated");
        cmd->add_option("--ref-masks", attend_opt.ref_masks,
                        "reference key masks, comma separated");
        cmd->add_option("--weights", attend_opt.weights,
                        "projection tensor (3 x channels x dim); identity when omitted");
        cmd->add_option("--heads", attend_opt.heads)->check(CLI::PositiveNumber);
        cmd->add_option("--dropout", attend_opt.dropout)->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--seed", attend_opt.seed);
        cmd->add_flag("--no-logit-scale", attend_opt.no_logit_scale,
                      "skip the 1/sqrt(head_dim) logit scale");
        cmd->add_option("--out", attend_opt.out, "output tensor path")->required();
        cmd->add_option("--dump-attn", attend_opt.dump_attn,
                        "also write the per-head attention maps");
    };
    CLI::App* attend_cmd = app.add_subcommand("attend", "run the attention engine");
    add_attend_flags(attend_cmd);
    CLI::App* oracle_cmd = app.add_subcommand("oracle", "run the scalar reference path");
    add_attend_flags(oracle_cmd);

    CLI::App* diag_cmd = app.add_subcommand("diag", "attention-map diagnostics");
    diag_cmd->require_subcommand(1);

    std::string diag_attn, diag_masks, diag_json;
    CLI::App* attraction_cmd = diag_cmd->add_subcommand(
        "attraction", "per-subject average attention into other subjects and background");
    attraction_cmd->add_option("--attn", diag_attn, "square attention map")->required();
    attraction_cmd->add_option("--masks", diag_masks, "subject masks, comma separated")
        ->required();
    attraction_cmd->add_option("--json", diag_json, "report path")->required();

    std::string curve_attn, curve_csv;
    std::size_t curve_h = 0, curve_w = 0;
    double curve_margin = 0.05;
    CLI::App* curve_cmd =
        diag_cmd->add_subcommand("distance-curve", "mean response per query-key distance");
    curve_cmd->add_option("--attn", curve_attn, "attention maps, comma separated")->required();
    curve_cmd->add_option("--height", curve_h)->required()->check(CLI::PositiveNumber);
    curve_cmd->add_option("--width", curve_w)->required()->check(CLI::PositiveNumber);
    curve_cmd->add_option("--margin", curve_margin)->capture_default_str();
    curve_cmd->add_option("--csv", curve_csv, "curve path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (attend_cmd->parsed() || oracle_cmd->parsed()) {
            const std::size_t n_refs =
                attend_opt.refs.empty() ? 0 : split_commas(attend_opt.refs).size();
            const std::size_t n_tmasks =
                attend_opt.target_masks.empty() ? 0
                                                : split_commas(attend_opt.target_masks).size();
            const std::size_t n_rmasks =
                attend_opt.ref_masks.empty() ? 0 : split_commas(attend_opt.ref_masks).size();
            if (n_refs != n_rmasks) {
                std::fprintf(stderr, "error: --refs lists %zu paths but --ref-masks lists %zu\n",
                             n_refs, n_rmasks);
                return 2;
            }
            if (n_refs != 0 && n_refs != n_tmasks) {
                std::fprintf(stderr,
                             "error: --refs lists %zu paths but --target-masks lists %zu\n",
                             n_refs, n_tmasks);
                return 2;
            }
            return run_attend(attend_opt, oracle_cmd->parsed());
        }
        if (attraction_cmd->parsed()) {
            return run_attraction(diag_attn, diag_masks, diag_json);
        }
        return run_curve(curve_attn, curve_h, curve_w, curve_margin, curve_csv);
    } catch (const irattn::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const irattn::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
