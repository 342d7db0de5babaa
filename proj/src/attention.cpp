#include "irattn/attention.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace irattn {

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

double unit_interval(std::uint64_t x) {
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

void scale_in_place(Tensor& t, float s) {
    for (float& v : t.values()) {
        v *= s;
    }
}

void add_in_place(Tensor& acc, const Tensor& t) {
    auto a = acc.values();
    auto b = t.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += b[i];
    }
}

}  // namespace

ProjectionWeights::ProjectionWeights(Tensor q, Tensor k, Tensor v, int head_count)
    : w_q(std::move(q)), w_k(std::move(k)), w_v(std::move(v)), heads(head_count) {
    if (w_q.rank() != 2 || w_k.rank() != 2 || w_v.rank() != 2) {
        throw DimensionError("projection matrices must be rank-2");
    }
    if (w_k.rows() != w_q.rows() || w_v.rows() != w_q.rows() || w_k.cols() != w_q.cols() ||
        w_v.cols() != w_q.cols()) {
        throw DimensionError("projection matrices must share one shape");
    }
    if (heads < 1) {
        throw ConfigurationError("head count must be at least 1");
    }
    if (w_q.cols() % static_cast<std::size_t>(heads) != 0) {
        throw ConfigurationError("model dim " + std::to_string(w_q.cols()) +
                                 " is not divisible by " + std::to_string(heads) + " heads");
    }
}

ProjectionWeights ProjectionWeights::identity(std::size_t channels, int head_count) {
    return ProjectionWeights(Tensor::identity(channels), Tensor::identity(channels),
                             Tensor::identity(channels), head_count);
}

ProjectedHeads project(const Tensor& feats, const ProjectionWeights& w) {
    if (feats.rank() != 3) {
        throw DimensionError("project expects a height x width x channels tensor");
    }
    if (feats.extent(2) != w.channels()) {
        throw DimensionError("feature channels " + std::to_string(feats.extent(2)) +
                             " do not match projection rows " + std::to_string(w.channels()));
    }
    const std::size_t tokens = feats.extent(0) * feats.extent(1);
    const Tensor flat = reshape(feats, {tokens, w.channels()});
    const Tensor q = matmul(flat, w.w_q);
    const Tensor k = matmul(flat, w.w_k);
    const Tensor v = matmul(flat, w.w_v);

    ProjectedHeads out;
    const std::size_t dh = w.head_dim();
    for (int h = 0; h < w.heads; ++h) {
        const std::size_t first = static_cast<std::size_t>(h) * dh;
        out.q.push_back(slice_cols(q, first, dh));
        out.k.push_back(slice_cols(k, first, dh));
        out.v.push_back(slice_cols(v, first, dh));
    }
    return out;
}

SubjectMask token_dropout(const SubjectMask& mask, double rate, std::uint64_t seed,
                          int subject_index) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
        throw ConfigurationError("dropout rate must lie in [0, 1]");
    }
    SubjectMask out = mask;
    std::size_t first_set = mask.bits.size();
    std::size_t survivors = 0;
    const std::uint64_t base = mix64(mix64(seed) ^ static_cast<std::uint64_t>(
                                                       static_cast<std::int64_t>(subject_index)));
    for (std::size_t p = 0; p < mask.bits.size(); ++p) {
        if (mask.bits[p] == 0) {
            continue;
        }
        if (first_set == mask.bits.size()) {
            first_set = p;
        }
        if (unit_interval(mix64(base ^ p)) < rate) {
            out.bits[p] = 0;
        } else {
            ++survivors;
        }
    }
    if (survivors == 0 && first_set < mask.bits.size()) {
        out.bits[first_set] = 1;
    }
    return out;
}

void validate_attention_problem(const AttentionProblem& p) {
    if (p.target_feats.rank() != 3) {
        throw DimensionError("target features must be height x width x channels");
    }
    const std::size_t h = p.target_feats.extent(0);
    const std::size_t w = p.target_feats.extent(1);
    const std::size_t c = p.target_feats.extent(2);
    if (p.target_masks.height() != h || p.target_masks.width() != w) {
        throw DimensionError("target masks do not match the feature grid");
    }
    if (c != p.weights.channels()) {
        throw DimensionError("feature channels do not match the projection weights");
    }
    if (p.ref_feats.size() != p.ref_masks.size()) {
        throw ConfigurationError("got " + std::to_string(p.ref_feats.size()) +
                                 " reference maps for " + std::to_string(p.ref_masks.size()) +
                                 " reference masks");
    }
    if (!p.ref_feats.empty() && p.ref_feats.size() != p.target_masks.subject_count()) {
        throw ConfigurationError("got " + std::to_string(p.ref_feats.size()) +
                                 " references for " +
                                 std::to_string(p.target_masks.subject_count()) + " subjects");
    }
    for (std::size_t i = 0; i < p.ref_feats.size(); ++i) {
        const Tensor& f = p.ref_feats[i];
        if (f.rank() != 3 || f.extent(0) != h || f.extent(1) != w || f.extent(2) != c) {
            throw DimensionError("reference " + std::to_string(i) +
                                 " does not match the target grid");
        }
        if (p.ref_masks[i].height != h || p.ref_masks[i].width != w) {
            throw DimensionError("reference mask " + std::to_string(i) +
                                 " does not match the target grid");
        }
    }
    if (!(p.dropout_rate >= 0.0 && p.dropout_rate <= 1.0)) {
        throw ConfigurationError("dropout rate must lie in [0, 1]");
    }
}

namespace {

struct EffectiveRefs {
    std::vector<Tensor> feats;
    std::vector<SubjectMask> masks;
};

// Dropout acts on the raw reference masks, so the surviving pattern is a
// property of the subject alone; repositioning then moves whatever survived.
EffectiveRefs effective_references(const AttentionProblem& p) {
    EffectiveRefs eff;
    eff.masks = p.ref_masks;
    if (p.dropout_rate > 0.0) {
        for (SubjectMask& m : eff.masks) {
            m = token_dropout(m, p.dropout_rate, p.seed, m.subject_id);
        }
    }
    if (p.variant == AttentionVariant::Reposition) {
        for (std::size_t i = 0; i < eff.masks.size(); ++i) {
            const RepositionTransform t(bbox_of(p.ref_masks[i]), bbox_of(p.target_masks.mask(i)));
            eff.feats.push_back(reposition_features(p.ref_feats[i], t));
            eff.masks[i] = reposition_mask(eff.masks[i], t);
        }
    } else {
        eff.feats = p.ref_feats;
    }
    return eff;
}

KeyLayout make_layout(std::span<const SubjectMask> ref_masks, std::size_t hw_ref,
                      std::size_t hw_target, std::size_t grid_h, std::size_t grid_w) {
    KeyLayout layout;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < ref_masks.size(); ++i) {
        layout.blocks.push_back({KeyBlock::Kind::Reference, static_cast<int>(i), offset, hw_ref,
                                 static_cast<const Bitmap&>(ref_masks[i])});
        offset += hw_ref;
    }
    layout.blocks.push_back(
        {KeyBlock::Kind::Target, -1, offset, hw_target, Bitmap(grid_h, grid_w, true)});
    layout.total_cols = offset + hw_target;
    return layout;
}

AttentionResult run_vanilla(const AttentionProblem& p) {
    const std::size_t h = p.target_feats.extent(0);
    const std::size_t w = p.target_feats.extent(1);
    const ProjectedHeads heads = project(p.target_feats, p.weights);
    const float s =
        p.scale_logits ? 1.0f / std::sqrt(static_cast<float>(p.weights.head_dim())) : 1.0f;

    std::vector<Tensor> outputs;
    std::vector<Tensor> maps;
    for (std::size_t hd = 0; hd < heads.q.size(); ++hd) {
        Tensor logits = matmul(heads.q[hd], transpose(heads.k[hd]));
        scale_in_place(logits, s);
        Tensor attn = softmax_rows(logits);
        outputs.push_back(matmul(attn, heads.v[hd]));
        maps.push_back(std::move(attn));
    }
    Tensor stacked = concat_cols(outputs);
    return {reshape(stacked, {h, w, p.weights.model_dim()}), std::move(maps),
            make_layout({}, 0, h * w, h, w)};
}

AttentionResult run_with_references(const AttentionProblem& p) {
    const std::size_t grid_h = p.target_feats.extent(0);
    const std::size_t grid_w = p.target_feats.extent(1);
    const std::size_t hw = grid_h * grid_w;
    const EffectiveRefs eff = effective_references(p);
    const std::size_t n = eff.masks.size();

    BinaryMatrix target_gate = p.variant == AttentionVariant::Mutual
                                   ? BinaryMatrix::ones(hw, hw)
                                   : build_isolation_mask(p.target_masks);
    // With no references the gate is just the target block.
    const BinaryMatrix gate = eff.masks.empty()
                                  ? target_gate
                                  : build_concat_mask(eff.masks, target_gate, p.target_masks);

    const ProjectedHeads target = project(p.target_feats, p.weights);
    std::vector<ProjectedHeads> refs;
    for (const Tensor& f : eff.feats) {
        refs.push_back(project(f, p.weights));
    }

    const float s =
        p.scale_logits ? 1.0f / std::sqrt(static_cast<float>(p.weights.head_dim())) : 1.0f;
    std::vector<Tensor> outputs;
    std::vector<Tensor> maps;
    for (std::size_t hd = 0; hd < target.q.size(); ++hd) {
        std::vector<Tensor> blocks;
        for (std::size_t i = 0; i < n; ++i) {
            blocks.push_back(matmul(target.q[hd], transpose(refs[i].k[hd])));
        }
        blocks.push_back(matmul(target.q[hd], transpose(target.k[hd])));
        Tensor logits = concat_cols(blocks);
        scale_in_place(logits, s);
        Tensor attn = masked_softmax_rows(logits, gate);

        std::vector<const Tensor*> value_blocks;
        for (std::size_t i = 0; i < n; ++i) {
            value_blocks.push_back(&refs[i].v[hd]);
        }
        value_blocks.push_back(&target.v[hd]);
        Tensor out = matmul(slice_cols(attn, 0, hw), *value_blocks[0]);
        for (std::size_t b = 1; b < value_blocks.size(); ++b) {
            add_in_place(out, matmul(slice_cols(attn, b * hw, hw), *value_blocks[b]));
        }
        outputs.push_back(std::move(out));
        maps.push_back(std::move(attn));
    }
    Tensor stacked = concat_cols(outputs);
    return {reshape(stacked, {grid_h, grid_w, p.weights.model_dim()}), std::move(maps),
            make_layout(eff.masks, hw, hw, grid_h, grid_w)};
}

}  // namespace

AttentionResult attend(const AttentionProblem& p) {
    validate_attention_problem(p);
    if (p.variant == AttentionVariant::Vanilla) {
        return run_vanilla(p);
    }
    return run_with_references(p);
}

namespace {

AttentionResult attend_as(const AttentionProblem& p, AttentionVariant expected,
                          const char* name) {
    if (p.variant != expected) {
        throw ConfigurationError(std::string(name) + " called with a different variant");
    }
    return attend(p);
}

}  // namespace

AttentionResult attend_vanilla(const AttentionProblem& p) {
    return attend_as(p, AttentionVariant::Vanilla, "attend_vanilla");
}

AttentionResult attend_mutual(const AttentionProblem& p) {
    return attend_as(p, AttentionVariant::Mutual, "attend_mutual");
}

AttentionResult attend_isolation(const AttentionProblem& p) {
    return attend_as(p, AttentionVariant::Isolation, "attend_isolation");
}

AttentionResult attend_reposition(const AttentionProblem& p) {
    return attend_as(p, AttentionVariant::Reposition, "attend_reposition");
}

}  // namespace irattn
