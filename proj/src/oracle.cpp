#include <cmath>
#include <vector>

#include "irattn/attention.hpp"

// Reference path kept deliberately plain: one query token at a time, keys
// admitted by reading the masks directly, dot products and normalization in
// scalar double loops. The only pieces shared with the engine are the mask
// transformations themselves (dropout, repositioning), which have their own
// reference tests.

namespace irattn {

namespace {

struct KeySource {
    const Tensor* feats;   // grid the key token lives in
    std::size_t token;     // flat index into that grid
    std::size_t column;    // position in the concatenated key space
};

double dot_projected(const Tensor& feats, std::size_t token, const Tensor& w, std::size_t col,
                     const double* query, std::size_t dh) {
    // Projects the token into one head on the fly and dots it with `query`.
    const std::size_t c_in = w.rows();
    double acc = 0.0;
    for (std::size_t j = 0; j < dh; ++j) {
        double kj = 0.0;
        for (std::size_t c = 0; c < c_in; ++c) {
            kj += static_cast<double>(feats.values()[token * c_in + c]) *
                  static_cast<double>(w.at(c, col + j));
        }
        acc += query[j] * kj;
    }
    return acc;
}

void project_token(const Tensor& feats, std::size_t token, const Tensor& w, std::size_t col,
                   double* out, std::size_t dh) {
    const std::size_t c_in = w.rows();
    for (std::size_t j = 0; j < dh; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < c_in; ++c) {
            acc += static_cast<double>(feats.values()[token * c_in + c]) *
                   static_cast<double>(w.at(c, col + j));
        }
        out[j] = acc;
    }
}

}  // namespace

AttentionResult attend_oracle(const AttentionProblem& p) {
    validate_attention_problem(p);
    const std::size_t grid_h = p.target_feats.extent(0);
    const std::size_t grid_w = p.target_feats.extent(1);
    const std::size_t channels = p.target_feats.extent(2);
    const std::size_t hw = grid_h * grid_w;
    const std::size_t dh = p.weights.head_dim();
    const std::size_t d = p.weights.model_dim();

    std::vector<SubjectMask> eff_masks;
    std::vector<Tensor> eff_feats;
    if (p.variant != AttentionVariant::Vanilla) {
        eff_masks = p.ref_masks;
        if (p.dropout_rate > 0.0) {
            for (SubjectMask& m : eff_masks) {
                m = token_dropout(m, p.dropout_rate, p.seed, m.subject_id);
            }
        }
        if (p.variant == AttentionVariant::Reposition) {
            for (std::size_t i = 0; i < eff_masks.size(); ++i) {
                const RepositionTransform t(bbox_of(p.ref_masks[i]),
                                            bbox_of(p.target_masks.mask(i)));
                eff_feats.push_back(reposition_features(p.ref_feats[i], t));
                eff_masks[i] = reposition_mask(eff_masks[i], t);
            }
        } else {
            eff_feats = p.ref_feats;
        }
    }
    const std::size_t n = eff_masks.size();
    const std::size_t total_cols = n * hw + hw;

    const Tensor target_flat = reshape(p.target_feats, {hw, channels});
    std::vector<Tensor> ref_flat;
    for (const Tensor& f : eff_feats) {
        ref_flat.push_back(reshape(f, {hw, channels}));
    }

    const bool isolate = p.variant == AttentionVariant::Isolation ||
                         p.variant == AttentionVariant::Reposition;
    const double s = p.scale_logits ? 1.0 / std::sqrt(static_cast<double>(dh)) : 1.0;

    auto label_of = [&](std::size_t token) {
        int label = 0;
        for (std::size_t i = 0; i < p.target_masks.subject_count(); ++i) {
            if (p.target_masks.mask(i).bits[token]) {
                label = static_cast<int>(i) + 1;
            }
        }
        return label;
    };

    std::vector<Tensor> maps;
    for (int hd = 0; hd < p.weights.heads; ++hd) {
        maps.emplace_back(std::vector<std::size_t>{hw, total_cols});
    }
    std::vector<double> out_acc(hw * d, 0.0);
    std::vector<double> query(dh);
    std::vector<double> value(dh);

    for (std::size_t q_tok = 0; q_tok < hw; ++q_tok) {
        const int lp = label_of(q_tok);

        std::vector<KeySource> admitted;
        for (std::size_t i = 0; i < n; ++i) {
            if (lp != static_cast<int>(i) + 1) {
                continue;
            }
            for (std::size_t k_tok = 0; k_tok < hw; ++k_tok) {
                if (eff_masks[i].bits[k_tok]) {
                    admitted.push_back({&ref_flat[i], k_tok, i * hw + k_tok});
                }
            }
        }
        for (std::size_t k_tok = 0; k_tok < hw; ++k_tok) {
            if (isolate) {
                const int lq = label_of(k_tok);
                if (lp > 0 && lq > 0 && lq != lp) {
                    continue;
                }
            }
            admitted.push_back({&target_flat, k_tok, n * hw + k_tok});
        }
        if (admitted.empty()) {
            throw FullyMaskedRowError(q_tok);
        }

        for (int hd = 0; hd < p.weights.heads; ++hd) {
            const std::size_t head_col = static_cast<std::size_t>(hd) * dh;
            project_token(target_flat, q_tok, p.weights.w_q, head_col, query.data(), dh);

            std::vector<double> logits(admitted.size());
            double hi = 0.0;
            for (std::size_t a = 0; a < admitted.size(); ++a) {
                logits[a] = s * dot_projected(*admitted[a].feats, admitted[a].token, p.weights.w_k,
                                              head_col, query.data(), dh);
                hi = a == 0 ? logits[a] : std::max(hi, logits[a]);
            }
            double sum = 0.0;
            for (double& l : logits) {
                l = std::exp(l - hi);
                sum += l;
            }
            for (std::size_t a = 0; a < admitted.size(); ++a) {
                const double weight = logits[a] / sum;
                maps[hd].at(q_tok, admitted[a].column) = static_cast<float>(weight);
                project_token(*admitted[a].feats, admitted[a].token, p.weights.w_v, head_col,
                              value.data(), dh);
                for (std::size_t j = 0; j < dh; ++j) {
                    out_acc[q_tok * d + head_col + j] += weight * value[j];
                }
            }
        }
    }

    std::vector<float> out_values(out_acc.size());
    for (std::size_t i = 0; i < out_acc.size(); ++i) {
        out_values[i] = static_cast<float>(out_acc[i]);
    }

    KeyLayout layout;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < n; ++i) {
        layout.blocks.push_back({KeyBlock::Kind::Reference, static_cast<int>(i), offset, hw,
                                 static_cast<const Bitmap&>(eff_masks[i])});
        offset += hw;
    }
    layout.blocks.push_back({KeyBlock::Kind::Target, -1, offset, hw, Bitmap(grid_h, grid_w, true)});
    layout.total_cols = total_cols;

    return {Tensor({grid_h, grid_w, d}, std::move(out_values)), std::move(maps),
            std::move(layout)};
}

}  // namespace irattn
