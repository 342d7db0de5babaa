#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "irattn/masks.hpp"
#include "irattn/reposition.hpp"
#include "irattn/tensor.hpp"

namespace irattn {

// Per-stream projection matrices, channels x model_dim each, with the model
// dimension split evenly across heads.
struct ProjectionWeights {
    Tensor w_q;
    Tensor w_k;
    Tensor w_v;
    int heads = 1;

    ProjectionWeights(Tensor q, Tensor k, Tensor v, int head_count);
    static ProjectionWeights identity(std::size_t channels, int head_count = 1);

    std::size_t channels() const { return w_q.rows(); }
    std::size_t model_dim() const { return w_q.cols(); }
    std::size_t head_dim() const { return model_dim() / static_cast<std::size_t>(heads); }
};

enum class AttentionVariant { Vanilla, Mutual, Isolation, Reposition };

// One self-attention evaluation over a target feature map, optionally
// extended with per-subject reference maps whose tokens are appended to the
// key/value space. All grids share one resolution and channel count.
struct AttentionProblem {
    Tensor target_feats;                // height x width x channels
    std::vector<Tensor> ref_feats;      // one per subject, or empty
    MaskSet target_masks;
    std::vector<SubjectMask> ref_masks; // parallel to ref_feats
    ProjectionWeights weights;
    AttentionVariant variant = AttentionVariant::Vanilla;
    double dropout_rate = 0.0;
    std::uint64_t seed = 0;
    bool scale_logits = true;
};

struct KeyBlock {
    enum class Kind { Reference, Target };
    Kind kind = Kind::Target;
    int subject_position = -1;  // list position for reference blocks, -1 for target
    std::size_t offset = 0;
    std::size_t width = 0;
    Bitmap keys;                // effective key gate for this block
};

struct KeyLayout {
    std::vector<KeyBlock> blocks;
    std::size_t total_cols = 0;
};

struct AttentionResult {
    Tensor output;                  // height x width x model_dim
    std::vector<Tensor> attention;  // one row-stochastic map per head
    KeyLayout key_layout;
};

struct ProjectedHeads {
    std::vector<Tensor> q;  // tokens x head_dim, one per head
    std::vector<Tensor> k;
    std::vector<Tensor> v;
};

// Flatten the grid row-major, project with each matrix, then split the
// result columns into per-head slices.
ProjectedHeads project(const Tensor& feats, const ProjectionWeights& w);

// Drop set bits with probability `rate`, each decided by a deterministic
// counter-based generator keyed on (seed, subject_index, bit index). If every
// bit drops, the lowest-index original bit is restored.
SubjectMask token_dropout(const SubjectMask& mask, double rate, std::uint64_t seed,
                          int subject_index);

void validate_attention_problem(const AttentionProblem& p);

AttentionResult attend(const AttentionProblem& p);
AttentionResult attend_vanilla(const AttentionProblem& p);
AttentionResult attend_mutual(const AttentionProblem& p);
AttentionResult attend_isolation(const AttentionProblem& p);
AttentionResult attend_reposition(const AttentionProblem& p);

// Reference evaluation: walks every query token with scalar loops, decides
// key admission per token straight from the masks, and normalizes over the
// admitted keys only. No gate matrices, no matrix products.
AttentionResult attend_oracle(const AttentionProblem& p);

}  // namespace irattn
