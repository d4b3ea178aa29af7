#pragma once

#include "interleave/conditioning.h"
#include "interleave/patterns.h"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace interleave {

enum class ConditioningMode {
    None,
    CrossAttention, // condition attended by a cross-attention block in every layer
    Prefix,         // condition prepended to the step sequence
    PrefixAndCross, // melody as prefix, text through cross-attention
};

std::string_view to_string(ConditioningMode mode);
ConditioningMode parse_conditioning_mode(std::string_view name);
bool uses_cross(ConditioningMode mode);
bool uses_prefix(ConditioningMode mode);

struct ModelConfig {
    int K = 4;
    int M = 64;
    int D = 64;
    int L = 2;
    int H = 4;
    int ffn_mult = 4;
    int max_steps = 512;
    ConditioningMode mode = ConditioningMode::None;

    void validate() const;
    bool operator==(const ModelConfig &) const = default;
};

// Closed-form parameter count, usable for configurations too large to allocate.
std::size_t param_count(const ModelConfig & config);

// Location of one named weight block inside the flat parameter vector.
struct ParamBlock {
    std::string name;
    std::size_t offset = 0;
    int rows = 0;
    int cols = 0;
    bool decay = false; // matrices receive weight decay, vectors do not
};

// All weights of the decoder in one flat vector; blocks are column-major
// views into it. Gradients use the same type.
class Parameters {
public:
    Parameters() = default;
    explicit Parameters(const ModelConfig & config); // zero-filled

    const ModelConfig & config() const { return config_; }
    const std::vector<ParamBlock> & blocks() const { return blocks_; }
    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

    Eigen::VectorXd & values() { return values_; }
    const Eigen::VectorXd & values() const { return values_; }

    Eigen::Map<Eigen::MatrixXd> block(int index);
    Eigen::Map<const Eigen::MatrixXd> block(int index) const;
    int find(const std::string & name) const; // -1 when absent

    Parameters zeros_like() const;

    // Block indices, resolved once at construction.
    struct Layer {
        int ln1_g, ln1_b, wq, wk, wv, wo;
        int lnc_g = -1, lnc_b = -1, cq = -1, ck = -1, cv = -1, co = -1;
        int ln2_g, ln2_b, w1, b1, w2, b2;
    };
    std::vector<int> embed;     // K tables of (M + 1) x D; row 0 = absence token
    int prefix_w = -1, prefix_b = -1;
    int cross_w = -1, cross_b = -1;
    std::vector<Layer> layers;
    int lnf_g = -1, lnf_b = -1;
    std::vector<int> head_w;    // K of D x M
    std::vector<int> head_b;    // K of 1 x M

private:
    int add(std::string name, int rows, int cols, bool decay);

    ModelConfig config_;
    std::vector<ParamBlock> blocks_;
    Eigen::VectorXd values_;
};

// Scaled-Gaussian initialisation: projections N(0, 1/fan_in), embeddings
// N(0, 1), biases N(0, 0.01^2), layer-norm gains 1.
Parameters init_params(const ModelConfig & config, uint64_t seed);

// Tokens of one pattern step: tokens[k-1] is a token id in 1..M or 0 when
// codebook k is absent at step s.
struct StepInput {
    int s = 0;
    std::vector<int> tokens;
};

// Rows 0..count-1 of an interleaved sequence as model inputs.
std::vector<StepInput> step_inputs(const InterleavedSequence & seq, int count);

struct Condition {
    ConditioningTensor cross;  // consumed by cross-attention
    ConditioningTensor prefix; // prepended to the step sequence

    bool empty() const { return cross.empty() && prefix.empty(); }
};

// Standard alternating sine / cosine encoding of position s.
Eigen::RowVectorXd sinusoidal_position(int s, int D);

Eigen::RowVectorXd embed_step(const Parameters & params, const StepInput & input);

// logits[k-1] is S x M: row s predicts codebook k at pattern step s + 1.
struct Logits {
    std::vector<Eigen::MatrixXd> per_codebook;

    int steps() const { return per_codebook.empty() ? 0 : static_cast<int>(per_codebook.front().rows()); }
};

Logits forward(const Parameters & params, std::span<const StepInput> steps, const Condition & condition);
// Runs with an explicit mode, which must only use blocks the parameters have.
Logits forward(const Parameters & params, std::span<const StepInput> steps, const Condition & condition,
               ConditioningMode mode);

struct LossValue {
    double loss = 0.0;
    double accuracy = 0.0; // argmax agreement on the scored positions
    int positions = 0;
};

// Mean cross-entropy over (s, k) with codebook k present in P_{s+1}. `logits`
// covers steps 0..S-1 of `targets`. Throws ValidationError if nothing is scored.
LossValue loss_masked(const Logits & logits, const InterleavedSequence & targets, const Pattern & pattern);

struct TrainingExample {
    InterleavedSequence sequence;
    Condition condition;
};

// Examples sharing one pattern.
struct Batch {
    Pattern pattern;
    std::vector<TrainingExample> examples;
};

Batch make_batch(const Pattern & pattern, std::span<const TokenGrid> grids, std::span<const Condition> conditions = {});

struct GradientResult {
    Parameters gradient;
    LossValue loss; // averaged over every scored position in the batch
};

// Exact reverse-mode gradient of the batch loss. When `drop_condition` is set
// every example is run with the null condition. Throws InvariantError on a
// non-finite loss.
GradientResult grad(const Parameters & params, const Batch & batch, bool drop_condition = false);

// Loss of a batch without gradients (same averaging as grad).
LossValue batch_loss(const Parameters & params, const Batch & batch, bool drop_condition = false);

// Smallest |pre-activation| over every feed-forward unit in the batch.
// Central differences straddle a ReLU kink when this is below the step size.
double relu_margin(const Parameters & params, const Batch & batch);

} // namespace interleave
