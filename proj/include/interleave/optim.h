#pragma once

#include "interleave/model.h"
#include "interleave/rng.h"

#include <Eigen/Dense>

#include <optional>

namespace interleave {

struct TrainHyper {
    double lr = 1e-3;         // peak learning rate
    int warmup_steps = 100;
    int total_steps = 2000;   // horizon of the cosine schedule
    double min_lr = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 0.1;
    double clip_norm = 1.0;   // <= 0 disables clipping
    double condition_dropout = 0.2;
    double ema_decay = 0.99;
    bool use_ema = false;

    void validate() const;
};

// Linear warmup to `lr`, then cosine decay to `min_lr` at `total_steps`.
// `step` counts from 0.
double learning_rate(const TrainHyper & hyper, int step);

// Scales `grad` in place so that its global L2 norm is at most `max_norm`.
// Returns the norm before clipping.
double clip_gradient(Eigen::VectorXd & grad, double max_norm);

struct OptimizerState {
    int step = 0;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::optional<Eigen::VectorXd> ema; // evaluation weights

    static OptimizerState for_params(const Parameters & params, bool use_ema);
};

// One AdamW update: weight decay is decoupled (shrinks the weights of
// decay-marked blocks directly, scaled by lr) and never enters the moments.
void adamw_update(OptimizerState & state, Parameters & params, const Eigen::VectorXd & grad, double lr,
                  const TrainHyper & hyper);

struct TrainStepResult {
    double loss = 0.0;
    double accuracy = 0.0;
    double grad_norm = 0.0; // before clipping
    double lr = 0.0;
    bool condition_dropped = false;
};

// The batch-level condition dropout decision used by train_step.
bool draw_condition_dropout(double p, Rng & rng);

// grad -> clip -> AdamW (+ EMA when enabled). Throws InvariantError if the
// update produces non-finite parameters.
TrainStepResult train_step(OptimizerState & state, Parameters & params, const Batch & batch,
                           const TrainHyper & hyper, Rng & rng);

// Parameters with the EMA weights substituted (or a copy when EMA is off).
Parameters ema_params(const OptimizerState & state, const Parameters & params);

} // namespace interleave
