#include "interleave/optim.h"

#include "interleave/error.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace interleave {

void TrainHyper::validate() const {
    if (!(lr > 0.0) || warmup_steps < 0 || total_steps < 1 || min_lr < 0.0) {
        throw ValidationError("learning-rate schedule needs lr > 0, warmup >= 0, total_steps >= 1");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(eps > 0.0)) {
        throw ValidationError("AdamW betas must lie in [0, 1) and eps must be positive");
    }
    if (weight_decay < 0.0 || !(condition_dropout >= 0.0 && condition_dropout <= 1.0) ||
        !(ema_decay >= 0.0 && ema_decay <= 1.0)) {
        throw ValidationError("weight decay, condition dropout or EMA decay out of range");
    }
}

double learning_rate(const TrainHyper & hyper, int step) {
    if (step < hyper.warmup_steps) {
        return hyper.lr * static_cast<double>(step + 1) / hyper.warmup_steps;
    }
    const int decay_steps = std::max(1, hyper.total_steps - hyper.warmup_steps);
    const double progress = std::min(1.0, static_cast<double>(step - hyper.warmup_steps) / decay_steps);
    return hyper.min_lr + 0.5 * (hyper.lr - hyper.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

double clip_gradient(Eigen::VectorXd & grad, double max_norm) {
    const double norm = grad.norm();
    if (max_norm > 0.0 && norm > max_norm) {
        grad *= max_norm / norm;
    }
    return norm;
}

OptimizerState OptimizerState::for_params(const Parameters & params, bool use_ema) {
    OptimizerState state;
    state.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    state.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
    if (use_ema) {
        state.ema = params.values();
    }
    return state;
}

void adamw_update(OptimizerState & state, Parameters & params, const Eigen::VectorXd & grad, double lr,
                  const TrainHyper & hyper) {
    if (grad.size() != params.values().size() || state.m.size() != grad.size()) {
        throw ValidationError("gradient / optimizer state size does not match the parameters");
    }
    ++state.step;
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(hyper.beta1, state.step);
    const double bc2 = 1.0 - std::pow(hyper.beta2, state.step);

    auto & w = params.values();
    if (hyper.weight_decay > 0.0) {
        for (const auto & b : params.blocks()) {
            if (b.decay) {
                w.segment(static_cast<Eigen::Index>(b.offset), static_cast<Eigen::Index>(b.rows) * b.cols) *=
                    1.0 - lr * hyper.weight_decay;
            }
        }
    }
    w.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + hyper.eps);

    if (state.ema) {
        *state.ema = hyper.ema_decay * *state.ema + (1.0 - hyper.ema_decay) * w;
    }
}

bool draw_condition_dropout(double p, Rng & rng) { return rng.bernoulli(p); }

TrainStepResult train_step(OptimizerState & state, Parameters & params, const Batch & batch,
                           const TrainHyper & hyper, Rng & rng) {
    hyper.validate();
    TrainStepResult out;
    const bool has_condition = std::any_of(batch.examples.begin(), batch.examples.end(),
                                           [](const TrainingExample & ex) { return !ex.condition.empty(); });
    out.condition_dropped = draw_condition_dropout(hyper.condition_dropout, rng) && has_condition;

    GradientResult g = grad(params, batch, out.condition_dropped);
    out.loss = g.loss.loss;
    out.accuracy = g.loss.accuracy;
    out.grad_norm = clip_gradient(g.gradient.values(), hyper.clip_norm);
    out.lr = learning_rate(hyper, state.step);
    adamw_update(state, params, g.gradient.values(), out.lr, hyper);
    if (!params.values().allFinite()) {
        throw InvariantError("non-finite parameters after update");
    }
    return out;
}

Parameters ema_params(const OptimizerState & state, const Parameters & params) {
    Parameters out = params;
    if (state.ema) {
        out.values() = *state.ema;
    }
    return out;
}

} // namespace interleave
