#pragma once

#include "team/nn/tensor.hpp"

namespace team::nn {

/// -log softmax(logits)[target], stabilized by log-sum-exp.
/// Throws InputError for an out-of-range target or fewer than two logits.
double softmax_cross_entropy(const Vector& logits, int target);

/// softmax(logits) - one_hot(target).
Vector softmax_cross_entropy_grad(const Vector& logits, int target);

Vector softmax(const Vector& logits);

/// Index of the largest logit; ties go to the lowest index.
int argmax(const Vector& logits);

}  // namespace team::nn
