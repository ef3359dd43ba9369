#pragma once

#include "mimex/tensor.hpp"

namespace mimex {

// One environment step as seen by the learning code. `a` is the admissible
// action actually applied to the environment (already clamped; a single index
// for discrete action spaces).
struct Transition {
  Tensor s;
  Tensor a;
  Tensor s_next;
  double r_ext = 0.0;
  double r_int = 0.0;
  bool done = false;
};

}  // namespace mimex
