#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "lexfly/node.hpp"

namespace lexfly {

// Relative error with a unit floor: below magnitude 1 the comparison is
// effectively absolute, which keeps near-zero gradients from amplifying
// finite-difference noise.
inline double grad_rel_err(double analytic, double numeric) {
  const double denom =
      std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
  return std::fabs(analytic - numeric) / denom;
}

struct GradCheck {
  double max_rel_err = 0.0;
  std::size_t coords = 0;
  std::string worst;  // "input#k[i]" of the worst coordinate

  bool pass(double tol) const { return max_rel_err < tol; }
};

// Central finite differences (step h) of a rebuildable scalar loss against
// one reverse-mode sweep. `build_loss` must reconstruct the graph from the
// current values of `inputs` every time it is called.
inline GradCheck gradcheck(const std::vector<NodePtr>& inputs,
                           const std::function<NodePtr()>& build_loss,
                           double h = 1e-5) {
  for (const auto& in : inputs) in->grad.fill(0.0);
  NodePtr loss = build_loss();
  backward(loss);

  GradCheck result;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Node& in = *inputs[k];
    for (std::size_t i = 0; i < in.value.size(); ++i) {
      const double saved = in.value[i];
      in.value[i] = saved + h;
      const double up = build_loss()->value[0];
      in.value[i] = saved - h;
      const double down = build_loss()->value[0];
      in.value[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = grad_rel_err(in.grad[i], numeric);
      ++result.coords;
      if (err > result.max_rel_err) {
        result.max_rel_err = err;
        result.worst = "input#" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace lexfly
