#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cclk/linalg.hpp"

// Minimal reverse-mode automatic differentiation over Matrix values.
//
// A Tape records primitive operations in creation order, which is a valid
// topological order because every op consumes already-recorded Vars. backward()
// walks the nodes once in reverse, accumulating vector-Jacobian products into
// the inputs of each node that needs a gradient.
namespace cclk::ad {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the Tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  bool requires_grad() const;
  int id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  // Value of a 1×1 Var.
  double scalar() const;

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Receives the upstream gradient (shape of the node's value) and returns one
// contribution per input, in input order. Contributions for inputs that do
// not require a gradient may be left empty.
using Pullback = std::function<std::vector<Matrix>(const Matrix& upstream)>;

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var param(Matrix value);
  Var constant(Matrix value);

  // Appends a node; used by the primitives below.
  Var record(Matrix value, std::vector<Var> inputs, Pullback pullback);

  // Seeds d(output)/d(output) = 1 and propagates. `output` must be 1×1.
  void backward(Var output);

  // Gradient accumulated into `v` by the last backward(); zeros if none.
  Matrix grad(Var v) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const Matrix& value(int id) const { return nodes_.at(static_cast<std::size_t>(id)).value; }
  bool requires_grad(int id) const { return nodes_.at(static_cast<std::size_t>(id)).requires_grad; }

  // Stop-gradient bookkeeping. Every stop_gradient() records the value it
  // passed through; with a replay installed, the k-th stop_gradient() emits the
  // k-th replayed value instead of its input. grad_check uses this to hold
  // gradient-free quantities fixed while perturbing parameters.
  const std::vector<Matrix>& stopped_values() const noexcept { return stopped_; }
  void set_stop_gradient_replay(std::vector<Matrix> values);
  Matrix next_stopped_value(const Matrix& live);

 private:
  struct Node {
    Matrix value;
    std::vector<int> inputs;
    Pullback pullback;
    bool requires_grad = false;
    bool is_leaf = false;
  };

  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::vector<Matrix> stopped_;
  std::optional<std::vector<Matrix>> replay_;
  std::size_t replay_cursor_ = 0;
};

// Primitive set. Each op checks shapes and throws ShapeError on mismatch.
Var matmul(Var a, Var b);
// Same shape, or `b` is a 1×n row (broadcast down rows) or an m×1 column
// (broadcast across columns).
Var add(Var a, Var b);
Var scale(Var a, double s);
Var mul(Var a, Var b);  // elementwise
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var relu(Var a);
// Each row divided by sqrt(‖row‖² + 1e-12); the epsilon is treated as constant.
Var row_l2_normalize(Var a);
Var transpose(Var a);
Var sum(Var a);                // → 1×1
Var diag(Var a);               // square n×n → n×1
Var offdiag_row_sums(Var a);   // square n×n → n×1, Σ_{j≠i} a_ij
Var clamp_min(Var a, double floor);  // max(a, floor); zero gradient where clamped
Var stop_gradient(Var a);

// Composites built from the primitives.
Var sub(Var a, Var b);
Var mean(Var a);

struct GradCheckOptions {
  double h = 1e-5;
  // Hold every stop_gradient() output at its unperturbed value during the
  // finite-difference evaluations. Without this, paths through stop_gradient
  // show up as a mismatch (the analytic gradient is zero there by design).
  bool freeze_stop_gradients = false;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

using ScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

// Compares reverse-mode gradients of `f` against central differences
// (f(p+h) - f(p-h)) / 2h for every coordinate of every parameter and reports
// the worst |g_ad - g_fd| / (|g_fd| + 1e-8).
GradCheckResult grad_check(const ScalarFn& f, std::span<const Matrix> params,
                           const GradCheckOptions& options = {});

}  // namespace cclk::ad
