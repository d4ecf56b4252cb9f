#include "cclk/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cclk/errors.hpp"

namespace cclk::ad {

namespace {

constexpr double kNormalizeEps = 1e-12;

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_tape(Var a, Var b, const char* op) {
  if (&a.tape() != &b.tape()) throw ContractError(std::string(op) + ": Vars live on different tapes");
}

template <typename F>
Matrix map(const Matrix& a, F f) {
  Matrix out(a.rows(), a.cols());
  auto src = a.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
  return out;
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("scalar(): Var is " + shape_str(v));
  return v(0, 0);
}

Var Tape::param(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false, true});
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::vector<Var> inputs, Pullback pullback) {
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (&in.tape() != this) throw ContractError("record: input from a different tape");
    node.inputs.push_back(in.id());
    node.requires_grad = node.requires_grad || in.requires_grad();
  }
  if (node.requires_grad) node.pullback = std::move(pullback);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

void Tape::backward(Var output) {
  if (&output.tape() != this) throw ContractError("backward: output from a different tape");
  const Matrix& out = output.value();
  if (out.rows() != 1 || out.cols() != 1) {
    throw ContractError("backward: output must be 1x1, got " + shape_str(out));
  }
  grads_.assign(nodes_.size(), Matrix{});
  const auto root = static_cast<std::size_t>(output.id());
  grads_[root] = Matrix(1, 1, 1.0);

  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.is_leaf || !node.requires_grad || grads_[i].empty()) continue;
    std::vector<Matrix> contributions = node.pullback(grads_[i]);
    for (std::size_t k = 0; k < node.inputs.size() && k < contributions.size(); ++k) {
      const auto in = static_cast<std::size_t>(node.inputs[k]);
      if (!nodes_[in].requires_grad || contributions[k].empty()) continue;
      if (grads_[in].empty()) {
        grads_[in] = std::move(contributions[k]);
      } else {
        grads_[in] += contributions[k];
      }
    }
  }
}

Matrix Tape::grad(Var v) const {
  const auto id = static_cast<std::size_t>(v.id());
  if (id < grads_.size() && !grads_[id].empty()) return grads_[id];
  const Matrix& val = nodes_.at(id).value;
  return Matrix(val.rows(), val.cols());
}

void Tape::set_stop_gradient_replay(std::vector<Matrix> values) {
  replay_ = std::move(values);
  replay_cursor_ = 0;
}

Matrix Tape::next_stopped_value(const Matrix& live) {
  Matrix out = live;
  if (replay_) {
    if (replay_cursor_ >= replay_->size()) {
      throw ContractError("stop_gradient replay exhausted: the computation is not replayable");
    }
    out = (*replay_)[replay_cursor_++];
    if (!out.same_shape(live)) throw ShapeError("stop_gradient replay: shape changed");
  }
  stopped_.push_back(out);
  return out;
}

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  Matrix value = cclk::matmul(a.value(), b.value());
  return a.tape().record(std::move(value), {a, b}, [a, b](const Matrix& g) {
    std::vector<Matrix> out(2);
    if (a.requires_grad()) out[0] = cclk::matmul(g, cclk::transpose(b.value()));
    if (b.requires_grad()) out[1] = cclk::matmul(cclk::transpose(a.value()), g);
    return out;
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b, "add");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  Matrix value = av;
  enum class Mode { Same, Row, Col } mode;
  if (av.same_shape(bv)) {
    mode = Mode::Same;
    value += bv;
  } else if (bv.rows() == 1 && bv.cols() == av.cols()) {
    mode = Mode::Row;
    for (std::size_t i = 0; i < av.rows(); ++i)
      for (std::size_t j = 0; j < av.cols(); ++j) value(i, j) += bv(0, j);
  } else if (bv.cols() == 1 && bv.rows() == av.rows()) {
    mode = Mode::Col;
    for (std::size_t i = 0; i < av.rows(); ++i)
      for (std::size_t j = 0; j < av.cols(); ++j) value(i, j) += bv(i, 0);
  } else {
    throw ShapeError("add: cannot combine " + shape_str(av) + " and " + shape_str(bv));
  }
  return a.tape().record(std::move(value), {a, b}, [mode](const Matrix& g) {
    std::vector<Matrix> out{g, Matrix{}};
    switch (mode) {
      case Mode::Same:
        out[1] = g;
        break;
      case Mode::Row:
        out[1] = Matrix(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) out[1](0, j) += g(i, j);
        break;
      case Mode::Col:
        out[1] = Matrix(g.rows(), 1);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < g.cols(); ++j) out[1](i, 0) += g(i, j);
        break;
    }
    return out;
  });
}

Var scale(Var a, double s) {
  return a.tape().record(a.value() * s, {a}, [s](const Matrix& g) {
    return std::vector<Matrix>{g * s};
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b, "mul");
  if (!a.value().same_shape(b.value())) {
    throw ShapeError("mul: shape mismatch " + shape_str(a.value()) + " vs " + shape_str(b.value()));
  }
  return a.tape().record(hadamard(a.value(), b.value()), {a, b}, [a, b](const Matrix& g) {
    std::vector<Matrix> out(2);
    if (a.requires_grad()) out[0] = hadamard(g, b.value());
    if (b.requires_grad()) out[1] = hadamard(g, a.value());
    return out;
  });
}

Var exp(Var a) {
  Matrix value = map(a.value(), [](double x) { return std::exp(x); });
  Tape& tape = a.tape();
  const int next_id = static_cast<int>(tape.size());
  // The pullback reads the node's own value (e^x) back from the tape.
  return tape.record(std::move(value), {a}, [&tape, next_id](const Matrix& g) {
    return std::vector<Matrix>{hadamard(g, tape.value(next_id))};
  });
}

Var log(Var a) {
  Matrix value = map(a.value(), [](double x) { return std::log(x); });
  return a.tape().record(std::move(value), {a}, [a](const Matrix& g) {
    Matrix d = g;
    auto dd = d.data();
    auto x = a.value().data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] /= x[i];
    return std::vector<Matrix>{std::move(d)};
  });
}

Var tanh(Var a) {
  Matrix value = map(a.value(), [](double x) { return std::tanh(x); });
  Tape& tape = a.tape();
  const int next_id = static_cast<int>(tape.size());
  return tape.record(std::move(value), {a}, [&tape, next_id](const Matrix& g) {
    Matrix d = g;
    auto dd = d.data();
    auto y = tape.value(next_id).data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] *= 1.0 - y[i] * y[i];
    return std::vector<Matrix>{std::move(d)};
  });
}

Var relu(Var a) {
  Matrix value = map(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
  return a.tape().record(std::move(value), {a}, [a](const Matrix& g) {
    Matrix d = g;
    auto dd = d.data();
    auto x = a.value().data();
    for (std::size_t i = 0; i < dd.size(); ++i)
      if (!(x[i] > 0.0)) dd[i] = 0.0;
    return std::vector<Matrix>{std::move(d)};
  });
}

Var row_l2_normalize(Var a) {
  const Matrix& x = a.value();
  Matrix value(x.rows(), x.cols());
  std::vector<double> norms(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double sq = 0.0;
    for (double v : x.row(i)) sq += v * v;
    norms[i] = std::sqrt(sq + kNormalizeEps);
    for (std::size_t j = 0; j < x.cols(); ++j) value(i, j) = x(i, j) / norms[i];
  }
  Tape& tape = a.tape();
  const int next_id = static_cast<int>(tape.size());
  return tape.record(std::move(value), {a}, [&tape, next_id, norms](const Matrix& g) {
    // y = x / n, n = sqrt(|x|² + eps): dx = (g - y (y·g)) / n
    const Matrix& y = tape.value(next_id);
    Matrix d(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += y(i, j) * g(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) d(i, j) = (g(i, j) - y(i, j) * dot) / norms[i];
    }
    return std::vector<Matrix>{std::move(d)};
  });
}

Var transpose(Var a) {
  return a.tape().record(cclk::transpose(a.value()), {a}, [](const Matrix& g) {
    return std::vector<Matrix>{cclk::transpose(g)};
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  return a.tape().record(Matrix(1, 1, s), {a}, [r, c](const Matrix& g) {
    return std::vector<Matrix>{Matrix(r, c, g(0, 0))};
  });
}

Var diag(Var a) {
  const Matrix& x = a.value();
  if (x.rows() != x.cols()) throw ShapeError("diag: matrix is " + shape_str(x));
  const std::size_t n = x.rows();
  Matrix value(n, 1);
  for (std::size_t i = 0; i < n; ++i) value(i, 0) = x(i, i);
  return a.tape().record(std::move(value), {a}, [n](const Matrix& g) {
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = g(i, 0);
    return std::vector<Matrix>{std::move(d)};
  });
}

Var offdiag_row_sums(Var a) {
  const Matrix& x = a.value();
  if (x.rows() != x.cols()) throw ShapeError("offdiag_row_sums: matrix is " + shape_str(x));
  const std::size_t n = x.rows();
  Matrix value(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) s += x(i, j);
    value(i, 0) = s;
  }
  return a.tape().record(std::move(value), {a}, [n](const Matrix& g) {
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) d(i, j) = g(i, 0);
    return std::vector<Matrix>{std::move(d)};
  });
}

Var clamp_min(Var a, double floor) {
  Matrix value = map(a.value(), [floor](double x) { return x < floor ? floor : x; });
  return a.tape().record(std::move(value), {a}, [a, floor](const Matrix& g) {
    Matrix d = g;
    auto dd = d.data();
    auto x = a.value().data();
    for (std::size_t i = 0; i < dd.size(); ++i)
      if (x[i] < floor) dd[i] = 0.0;
    return std::vector<Matrix>{std::move(d)};
  });
}

Var stop_gradient(Var a) {
  Tape& tape = a.tape();
  return tape.constant(tape.next_stopped_value(a.value()));
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

GradCheckResult grad_check(const ScalarFn& f, std::span<const Matrix> params,
                           const GradCheckOptions& options) {
  if (!(options.h > 0.0) || options.h > 1e-2) {
    throw ContractError("grad_check: step h must lie in (0, 1e-2]");
  }

  std::vector<Matrix> analytic;
  std::vector<Matrix> frozen;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Matrix& p : params) vars.push_back(tape.param(p));
    Var out = f(tape, vars);
    if (out.rows() != 1 || out.cols() != 1) {
      throw ContractError("grad_check: function output is not a scalar");
    }
    tape.backward(out);
    for (const Var& v : vars) analytic.push_back(tape.grad(v));
    if (options.freeze_stop_gradients) frozen = tape.stopped_values();
  }

  auto evaluate = [&](const std::vector<Matrix>& point) {
    Tape tape;
    if (options.freeze_stop_gradients) tape.set_stop_gradient_replay(frozen);
    std::vector<Var> vars;
    vars.reserve(point.size());
    for (const Matrix& p : point) vars.push_back(tape.constant(p));
    return f(tape, vars).scalar();
  };

  GradCheckResult result;
  std::vector<Matrix> point(params.begin(), params.end());
  for (std::size_t p = 0; p < point.size(); ++p) {
    for (std::size_t k = 0; k < point[p].size(); ++k) {
      const double original = point[p].data()[k];
      point[p].data()[k] = original + options.h;
      const double plus = evaluate(point);
      point[p].data()[k] = original - options.h;
      const double minus = evaluate(point);
      point[p].data()[k] = original;

      const double numeric = (plus - minus) / (2.0 * options.h);
      const double ad = analytic[p].data()[k];
      const double rel = std::abs(ad - numeric) / (std::abs(numeric) + 1e-8);
      if (rel > result.max_rel_error || (p == 0 && k == 0)) {
        result = GradCheckResult{rel, p, k, ad, numeric};
      }
    }
  }
  return result;
}

}  // namespace cclk::ad
