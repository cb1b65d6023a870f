#include "nse/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace nse {

namespace {

std::size_t shape_product(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

void check_shape(const Shape& s) {
  if (s.empty() || s.size() > 2)
    throw DimensionError("tensor rank must be 1 or 2, got shape " + shape_string(s));
  for (auto d : s)
    if (d == 0) throw DimensionError("tensor dims must be positive: " + shape_string(s));
}

bool any_requires_grad(std::initializer_list<const Var*> inputs) {
  for (const Var* v : inputs)
    if ((*v)->requires_grad) return true;
  return false;
}

void check_finite(const Tensor& t, const char* op) {
  for (double v : t.data)
    if (!std::isfinite(v)) throw NumericError(std::string(op) + " produced a non-finite value");
}

// Wraps a forward result; requires_grad follows the inputs on a recording tape.
Var output(Tape& tape, Tensor t, const char* op, std::initializer_list<const Var*> inputs) {
  check_finite(t, op);
  auto v = std::make_shared<Tensor>(std::move(t));
  v->requires_grad = tape.recording() && any_requires_grad(inputs);
  return v;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

enum class Ew { Add, Sub, Mul };

Var elementwise(Tape& tape, Ew op, const Var& a, const Var& b, const char* name) {
  bool broadcast = false;
  if (a->shape != b->shape) {
    if (a->rank() == 2 && b->rank() == 1 && b->shape[0] == a->shape[1])
      broadcast = true;
    else
      throw DimensionError(std::string(name) + ": incompatible shapes " + shape_string(a->shape) +
                           " and " + shape_string(b->shape));
  }
  const std::size_t n = a->size();
  const std::size_t width = b->size();
  Tensor out(a->shape);
  for (std::size_t i = 0; i < n; ++i) {
    double bv = b->data[broadcast ? i % width : i];
    switch (op) {
      case Ew::Add: out.data[i] = a->data[i] + bv; break;
      case Ew::Sub: out.data[i] = a->data[i] - bv; break;
      case Ew::Mul: out.data[i] = a->data[i] * bv; break;
    }
  }
  Var y = output(tape, std::move(out), name, {&a, &b});
  if (y->requires_grad) {
    tape.record(y, [a, b, y, op, broadcast, n, width]() {
      const auto& g = y->grad;
      if (a->requires_grad) {
        a->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          double bv = b->data[broadcast ? i % width : i];
          a->grad[i] += op == Ew::Mul ? g[i] * bv : g[i];
        }
      }
      if (b->requires_grad) {
        b->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) {
          std::size_t j = broadcast ? i % width : i;
          double d = op == Ew::Add ? g[i] : op == Ew::Sub ? -g[i] : g[i] * a->data[i];
          b->grad[j] += d;
        }
      }
    });
  }
  return y;
}

}  // namespace

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)) {
  check_shape(shape);
  data.assign(shape_product(shape), fill);
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  check_shape(shape);
  if (shape_product(shape) != data.size())
    throw DimensionError("shape " + shape_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

Var make_var(Tensor t, bool requires_grad) {
  auto v = std::make_shared<Tensor>(std::move(t));
  v->requires_grad = requires_grad;
  return v;
}

Var make_vector(std::vector<double> values, bool requires_grad) {
  Shape s{values.size()};
  return make_var(Tensor(std::move(s), std::move(values)), requires_grad);
}

Var make_matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                bool requires_grad) {
  return make_var(Tensor({rows, cols}, std::move(values)), requires_grad);
}

Var zeros(Shape shape) { return make_var(Tensor(std::move(shape))); }

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

void Tape::record(Var output, std::function<void()> backward) {
  if (!recording_) return;
  nodes_.push_back({std::move(output), std::move(backward)});
}

void Tape::backward(const Var& loss) {
  if (loss->size() != 1)
    throw UsageError("backward: loss must be a scalar, got shape " + shape_string(loss->shape));
  if (!loss->requires_grad) return;
  for (auto& node : nodes_) {
    node.output->ensure_grad();
    node.output->zero_grad();
  }
  loss->ensure_grad();
  loss->grad[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
}

void Tape::clear() {
  nodes_.clear();
  stochastic_ = false;
}

Var matmul(Tape& tape, const Var& a, const Var& b) {
  // [m x k] * [k x n], [m x k] * [k] and [k] * [k x n]
  if (a->rank() == 2 && b->rank() == 2) {
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    if (b->shape[0] != k)
      throw DimensionError("matmul: inner dims differ " + shape_string(a->shape) + " * " +
                           shape_string(b->shape));
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        double av = a->data[i * k + p];
        const double* brow = &b->data[p * n];
        double* orow = &out.data[i * n];
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      }
    Var y = output(tape, std::move(out), "matmul", {&a, &b});
    if (y->requires_grad) {
      tape.record(y, [a, b, y, m, k, n]() {
        const auto& g = y->grad;
        if (a->requires_grad) {
          a->ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * b->data[p * n + j];
              a->grad[i * k + p] += acc;
            }
        }
        if (b->requires_grad) {
          b->ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
              double av = a->data[i * k + p];
              for (std::size_t j = 0; j < n; ++j) b->grad[p * n + j] += av * g[i * n + j];
            }
        }
      });
    }
    return y;
  }
  if (a->rank() == 2 && b->rank() == 1) {
    const std::size_t m = a->shape[0], k = a->shape[1];
    if (b->shape[0] != k)
      throw DimensionError("matmul: inner dims differ " + shape_string(a->shape) + " * " +
                           shape_string(b->shape));
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = &a->data[i * k];
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * b->data[p];
      out.data[i] = acc;
    }
    Var y = output(tape, std::move(out), "matmul", {&a, &b});
    if (y->requires_grad) {
      tape.record(y, [a, b, y, m, k]() {
        const auto& g = y->grad;
        if (a->requires_grad) {
          a->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            double gi = g[i];
            double* grow = &a->grad[i * k];
            for (std::size_t p = 0; p < k; ++p) grow[p] += gi * b->data[p];
          }
        }
        if (b->requires_grad) {
          b->ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            double gi = g[i];
            const double* arow = &a->data[i * k];
            for (std::size_t p = 0; p < k; ++p) b->grad[p] += arow[p] * gi;
          }
        }
      });
    }
    return y;
  }
  if (a->rank() == 1 && b->rank() == 2) {
    const std::size_t k = b->shape[0], n = b->shape[1];
    if (a->shape[0] != k)
      throw DimensionError("matmul: inner dims differ " + shape_string(a->shape) + " * " +
                           shape_string(b->shape));
    Tensor out({n});
    for (std::size_t p = 0; p < k; ++p) {
      double av = a->data[p];
      const double* brow = &b->data[p * n];
      for (std::size_t j = 0; j < n; ++j) out.data[j] += av * brow[j];
    }
    Var y = output(tape, std::move(out), "matmul", {&a, &b});
    if (y->requires_grad) {
      tape.record(y, [a, b, y, k, n]() {
        const auto& g = y->grad;
        if (a->requires_grad) {
          a->ensure_grad();
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += b->data[p * n + j] * g[j];
            a->grad[p] += acc;
          }
        }
        if (b->requires_grad) {
          b->ensure_grad();
          for (std::size_t p = 0; p < k; ++p) {
            double av = a->data[p];
            for (std::size_t j = 0; j < n; ++j) b->grad[p * n + j] += av * g[j];
          }
        }
      });
    }
    return y;
  }
  throw DimensionError("matmul: unsupported operand ranks " + shape_string(a->shape) + " * " +
                       shape_string(b->shape));
}

Var add(Tape& tape, const Var& a, const Var& b) { return elementwise(tape, Ew::Add, a, b, "add"); }
Var sub(Tape& tape, const Var& a, const Var& b) { return elementwise(tape, Ew::Sub, a, b, "sub"); }
Var mul(Tape& tape, const Var& a, const Var& b) { return elementwise(tape, Ew::Mul, a, b, "mul"); }

Var activation(Tape& tape, Activation kind, const Var& x) {
  Tensor out(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i)
    out.data[i] = kind == Activation::Sigmoid ? sigmoid_value(x->data[i]) : std::tanh(x->data[i]);
  Var y = output(tape, std::move(out), kind == Activation::Sigmoid ? "sigmoid" : "tanh", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y, kind]() {
      x->ensure_grad();
      for (std::size_t i = 0; i < y->size(); ++i) {
        double v = y->data[i];
        double d = kind == Activation::Sigmoid ? v * (1.0 - v) : 1.0 - v * v;
        x->grad[i] += y->grad[i] * d;
      }
    });
  }
  return y;
}

Var softmax_rows(Tape& tape, const Var& x) {
  const std::size_t m = x->rows(), n = x->cols();
  Tensor out(x->shape);
  for (std::size_t r = 0; r < m; ++r) {
    const double* in = &x->data[r * n];
    double* o = &out.data[r * n];
    double mx = *std::max_element(in, in + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (o[j] = std::exp(in[j] - mx));
    for (std::size_t j = 0; j < n; ++j) o[j] /= z;
  }
  Var y = output(tape, std::move(out), "softmax", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y, m, n]() {
      x->ensure_grad();
      for (std::size_t r = 0; r < m; ++r) {
        const double* yr = &y->data[r * n];
        const double* gr = &y->grad[r * n];
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += yr[j] * gr[j];
        for (std::size_t j = 0; j < n; ++j) x->grad[r * n + j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return y;
}

Var concat(Tape& tape, const Var& a, const Var& b) {
  if (a->rank() != b->rank() || a->rows() != b->rows())
    throw DimensionError("concat: leading dims differ " + shape_string(a->shape) + " vs " +
                         shape_string(b->shape));
  const std::size_t m = a->rows(), p = a->cols(), q = b->cols();
  Shape s = a->shape;
  s.back() = p + q;
  Tensor out(s);
  for (std::size_t r = 0; r < m; ++r) {
    std::copy_n(&a->data[r * p], p, &out.data[r * (p + q)]);
    std::copy_n(&b->data[r * q], q, &out.data[r * (p + q) + p]);
  }
  Var y = output(tape, std::move(out), "concat", {&a, &b});
  if (y->requires_grad) {
    tape.record(y, [a, b, y, m, p, q]() {
      for (std::size_t r = 0; r < m; ++r) {
        if (a->requires_grad) {
          a->ensure_grad();
          for (std::size_t j = 0; j < p; ++j) a->grad[r * p + j] += y->grad[r * (p + q) + j];
        }
        if (b->requires_grad) {
          b->ensure_grad();
          for (std::size_t j = 0; j < q; ++j) b->grad[r * q + j] += y->grad[r * (p + q) + p + j];
        }
      }
    });
  }
  return y;
}

Var dropout(Tape& tape, const Var& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
  if (!training || rate == 0.0) return x;
  tape.mark_stochastic();
  std::bernoulli_distribution keep(1.0 - rate);
  const double inv = 1.0 / (1.0 - rate);
  std::vector<double> mask(x->size());
  for (auto& v : mask) v = keep(rng) ? inv : 0.0;
  Tensor out(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) out.data[i] = x->data[i] * mask[i];
  Var y = output(tape, std::move(out), "dropout", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y, mask = std::move(mask)]() {
      x->ensure_grad();
      for (std::size_t i = 0; i < mask.size(); ++i) x->grad[i] += y->grad[i] * mask[i];
    });
  }
  return y;
}

Var sum(Tape& tape, const Var& x) {
  double s = 0.0;
  for (double v : x->data) s += v;
  Var y = output(tape, Tensor({1}, {s}), "sum", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y]() {
      x->ensure_grad();
      for (auto& g : x->grad) g += y->grad[0];
    });
  }
  return y;
}

Var scale(Tape& tape, const Var& x, double factor) {
  Tensor out(x->shape);
  for (std::size_t i = 0; i < x->size(); ++i) out.data[i] = x->data[i] * factor;
  Var y = output(tape, std::move(out), "scale", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y, factor]() {
      x->ensure_grad();
      for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += y->grad[i] * factor;
    });
  }
  return y;
}

Var slice(Tape& tape, const Var& x, std::size_t offset, std::size_t length) {
  if (x->rank() != 1 || length == 0 || offset + length > x->size())
    throw DimensionError("slice: range [" + std::to_string(offset) + ", " +
                         std::to_string(offset + length) + ") outside " + shape_string(x->shape));
  Tensor out({length});
  std::copy_n(&x->data[offset], length, out.data.begin());
  Var y = output(tape, std::move(out), "slice", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y, offset, length]() {
      x->ensure_grad();
      for (std::size_t i = 0; i < length; ++i) x->grad[offset + i] += y->grad[i];
    });
  }
  return y;
}

Var row(Tape& tape, const Var& x, std::size_t index) {
  if (x->rank() != 2 || index >= x->shape[0])
    throw IndexError("row " + std::to_string(index) + " outside " + shape_string(x->shape));
  const std::size_t n = x->shape[1];
  Tensor out({n});
  std::copy_n(&x->data[index * n], n, out.data.begin());
  Var y = output(tape, std::move(out), "row", {&x});
  if (y->requires_grad) {
    tape.record(y, [x, y, index, n]() {
      x->ensure_grad();
      for (std::size_t j = 0; j < n; ++j) x->grad[index * n + j] += y->grad[j];
    });
  }
  return y;
}

Var stack_rows(Tape& tape, std::span<const Var> rows) {
  if (rows.empty()) throw UsageError("stack_rows: no rows");
  const std::size_t n = rows[0]->size();
  Tensor out({rows.size(), n});
  bool needs = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r]->rank() != 1 || rows[r]->size() != n)
      throw DimensionError("stack_rows: row " + std::to_string(r) + " has shape " +
                           shape_string(rows[r]->shape));
    std::copy_n(rows[r]->data.begin(), n, &out.data[r * n]);
    needs = needs || rows[r]->requires_grad;
  }
  check_finite(out, "stack_rows");
  auto y = std::make_shared<Tensor>(std::move(out));
  y->requires_grad = tape.recording() && needs;
  if (y->requires_grad) {
    std::vector<Var> inputs(rows.begin(), rows.end());
    tape.record(y, [inputs = std::move(inputs), y, n]() {
      for (std::size_t r = 0; r < inputs.size(); ++r) {
        if (!inputs[r]->requires_grad) continue;
        inputs[r]->ensure_grad();
        for (std::size_t j = 0; j < n; ++j) inputs[r]->grad[j] += y->grad[r * n + j];
      }
    });
  }
  return y;
}

Var gather_rows(Tape& tape, const Var& table, std::span<const int> ids) {
  if (table->rank() != 2) throw DimensionError("gather_rows: table must be a matrix");
  if (ids.empty()) throw UsageError("gather_rows: no ids");
  const std::size_t v = table->shape[0], d = table->shape[1];
  Tensor out({ids.size(), d});
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || static_cast<std::size_t>(ids[t]) >= v)
      throw IndexError("token id " + std::to_string(ids[t]) + " outside vocabulary of size " +
                       std::to_string(v));
    std::copy_n(&table->data[ids[t] * d], d, &out.data[t * d]);
  }
  Var y = output(tape, std::move(out), "gather_rows", {&table});
  if (y->requires_grad) {
    std::vector<int> idx(ids.begin(), ids.end());
    tape.record(y, [table, y, idx = std::move(idx), d]() {
      table->ensure_grad();
      for (std::size_t t = 0; t < idx.size(); ++t)
        for (std::size_t j = 0; j < d; ++j) table->grad[idx[t] * d + j] += y->grad[t * d + j];
    });
  }
  return y;
}

Var interpolate_rows(Tape& tape, const Var& rows, const Var& weights, const Var& value) {
  if (rows->rank() != 2 || weights->rank() != 1 || value->rank() != 1 ||
      weights->size() != rows->shape[0] || value->size() != rows->shape[1])
    throw DimensionError("interpolate_rows: rows " + shape_string(rows->shape) + ", weights " +
                         shape_string(weights->shape) + ", value " + shape_string(value->shape));
  const std::size_t m = rows->shape[0], n = rows->shape[1];
  Tensor out(rows->shape);
  for (std::size_t i = 0; i < m; ++i) {
    double s = weights->data[i];
    for (std::size_t j = 0; j < n; ++j)
      out.data[i * n + j] = (1.0 - s) * rows->data[i * n + j] + s * value->data[j];
  }
  Var y = output(tape, std::move(out), "interpolate_rows", {&rows, &weights, &value});
  if (y->requires_grad) {
    tape.record(y, [rows, weights, value, y, m, n]() {
      const auto& g = y->grad;
      if (rows->requires_grad) rows->ensure_grad();
      if (weights->requires_grad) weights->ensure_grad();
      if (value->requires_grad) value->ensure_grad();
      for (std::size_t i = 0; i < m; ++i) {
        double s = weights->data[i];
        double ds = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double gij = g[i * n + j];
          if (rows->requires_grad) rows->grad[i * n + j] += (1.0 - s) * gij;
          if (value->requires_grad) value->grad[j] += s * gij;
          ds += gij * (value->data[j] - rows->data[i * n + j]);
        }
        if (weights->requires_grad) weights->grad[i] += ds;
      }
    });
  }
  return y;
}

Var masked_cross_entropy(Tape& tape, const Var& logits, std::span<const int> targets,
                         int ignore_id) {
  const std::size_t m = logits->rows(), n = logits->cols();
  if (targets.size() != m)
    throw UsageError("cross entropy: " + std::to_string(m) + " logit rows but " +
                     std::to_string(targets.size()) + " targets");
  std::size_t count = 0;
  for (int t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= n)
      throw IndexError("target id " + std::to_string(t) + " outside " + std::to_string(n) +
                       " classes");
    ++count;
  }
  if (count == 0) throw UsageError("cross entropy: every target position is padding");

  std::vector<double> probs(m * n, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    if (targets[r] == ignore_id) continue;
    std::span<const double> rowv(&logits->data[r * n], n);
    auto lp = log_softmax_values(rowv);
    total -= lp[targets[r]];
    for (std::size_t j = 0; j < n; ++j) probs[r * n + j] = std::exp(lp[j]);
  }
  const double inv = 1.0 / static_cast<double>(count);
  Var y = output(tape, Tensor({1}, {total * inv}), "cross_entropy", {&logits});
  if (y->requires_grad) {
    std::vector<int> tg(targets.begin(), targets.end());
    tape.record(y, [logits, y, probs = std::move(probs), tg = std::move(tg), ignore_id, m, n,
                    inv]() {
      logits->ensure_grad();
      double g = y->grad[0] * inv;
      for (std::size_t r = 0; r < m; ++r) {
        if (tg[r] == ignore_id) continue;
        for (std::size_t j = 0; j < n; ++j) {
          double d = probs[r * n + j] - (static_cast<int>(j) == tg[r] ? 1.0 : 0.0);
          logits->grad[r * n + j] += g * d;
        }
      }
    });
  }
  return y;
}

std::vector<double> log_softmax_values(std::span<const double> x) {
  double mx = *std::max_element(x.begin(), x.end());
  double z = 0.0;
  for (double v : x) z += std::exp(v - mx);
  double lz = mx + std::log(z);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lz;
  return out;
}

std::size_t argmax(std::span<const double> x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i)
    if (x[i] > x[best]) best = i;
  return best;
}

}  // namespace nse
