#ifndef NSE_TENSOR_HPP
#define NSE_TENSOR_HPP

// Dense row-major tensors of doubles with a tape-based reverse-mode
// autodiff. Tensors are rank 1 (vectors) or rank 2 (matrices); the only
// broadcast supported is a vector over the rows of a matrix.

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nse/errors.hpp"

namespace nse {

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

struct Tensor {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient is accumulated
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  // A vector is treated as a single row.
  std::size_t rows() const { return shape.size() == 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.empty() ? 0 : shape.back(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();
  void zero_grad();
};

using Var = std::shared_ptr<Tensor>;

Var make_var(Tensor t, bool requires_grad = false);
Var make_vector(std::vector<double> values, bool requires_grad = false);
Var make_matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                bool requires_grad = false);
Var zeros(Shape shape);

std::string shape_string(const Shape& shape);

// Ordered record of differentiable ops. A tape built with recording=false
// evaluates forward only and never allocates gradients (inference mode).
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }

  // True once any op drew random numbers (training-mode dropout).
  bool stochastic() const { return stochastic_; }
  void mark_stochastic() { stochastic_ = true; }

  void record(Var output, std::function<void()> backward);

  // Seeds d(loss)=1 and replays the tape in reverse. Gradients of leaf
  // tensors accumulate across calls; intermediate gradients are reset first.
  void backward(const Var& loss);

  void clear();

 private:
  struct Node {
    Var output;
    std::function<void()> backward;
  };
  bool recording_;
  bool stochastic_ = false;
  std::vector<Node> nodes_;
};

Var matmul(Tape& tape, const Var& a, const Var& b);
Var add(Tape& tape, const Var& a, const Var& b);
Var sub(Tape& tape, const Var& a, const Var& b);
Var mul(Tape& tape, const Var& a, const Var& b);

enum class Activation { Sigmoid, Tanh };
Var activation(Tape& tape, Activation kind, const Var& x);
inline Var sigmoid(Tape& tape, const Var& x) { return activation(tape, Activation::Sigmoid, x); }
inline Var tanh(Tape& tape, const Var& x) { return activation(tape, Activation::Tanh, x); }

Var softmax_rows(Tape& tape, const Var& x);
Var concat(Tape& tape, const Var& a, const Var& b);
Var dropout(Tape& tape, const Var& x, double rate, bool training, Rng& rng);

Var sum(Tape& tape, const Var& x);
Var scale(Tape& tape, const Var& x, double factor);
Var slice(Tape& tape, const Var& x, std::size_t offset, std::size_t length);
Var row(Tape& tape, const Var& x, std::size_t index);
Var stack_rows(Tape& tape, std::span<const Var> rows);
Var gather_rows(Tape& tape, const Var& table, std::span<const int> ids);

// out[i] = (1 - weights[i]) * rows[i] + weights[i] * value
Var interpolate_rows(Tape& tape, const Var& rows, const Var& weights, const Var& value);

// Mean of -log softmax(logits[t])[targets[t]] over positions whose target
// is not `ignore_id`.
Var masked_cross_entropy(Tape& tape, const Var& logits, std::span<const int> targets,
                         int ignore_id);

// Non-differentiable helpers.
std::vector<double> log_softmax_values(std::span<const double> x);
std::size_t argmax(std::span<const double> x);  // lowest index on ties

}  // namespace nse

#endif  // NSE_TENSOR_HPP
