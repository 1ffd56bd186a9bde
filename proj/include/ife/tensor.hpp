#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ife {

using Shape = std::vector<int>;

int shape_size(const Shape& s);
std::string shape_str(const Shape& s);

// Thrown by ops on dimension mismatches; the message names the offending
// dimension and its value.
struct ShapeError : std::invalid_argument {
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

struct ValueError : std::invalid_argument {
  explicit ValueError(const std::string& what) : std::invalid_argument(what) {}
};

class Tape;

namespace detail {
struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  Tape* tape = nullptr;  // set when produced by a recorded op
  int node = -1;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};
}  // namespace detail

// Value-semantic handle to an n-dimensional double array. Copying a Tensor
// aliases the same storage; clone() makes a deep copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values);
  static Tensor scalar(double value);
  // Leaf with requires_grad set; the usual way to make a parameter.
  static Tensor param(Shape shape, std::vector<double> values);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int size() const { return static_cast<int>(impl_->data.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }

  double* data() { return impl_->data.data(); }
  const double* data() const { return impl_->data.data(); }
  std::vector<double>& values() { return impl_->data; }
  const std::vector<double>& values() const { return impl_->data; }
  double operator[](int i) const { return impl_->data[static_cast<size_t>(i)]; }

  // Scalar accessor; throws unless size()==1.
  double value() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool b) { impl_->requires_grad = b; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::vector<double>& grad();
  const std::vector<double>& grad() const;
  void zero_grad();

  // Runs reverse-mode accumulation from this scalar through its tape.
  // Leaf gradients accumulate across calls until zeroed.
  void backward() const;

  Tensor clone() const;

  std::shared_ptr<detail::TensorImpl> impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;
  friend class Tape;
};

// Records one node per tensor op, in execution order. Rebuilt per forward
// pass; confined to a single thread together with the tensors on it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // RAII activation: ops record onto the innermost active tape.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  static Tape* active();

  int add_node(std::shared_ptr<detail::TensorImpl> out, std::function<void()> backward);
  size_t node_count() const { return nodes_.size(); }

  // Reverse sweep from `loss` (a scalar recorded on this tape). Intermediate
  // gradients are reset per sweep; leaves keep accumulating.
  void backward_from(const Tensor& loss);

 private:
  struct Node {
    std::shared_ptr<detail::TensorImpl> out;
    std::function<void()> backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace ife
