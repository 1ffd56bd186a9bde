#include "ife/tensor.hpp"

#include <sstream>

namespace ife {

int shape_size(const Shape& s) {
  int n = 1;
  for (int d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "x" : "") << s[i];
  os << "]";
  return os.str();
}

namespace {
thread_local Tape* g_active_tape = nullptr;

std::shared_ptr<detail::TensorImpl> make_impl(Shape shape, std::vector<double> data) {
  if (shape_size(shape) != static_cast<int>(data.size()))
    throw ShapeError("tensor shape " + shape_str(shape) + " does not match data length " +
                     std::to_string(data.size()));
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return impl;
}
}  // namespace

Tensor Tensor::zeros(Shape shape) {
  int n = shape_size(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(static_cast<size_t>(n), 0.0)));
}

Tensor Tensor::full(Shape shape, double value) {
  int n = shape_size(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(static_cast<size_t>(n), value)));
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
  return Tensor(make_impl(std::move(shape), std::move(values)));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

Tensor Tensor::param(Shape shape, std::vector<double> values) {
  Tensor t = from(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

double Tensor::value() const {
  if (size() != 1) throw ShapeError("expected a scalar tensor, got shape " + shape_str(shape()));
  return impl_->data[0];
}

std::vector<double>& Tensor::grad() {
  impl_->ensure_grad();
  return impl_->grad;
}

const std::vector<double>& Tensor::grad() const {
  impl_->ensure_grad();
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0);
}

void Tensor::backward() const {
  if (size() != 1) throw ValueError("backward() requires a scalar loss, got shape " + shape_str(shape()));
  if (impl_->tape == nullptr)
    throw ValueError("backward() requires the loss to be recorded on an active tape");
  impl_->tape->backward_from(*this);
}

Tensor Tensor::clone() const {
  Tensor t = Tensor::from(impl_->shape, impl_->data);
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

Tape::Scope::Scope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

int Tape::add_node(std::shared_ptr<detail::TensorImpl> out, std::function<void()> backward) {
  nodes_.push_back(Node{std::move(out), std::move(backward)});
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::backward_from(const Tensor& loss) {
  int start = loss.impl()->node;
  if (start < 0 || loss.impl()->tape != this)
    throw ValueError("loss tensor is not a node of this tape");
  // Intermediate (node-output) grads are per-sweep; leaves accumulate.
  for (int i = 0; i <= start; ++i) {
    auto& out = nodes_[static_cast<size_t>(i)].out;
    out->grad.assign(out->data.size(), 0.0);
  }
  loss.impl()->grad[0] = 1.0;
  for (int i = start; i >= 0; --i) nodes_[static_cast<size_t>(i)].backward();
}

}  // namespace ife
