#ifndef LCV_TENSOR_HPP
#define LCV_TENSOR_HPP

#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace lcv::ad {

using Shape = std::vector<size_t>;

size_t shape_size(const Shape& shape);

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Dense float64 tensor with reverse-mode gradient tracking. Value
// semantics over a shared node: copies alias the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor leaf(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  size_t size() const { return node_->value.size(); }
  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& value_mut() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

  double item() const;  // scalar tensors only

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// Reverse accumulation from a scalar root; gradients add into every
// reachable node with requires_grad.
void backward(const Tensor& root);

// {r,c} x {c} -> {r}   and   {r,c} x {c,n} -> {r,n}
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
// Elementwise product; either operand may be a {1} scalar.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scalar_mul(double k, const Tensor& t);
Tensor vexp(const Tensor& t);
Tensor vlog(const Tensor& t);
Tensor relu(const Tensor& t);
Tensor squared_norm(const Tensor& t);           // -> {1}
Tensor softmax(const Tensor& t);                // over the last axis
Tensor dot(const Tensor& a, const Tensor& b);   // vectors -> {1}
Tensor concat(const std::vector<Tensor>& parts);  // vectors -> vector
Tensor pick(const Tensor& t, size_t index);     // -> {1}
Tensor mean(const Tensor& t);                   // -> {1}
// Inverted-scaling dropout: identity in eval mode and at p = 0.
Tensor dropout(const Tensor& t, double p, bool train_mode,
               std::mt19937_64& rng);
// Numerically stable softmax + cross-entropy against an integer label.
Tensor cross_entropy_with_softmax(const Tensor& logits, int label);

}  // namespace lcv::ad

#endif  // LCV_TENSOR_HPP
