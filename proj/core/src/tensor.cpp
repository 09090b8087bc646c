#include "lcv/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "lcv/error.hpp"

namespace lcv::ad {

size_t shape_size(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

namespace {

void check_finite(const Node& n) {
#ifndef NDEBUG
  for (double v : n.value)
    if (!std::isfinite(v))
      throw internal_error("NonFinite", "non-finite tensor value");
#else
  (void)n;
#endif
}

[[noreturn]] void shape_mismatch(const char* op) {
  throw internal_error("ShapeMismatch",
                       std::string("incompatible shapes in ") + op);
}

std::shared_ptr<Node> make_node(Shape shape, std::vector<double> value,
                                std::vector<std::shared_ptr<Node>> parents,
                                std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (const auto& p : parents)
    if (p->requires_grad) node->requires_grad = true;
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  check_finite(*node);
  return node;
}

bool same_shape(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape();
}

}  // namespace

Tensor Tensor::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_size(shape) != data.size())
    shape_mismatch("leaf");
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  check_finite(*node);
  return Tensor(node);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return leaf({1}, {v}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) shape_mismatch("item");
  return node_->value[0];
}

void backward(const Tensor& root) {
  if (root.size() != 1)
    throw internal_error("ShapeMismatch", "backward root must be scalar");
  if (!root.requires_grad()) return;

  // Iterative reverse topological order over the recorded graph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second)
        stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2) shape_mismatch("matmul");
  size_t r = a.shape()[0], c = a.shape()[1];
  bool vec = b.shape().size() == 1;
  size_t n = vec ? 1 : b.shape()[1];
  if ((vec ? b.shape()[0] : b.shape()[0]) != c) shape_mismatch("matmul");

  std::vector<double> out(r * n, 0.0);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (size_t i = 0; i < r; ++i)
    for (size_t k = 0; k < c; ++k) {
      double aik = av[i * c + k];
      for (size_t j = 0; j < n; ++j) out[i * n + j] += aik * bv[k * n + j];
    }

  auto an = a.node(), bn = b.node();
  Shape out_shape = vec ? Shape{r} : Shape{r, n};
  return Tensor(make_node(
      std::move(out_shape), std::move(out), {an, bn},
      [an, bn, r, c, n](Node& self) {
        if (an->requires_grad) {
          an->ensure_grad();
          for (size_t i = 0; i < r; ++i)
            for (size_t k = 0; k < c; ++k) {
              double acc = 0.0;
              for (size_t j = 0; j < n; ++j)
                acc += self.grad[i * n + j] * bn->value[k * n + j];
              an->grad[i * c + k] += acc;
            }
        }
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (size_t k = 0; k < c; ++k)
            for (size_t j = 0; j < n; ++j) {
              double acc = 0.0;
              for (size_t i = 0; i < r; ++i)
                acc += an->value[i * c + k] * self.grad[i * n + j];
              bn->grad[k * n + j] += acc;
            }
        }
      }));
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) shape_mismatch("add");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] + b.value()[i];
  auto an = a.node(), bn = b.node();
  return Tensor(make_node(a.shape(), std::move(out), {an, bn},
                          [an, bn](Node& self) {
                            for (auto* p : {an.get(), bn.get()}) {
                              if (!p->requires_grad) continue;
                              p->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                p->grad[i] += self.grad[i];
                            }
                          }));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b)) shape_mismatch("sub");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] - b.value()[i];
  auto an = a.node(), bn = b.node();
  return Tensor(make_node(a.shape(), std::move(out), {an, bn},
                          [an, bn](Node& self) {
                            if (an->requires_grad) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i];
                            }
                            if (bn->requires_grad) {
                              bn->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                bn->grad[i] -= self.grad[i];
                            }
                          }));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  // Scalar x tensor in either order, or elementwise on equal shapes.
  if (a.size() == 1 && b.size() != 1) return mul(b, a);
  if (b.size() == 1 && a.size() != 1) {
    std::vector<double> out(a.size());
    double s = b.value()[0];
    for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
    auto an = a.node(), bn = b.node();
    return Tensor(make_node(a.shape(), std::move(out), {an, bn},
                            [an, bn](Node& self) {
                              if (an->requires_grad) {
                                an->ensure_grad();
                                double s = bn->value[0];
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  an->grad[i] += self.grad[i] * s;
                              }
                              if (bn->requires_grad) {
                                bn->ensure_grad();
                                double acc = 0.0;
                                for (size_t i = 0; i < self.grad.size(); ++i)
                                  acc += self.grad[i] * an->value[i];
                                bn->grad[0] += acc;
                              }
                            }));
  }
  if (!same_shape(a, b)) shape_mismatch("mul");
  std::vector<double> out(a.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto an = a.node(), bn = b.node();
  return Tensor(make_node(a.shape(), std::move(out), {an, bn},
                          [an, bn](Node& self) {
                            if (an->requires_grad) {
                              an->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                an->grad[i] += self.grad[i] * bn->value[i];
                            }
                            if (bn->requires_grad) {
                              bn->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                bn->grad[i] += self.grad[i] * an->value[i];
                            }
                          }));
}

Tensor scalar_mul(double k, const Tensor& t) {
  std::vector<double> out(t.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = k * t.value()[i];
  auto tn = t.node();
  return Tensor(make_node(t.shape(), std::move(out), {tn},
                          [tn, k](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              tn->grad[i] += k * self.grad[i];
                          }));
}

Tensor vexp(const Tensor& t) {
  std::vector<double> out(t.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(t.value()[i]);
  auto tn = t.node();
  return Tensor(make_node(t.shape(), std::move(out), {tn},
                          [tn](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              tn->grad[i] += self.grad[i] * self.value[i];
                          }));
}

Tensor vlog(const Tensor& t) {
  std::vector<double> out(t.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(t.value()[i]);
  auto tn = t.node();
  return Tensor(make_node(t.shape(), std::move(out), {tn},
                          [tn](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              tn->grad[i] += self.grad[i] / tn->value[i];
                          }));
}

Tensor relu(const Tensor& t) {
  std::vector<double> out(t.size());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = t.value()[i] > 0.0 ? t.value()[i] : 0.0;
  auto tn = t.node();
  return Tensor(make_node(t.shape(), std::move(out), {tn},
                          [tn](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              if (tn->value[i] > 0.0)
                                tn->grad[i] += self.grad[i];
                          }));
}

Tensor squared_norm(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.value()) acc += v * v;
  auto tn = t.node();
  return Tensor(make_node({1}, {acc}, {tn}, [tn](Node& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (size_t i = 0; i < tn->value.size(); ++i)
      tn->grad[i] += 2.0 * tn->value[i] * self.grad[0];
  }));
}

Tensor softmax(const Tensor& t) {
  if (t.shape().empty()) shape_mismatch("softmax");
  size_t axis = t.shape().back();
  size_t rows = t.size() / axis;
  std::vector<double> out(t.size());
  for (size_t r = 0; r < rows; ++r) {
    const double* in = t.value().data() + r * axis;
    double mx = *std::max_element(in, in + axis);
    double sum = 0.0;
    for (size_t i = 0; i < axis; ++i) {
      out[r * axis + i] = std::exp(in[i] - mx);
      sum += out[r * axis + i];
    }
    for (size_t i = 0; i < axis; ++i) out[r * axis + i] /= sum;
  }
  auto tn = t.node();
  return Tensor(make_node(t.shape(), std::move(out), {tn},
                          [tn, axis, rows](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            for (size_t r = 0; r < rows; ++r) {
                              const double* y = self.value.data() + r * axis;
                              const double* g = self.grad.data() + r * axis;
                              double inner = 0.0;
                              for (size_t i = 0; i < axis; ++i)
                                inner += g[i] * y[i];
                              for (size_t i = 0; i < axis; ++i)
                                tn->grad[r * axis + i] +=
                                    y[i] * (g[i] - inner);
                            }
                          }));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  if (!same_shape(a, b) || a.shape().size() != 1) shape_mismatch("dot");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a.value()[i] * b.value()[i];
  auto an = a.node(), bn = b.node();
  return Tensor(make_node({1}, {acc}, {an, bn}, [an, bn](Node& self) {
    double g = self.grad[0];
    if (an->requires_grad) {
      an->ensure_grad();
      for (size_t i = 0; i < an->value.size(); ++i)
        an->grad[i] += g * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (size_t i = 0; i < bn->value.size(); ++i)
        bn->grad[i] += g * an->value[i];
    }
  }));
}

Tensor concat(const std::vector<Tensor>& parts) {
  if (parts.empty()) shape_mismatch("concat");
  std::vector<double> out;
  std::vector<std::shared_ptr<Node>> nodes;
  std::vector<size_t> offsets;
  for (const auto& p : parts) {
    if (p.shape().size() != 1) shape_mismatch("concat");
    offsets.push_back(out.size());
    out.insert(out.end(), p.value().begin(), p.value().end());
    nodes.push_back(p.node());
  }
  auto parents = nodes;
  size_t total = out.size();  // read before the move below materializes
  return Tensor(make_node(
      {total}, std::move(out), std::move(parents),
      [nodes, offsets](Node& self) {
        for (size_t p = 0; p < nodes.size(); ++p) {
          if (!nodes[p]->requires_grad) continue;
          nodes[p]->ensure_grad();
          for (size_t i = 0; i < nodes[p]->value.size(); ++i)
            nodes[p]->grad[i] += self.grad[offsets[p] + i];
        }
      }));
}

Tensor pick(const Tensor& t, size_t index) {
  if (t.shape().size() != 1 || index >= t.size()) shape_mismatch("pick");
  auto tn = t.node();
  return Tensor(make_node({1}, {t.value()[index]}, {tn},
                          [tn, index](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            tn->grad[index] += self.grad[0];
                          }));
}

Tensor mean(const Tensor& t) {
  double acc = 0.0;
  for (double v : t.value()) acc += v;
  double n = double(t.size());
  auto tn = t.node();
  return Tensor(make_node({1}, {acc / n}, {tn}, [tn, n](Node& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    double g = self.grad[0] / n;
    for (size_t i = 0; i < tn->value.size(); ++i) tn->grad[i] += g;
  }));
}

Tensor dropout(const Tensor& t, double p, bool train_mode,
               std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0)
    throw internal_error("ShapeMismatch", "dropout p must lie in [0,1)");
  if (!train_mode || p == 0.0) return t;
  double keep = 1.0 - p;
  auto mask = std::make_shared<std::vector<double>>(t.size());
  std::vector<double> out(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    double u = double(rng() >> 11) * 0x1.0p-53;
    (*mask)[i] = u < keep ? 1.0 / keep : 0.0;  // inverted scaling
    out[i] = t.value()[i] * (*mask)[i];
  }
  auto tn = t.node();
  return Tensor(make_node(t.shape(), std::move(out), {tn},
                          [tn, mask](Node& self) {
                            if (!tn->requires_grad) return;
                            tn->ensure_grad();
                            for (size_t i = 0; i < self.grad.size(); ++i)
                              tn->grad[i] += self.grad[i] * (*mask)[i];
                          }));
}

Tensor cross_entropy_with_softmax(const Tensor& logits, int label) {
  if (logits.shape().size() != 1 || label < 0 ||
      size_t(label) >= logits.size())
    shape_mismatch("cross_entropy_with_softmax");
  const auto& v = logits.value();
  double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - mx);
  double loss = std::log(sum) + mx - v[size_t(label)];
  auto ln = logits.node();
  return Tensor(make_node({1}, {loss}, {ln}, [ln, label, mx, sum](Node& self) {
    if (!ln->requires_grad) return;
    ln->ensure_grad();
    double g = self.grad[0];
    for (size_t i = 0; i < ln->value.size(); ++i) {
      double soft = std::exp(ln->value[i] - mx) / sum;
      ln->grad[i] += g * (soft - (i == size_t(label) ? 1.0 : 0.0));
    }
  }));
}

}  // namespace lcv::ad
