#include "histoport/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

namespace histoport {

namespace {
std::atomic<size_t> g_bytes_current{0};
std::atomic<size_t> g_bytes_peak{0};

void count_alloc(size_t bytes) {
  size_t cur = g_bytes_current.fetch_add(bytes) + bytes;
  size_t peak = g_bytes_peak.load();
  while (cur > peak && !g_bytes_peak.compare_exchange_weak(peak, cur)) {
  }
}
}  // namespace

size_t tensor_bytes_current() { return g_bytes_current.load(); }
size_t tensor_bytes_peak() { return g_bytes_peak.load(); }
void tensor_bytes_reset_peak() { g_bytes_peak.store(g_bytes_current.load()); }

size_t shape_numel(const Shape& s) {
  size_t n = 1;
  for (int d : s) {
    if (d < 0) throw std::invalid_argument("negative dimension");
    n *= size_t(d);
  }
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

Node::Node() = default;

Node::~Node() {
  g_bytes_current.fetch_sub((value.capacity() + grad.capacity()) * sizeof(double));
}

void Node::ensure_grad() {
  if (grad.size() != value.size()) {
    grad.assign(value.size(), 0.0);
    count_alloc(grad.capacity() * sizeof(double));
  }
}

namespace {
std::shared_ptr<Node> new_node(Shape shape, std::vector<double> value) {
  if (shape_numel(shape) != value.size())
    throw std::invalid_argument("shape/value size mismatch");
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  count_alloc(n->value.capacity() * sizeof(double));
  return n;
}
}  // namespace

Tensor Tensor::zeros(const Shape& s, bool requires_grad) {
  auto n = new_node(s, std::vector<double>(shape_numel(s), 0.0));
  n->requires_grad = requires_grad;
  n->leaf = true;
  n->op = "zeros";
  return Tensor(n);
}

Tensor Tensor::full(const Shape& s, double v, bool requires_grad) {
  auto n = new_node(s, std::vector<double>(shape_numel(s), v));
  n->requires_grad = requires_grad;
  n->leaf = true;
  n->op = "full";
  return Tensor(n);
}

Tensor Tensor::from_data(const Shape& s, std::vector<double> data,
                         bool requires_grad) {
  auto n = new_node(s, std::move(data));
  n->requires_grad = requires_grad;
  n->leaf = true;
  n->op = "data";
  return Tensor(n);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_data({1}, {v}, requires_grad);
}

Tensor Tensor::randn(const Shape& s, Rng& rng, double stddev, bool requires_grad) {
  std::vector<double> d(shape_numel(s));
  for (double& x : d) x = stddev * rng.normal();
  return from_data(s, std::move(d), requires_grad);
}

std::vector<double>& Tensor::grads() {
  node_->ensure_grad();
  return node_->grad;
}

double Tensor::scalar_value() const {
  if (size() != 1) throw std::invalid_argument("scalar_value on non-scalar tensor");
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() {
  if (size() != 1)
    throw std::invalid_argument("backward() requires a scalar root");
  // Iterative post-order topological sort.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node* p = n->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  // Interior grads are scratch for this pass; leaf grads accumulate across
  // passes (optimizer's contract).
  for (Node* n : order) {
    n->ensure_grad();
    if (!n->leaf) std::fill(n->grad.begin(), n->grad.end(), 0.0);
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

namespace detail {
Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn, const char* op) {
  auto n = new_node(std::move(shape), std::move(value));
  n->op = op;
  for (const Tensor& p : parents) {
    if (!p.defined()) throw std::invalid_argument("undefined parent tensor");
    n->parents.push_back(p.node());
    if (p.requires_grad()) n->requires_grad = true;
  }
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return Tensor(n);
}
}  // namespace detail

}  // namespace histoport
