#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "histoport/mat.hpp"
#include "histoport/rng.hpp"

namespace histoport {

using Shape = std::vector<int>;

size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Reverse-mode autodiff node.  Values are f64; graphs are built eagerly by
/// the free-function ops below and torn down when the last Tensor handle
/// drops.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first use
  bool requires_grad = false;
  bool leaf = false;
  const char* op = "";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad, accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;

  Node();
  ~Node();
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  void ensure_grad();
};

/// Live tensor allocation counters (value + grad buffers), for the bench
/// report.
size_t tensor_bytes_current();
size_t tensor_bytes_peak();
void tensor_bytes_reset_peak();

/// Value-semantic handle to a Node.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}

  static Tensor zeros(const Shape& s, bool requires_grad = false);
  static Tensor full(const Shape& s, double v, bool requires_grad = false);
  static Tensor from_data(const Shape& s, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor randn(const Shape& s, Rng& rng, double stddev,
                      bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int ndim() const { return int(node_->shape.size()); }
  int dim(int i) const { return node_->shape[i]; }
  size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& grads();
  double scalar_value() const;

  /// Reverse pass from a scalar.  Non-leaf grads are reset first; leaf grads
  /// accumulate across calls until zero_grad().
  void backward();
  void zero_grad();

  std::shared_ptr<Node> node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

namespace detail {
/// Op factory: wraps a computed forward value into a graph node.
Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward_fn, const char* op);
}  // namespace detail

// ---- elementwise / linear ----
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);
Tensor elu(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor sum_all(const Tensor& a);         // -> scalar
Tensor matmul(const Tensor& a, const Tensor& b);  // 2-D only

// ---- shape ----
Tensor reshape(const Tensor& a, const Shape& s);
Tensor slice_axis0(const Tensor& a, int start, int len);
Tensor concat_axis0(const std::vector<Tensor>& parts);
Tensor index_select_axis0(const Tensor& a, const std::vector<int>& idx);

// ---- channel ops on (C,H,W) ----
/// out[s,:,:] = sum_d M(s,d) * a[d,:,:]  (M is a fixed matrix, not a leaf).
Tensor channel_matmul(const Mat& m, const Tensor& a);
Tensor add_channel_bias(const Tensor& a, const Tensor& bias);  // bias shape (C)

// ---- spatial ops on (C,H,W) ----
Tensor pad2d(const Tensor& a, int pad);
Tensor slice2d(const Tensor& a, int r0, int c0, int h, int w);
/// Valid cross-correlation with zero padding `pad` on each side, stride 1.
/// kernel shape (C_out, C_in, kh, kw).
Tensor conv2d(const Tensor& input, const Tensor& kernel, int pad);
Tensor max_pool2d(const Tensor& a);         // 2x2/2; spatial dims must be even
Tensor avg_pool2d(const Tensor& a);         // 2x2/2; spatial dims must be even
Tensor upsample_bilinear2(const Tensor& a); // x2, align-corners

/// Quarter-turn rotation of image content, k * 90 degrees, exact permutation.
Tensor rot90(const Tensor& a, int k);
/// Content rotation by theta about the pixel center, bilinear, zeros outside.
/// Decomposes into rot90 turns plus a residual in [0, pi/2) so that quarter
/// turns are exact and rotate(t, theta + pi/2) == rotate(rot90(t,1), theta)
/// holds to the last bit.
Tensor rotate_bilinear(const Tensor& a, double theta);

// ---- reductions / losses ----
Tensor softmax_axis0(const Tensor& a);  // independent over trailing indices
Tensor softmax_flat(const Tensor& a);   // over every element
/// -log softmax(logits_flat)[target], numerically stable.
Tensor cross_entropy(const Tensor& logits, size_t target);

// ---- non-diff helpers ----
size_t argmax_flat(const Tensor& a);  // ties -> lowest flat index

}  // namespace histoport
