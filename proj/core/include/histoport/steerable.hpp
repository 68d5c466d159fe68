#pragma once
#include <optional>
#include <string>
#include <vector>

#include "histoport/fields.hpp"

namespace histoport {

/// One analytic solution of the kernel steerability constraint
///   kappa(R_theta x) = rho_out(theta) kappa(x) rho_in(theta)^{-1},
/// rasterized on a k x k grid.  raster layout: [oc][ic][row][col].
struct BasisElement {
  int ring = 0;
  int mu = 0;        // angular frequency
  char type = 'A';   // 'A' or 'B' (the two columns/rows for the 0-freq cases)
  int dim_out = 1, dim_in = 1;
  double norm = 1.0;  // raster L2 norm divided out
  std::vector<double> raster;
};

/// Basis for kernels mapping an input irrep of frequency m to an output
/// irrep of frequency n.
struct KernelBasis {
  int freq_in = 0, freq_out = 0;
  int k = 0;
  double sigma = 0.6;
  std::vector<BasisElement> elements;
};

/// Analytic steerable basis.  Radial profile G_r(rho)=exp(-(rho-r)^2/(2 s^2))
/// per ring; at ring 0 only angular frequency 0 survives (the angle is
/// undefined at the origin).  Elements are L2-normalized on the raster.
KernelBasis build_kernel_basis(int m, int n, int k, const std::vector<int>& rings,
                               double sigma = 0.6);

/// Evaluate one element analytically at continuous (x, y) -> dim_out x dim_in.
Mat basis_element_eval(const KernelBasis& basis, const BasisElement& e, double x,
                       double y);

/// Equivariant convolution layer.  The trainable parameters are coefficients
/// of analytic basis elements; the effective kernel is their span, so the
/// parameter count depends only on the field types, k, and rings — never on
/// any downstream discretization.
class SteerableConv {
 public:
  SteerableConv() = default;
  SteerableConv(FieldType in, FieldType out, int k, int pad,
                std::vector<int> rings = {}, double sigma = 0.6);

  void init(Rng& rng);
  int num_coeffs() const { return int(scatter_.size()); }
  Tensor& coefficients() { return coeffs_; }
  const Tensor& coefficients() const { return coeffs_; }

  /// Provenance of each coefficient: which block pair and which analytic
  /// basis element it scales (for checkpoints and debugging).
  struct CoeffInfo {
    int out_block = 0, in_block = 0;
    int freq_out = 0, freq_in = 0;
    int ring = 0, mu = 0;
    char type = 'A';
  };
  const std::vector<CoeffInfo>& coeff_info() const { return info_; }
  const FieldType& in_type() const { return in_; }
  const FieldType& out_type() const { return out_; }
  int kernel_size() const { return k_; }
  int padding() const { return pad_; }

  /// Effective kernel (C_out, C_in, k, k) as a differentiable function of the
  /// coefficients.
  Tensor materialize_kernel() const;
  Tensor forward(const Tensor& x) const;

 private:
  FieldType in_, out_;
  int k_ = 0, pad_ = 0;
  // Per coefficient: sparse scatter into the flat kernel.
  std::vector<std::vector<std::pair<int, double>>> scatter_;
  std::vector<CoeffInfo> info_;
  Tensor coeffs_;
};

/// Smallest Fourier-ELU sample count legal for this field type:
/// >= 2 * (largest block dim), rounded up to a multiple of 4.
int default_felu_grid(const FieldType& type);

struct LayerDesc {
  enum class Kind { kConv, kFelu, kPool, kUpsample, kResidual, kNormPool };
  Kind kind;
  FieldType out;  // kConv target type; ignored otherwise
  int k = 3;
  int pad = -1;   // -1 = same padding (k-1)/2
  int grid = 0;   // kFelu sample count; 0 = default_felu_grid

  static LayerDesc conv(FieldType out, int k = 3, int pad = -1) {
    return {Kind::kConv, std::move(out), k, pad, 0};
  }
  static LayerDesc felu(int grid = 0) { return {Kind::kFelu, {}, 0, -1, grid}; }
  static LayerDesc pool() { return {Kind::kPool, {}, 0, -1, 0}; }
  static LayerDesc upsample() { return {Kind::kUpsample, {}, 0, -1, 0}; }
  static LayerDesc residual(int k = 3) { return {Kind::kResidual, {}, k, -1, 0}; }
  static LayerDesc norm_pool_layer() { return {Kind::kNormPool, {}, 0, -1, 0}; }
};

/// Sequential composition of equivariant layers with type checking at
/// construction.
class Sequential {
 public:
  Sequential() = default;
  Sequential(FieldType in, const std::vector<LayerDesc>& layers);

  void init(Rng& rng);
  Tensor forward(const Tensor& x) const;
  const FieldType& in_type() const { return in_; }
  const FieldType& out_type() const { return out_; }
  std::vector<Tensor> parameters() const;
  size_t parameter_count() const;
  /// Conv layers in parameters() order.
  std::vector<const SteerableConv*> conv_layers() const;

 private:
  struct Item {
    LayerDesc desc;
    FieldType in, out;
    std::vector<SteerableConv> convs;  // kConv: 1; kResidual: 2
    int grid = 0;
  };
  FieldType in_, out_;
  std::vector<Item> items_;
};

Sequential assemble_network(FieldType in, const std::vector<LayerDesc>& layers);

/// Equivariant U-Net: `widths[l]` is the field type at level l (level 0 =
/// full resolution); `levels = widths.size()-1` pool/upsample stages; one
/// residual block per encoder level plus one at the bottleneck; decoder adds
/// skips from equal-resolution encoder stages.
struct UNetConfig {
  FieldType in;
  std::vector<FieldType> widths;
  FieldType out;
  int k_lift = 5;
  int k = 3;
};

class UNet {
 public:
  UNet() = default;
  explicit UNet(UNetConfig cfg);
  void init(Rng& rng);
  Tensor forward(const Tensor& x) const;
  std::vector<Tensor> parameters() const;
  std::vector<const SteerableConv*> conv_layers() const;
  const FieldType& out_type() const { return cfg_.out; }

 private:
  struct ResBlock {
    SteerableConv c1, c2;
    int grid = 0;
  };
  UNetConfig cfg_;
  SteerableConv lift_;
  std::vector<SteerableConv> down_, up_;  // between-level convs
  std::vector<ResBlock> res_;             // one per level, widths.size() total
  SteerableConv head_;
  int lift_grid_ = 0;
  std::vector<int> level_grids_;
};

/// Max-abs difference between net(T_g x) and T_g(net(x)).
double equivariance_residual(const Sequential& net, const Tensor& x,
                             const GroupElement& g);

}  // namespace histoport
