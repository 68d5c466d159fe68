#pragma once
#include <vector>

#include "histoport/group.hpp"
#include "histoport/tensor.hpp"

namespace histoport {

/// Channel layout of a steerable feature map: an ordered list of rep blocks.
/// A tensor carrying this type has shape (dim(), H, W).
struct FieldType {
  std::vector<RepSpec> blocks;

  static FieldType of(const RepSpec& rep, int count) {
    FieldType t;
    t.blocks.assign(count, rep);
    return t;
  }

  FieldType& append(const RepSpec& rep, int count = 1) {
    for (int i = 0; i < count; ++i) blocks.push_back(rep);
    return *this;
  }

  int dim() const {
    int d = 0;
    for (const auto& b : blocks) d += b.dim();
    return d;
  }

  /// Channel offset of block `i`.
  int offset(int i) const {
    int d = 0;
    for (int k = 0; k < i; ++k) d += blocks[k].dim();
    return d;
  }

  bool operator==(const FieldType&) const = default;
};

/// Block-diagonal channel action rho(g) for the whole field.
Mat field_rep_matrix(const FieldType& type, const GroupElement& g);

/// The group action on a feature field: [g.f](x) = rho(g) f(R_g^{-1} x).
/// Spatial part is bilinear (exact for quarter turns); channel part exact.
Tensor transform_field(const FieldType& type, const Tensor& f, const GroupElement& g);

/// Pointwise Fourier nonlinearity: each band-limited block is sampled on a
/// `grid`-point angular grid, passed through ELU, and projected back onto its
/// coefficients.  Trivial blocks go through ELU directly.  Exactly
/// equivariant to rotations by multiples of 2*pi/grid in the block's own
/// angular domain.  grid must be a multiple of 4 and >= twice the block
/// dimension (keeps aliasing of the ELU's new harmonics mild).
Tensor fourier_elu(const FieldType& type, const Tensor& f, int grid);

/// Rotation-invariant channel readout: per block, the frequency-0 coefficient
/// plus the norm of every coefficient pair, sqrt(a^2+b^2+1e-12).
Tensor norm_pool(const FieldType& type, const Tensor& f);
FieldType norm_pooled_type(const FieldType& type);

}  // namespace histoport
