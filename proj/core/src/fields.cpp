#include "histoport/fields.hpp"

#include <cmath>

namespace histoport {

Mat field_rep_matrix(const FieldType& type, const GroupElement& g) {
  Mat m(type.dim(), type.dim());
  int at = 0;
  for (const auto& b : type.blocks) {
    Mat r = rep_matrix(b, g);
    for (int i = 0; i < r.rows(); ++i)
      for (int j = 0; j < r.cols(); ++j) m(at + i, at + j) = r(i, j);
    at += b.dim();
  }
  return m;
}

Tensor transform_field(const FieldType& type, const Tensor& f, const GroupElement& g) {
  if (f.ndim() != 3 || f.dim(0) != type.dim())
    throw std::invalid_argument("transform_field: tensor does not match field type");
  Tensor rotated = rotate_bilinear(f, g.angle);
  return channel_matmul(field_rep_matrix(type, g), rotated);
}

namespace {

bool is_fourier_block(const RepSpec& b) {
  return b.kind == RepKind::kIrrepSum || b.kind == RepKind::kQuotientIrrepSum;
}

}  // namespace

Tensor fourier_elu(const FieldType& type, const Tensor& f, int grid) {
  if (f.ndim() != 3 || f.dim(0) != type.dim())
    throw std::invalid_argument("fourier_elu: tensor does not match field type");
  std::vector<Tensor> out;
  int at = 0;
  for (const auto& b : type.blocks) {
    Tensor block = slice_axis0(f, at, b.dim());
    at += b.dim();
    if (b.kind == RepKind::kTrivial) {
      out.push_back(elu(block));
      continue;
    }
    if (!is_fourier_block(b))
      throw std::invalid_argument("fourier_elu: block must be trivial or an irrep sum");
    if (grid < 2 * b.dim() || grid % 4 != 0)
      throw std::invalid_argument(
          "fourier_elu: sample count must be a multiple of 4 and >= twice the "
          "block dimension");
    // Both irrep sums are plain Fourier blocks in their own angular domain.
    DiscretizationMatrix d = discretization_matrix(grid, b.max_freq, false);
    Tensor sampled = channel_matmul(d.q, block);
    out.push_back(channel_matmul(d.pinv, elu(sampled)));
  }
  return out.size() == 1 ? out[0] : concat_axis0(out);
}

Tensor norm_pool(const FieldType& type, const Tensor& f) {
  if (f.ndim() != 3 || f.dim(0) != type.dim())
    throw std::invalid_argument("norm_pool: tensor does not match field type");
  constexpr double kEps = 1e-12;
  std::vector<Tensor> out;
  int at = 0;
  for (const auto& b : type.blocks) {
    switch (b.kind) {
      case RepKind::kTrivial:
        out.push_back(slice_axis0(f, at, 1));
        break;
      case RepKind::kStandard:
      case RepKind::kIrrep: {
        Tensor x = slice_axis0(f, at, 1);
        Tensor y = slice_axis0(f, at + 1, 1);
        out.push_back(sqrt_op(add_scalar(add(mul(x, x), mul(y, y)), kEps)));
        break;
      }
      case RepKind::kIrrepSum:
      case RepKind::kQuotientIrrepSum: {
        out.push_back(slice_axis0(f, at, 1));
        for (int j = 1; j <= b.max_freq; ++j) {
          Tensor x = slice_axis0(f, at + 2 * j - 1, 1);
          Tensor y = slice_axis0(f, at + 2 * j, 1);
          out.push_back(sqrt_op(add_scalar(add(mul(x, x), mul(y, y)), kEps)));
        }
        break;
      }
      case RepKind::kRegular:
        throw std::invalid_argument("norm_pool: regular blocks not supported");
    }
    at += b.dim();
  }
  return out.size() == 1 ? out[0] : concat_axis0(out);
}

FieldType norm_pooled_type(const FieldType& type) {
  FieldType t;
  for (const auto& b : type.blocks) {
    switch (b.kind) {
      case RepKind::kTrivial: t.append(RepSpec::trivial()); break;
      case RepKind::kStandard:
      case RepKind::kIrrep: t.append(RepSpec::trivial()); break;
      case RepKind::kIrrepSum:
      case RepKind::kQuotientIrrepSum:
        t.append(RepSpec::trivial(), 1 + b.max_freq);
        break;
      case RepKind::kRegular:
        throw std::invalid_argument("norm_pooled_type: regular blocks not supported");
    }
  }
  return t;
}

}  // namespace histoport
