#include "histoport/eoh.hpp"

#include <cmath>

namespace histoport {

double sample_so2_signal(const std::vector<double>& coeffs, double angle) {
  if (coeffs.size() % 2 != 1)
    throw std::invalid_argument("coefficient vector must have odd length 1+2jc");
  double v = coeffs[0];
  int jc = int(coeffs.size() / 2);
  for (int j = 1; j <= jc; ++j)
    v += coeffs[2 * j - 1] * std::cos(j * angle) + coeffs[2 * j] * std::sin(j * angle);
  return v;
}

Tensor generate_eoh(const Tensor& coeff_field, int n, bool quotient) {
  if (coeff_field.ndim() != 3)
    throw std::invalid_argument("generate_eoh: expected (1+2jc, H, W)");
  int dim = coeff_field.dim(0);
  if (dim % 2 != 1)
    throw std::invalid_argument("generate_eoh: coefficient dim must be odd");
  int jc = dim / 2;
  DiscretizationMatrix d = discretization_matrix(n, jc, quotient);
  return softmax_axis0(channel_matmul(d.q, coeff_field));
}

Tensor subsample_group(const Tensor& map, int m) {
  if (map.ndim() < 1) throw std::invalid_argument("subsample_group: rank 0");
  int n = map.dim(0);
  if (m < 1 || n % m != 0)
    throw std::invalid_argument("subsample_group: M must divide N");
  std::vector<int> idx;
  idx.reserve(m);
  for (int i = 0; i < m; ++i) idx.push_back(i * (n / m));
  return index_select_axis0(map, idx);
}

Tensor subgroup_alignment(const Tensor& crop_map, int m) {
  if (crop_map.ndim() != 3)
    throw std::invalid_argument("subgroup_alignment: expected (N, h, w)");
  int n = crop_map.dim(0), h = crop_map.dim(1), w = crop_map.dim(2);
  if (m < 1 || n % m != 0)
    throw std::invalid_argument("subgroup_alignment: M must divide N");
  if (h % 2 == 0 || w % 2 == 0)
    throw std::invalid_argument("subgroup_alignment: crop sides must be odd");
  std::vector<Tensor> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i) {
    // Cyclic shift by i ([rho_reg(g_i)v]_k = v_{(k-i) mod n}), then keep the
    // C_M subset; the spatial rotation commutes with both channel ops, so it
    // runs last on the smaller M-channel map.
    std::vector<int> idx;
    idx.reserve(m);
    for (int j = 0; j < m; ++j) idx.push_back(((j * (n / m) - i) % n + n) % n);
    Tensor shifted = index_select_axis0(crop_map, idx);
    rows.push_back(rotate_bilinear(shifted, kTwoPi * double(i) / double(n)));
  }
  return concat_axis0(rows);  // (N*M, h, w)
}

Tensor invariant_alignment(const Tensor& crop_map, int n) {
  if (crop_map.ndim() != 3)
    throw std::invalid_argument("invariant_alignment: expected (C, h, w)");
  if (crop_map.dim(1) % 2 == 0 || crop_map.dim(2) % 2 == 0)
    throw std::invalid_argument("invariant_alignment: crop sides must be odd");
  std::vector<Tensor> rows;
  rows.reserve(n);
  for (int i = 0; i < n; ++i)
    rows.push_back(rotate_bilinear(crop_map, kTwoPi * double(i) / double(n)));
  return concat_axis0(rows);
}

}  // namespace histoport
