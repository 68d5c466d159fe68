#pragma once
// Shared helpers for the unit suites and the acceptance runner.
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "histoport/tensor.hpp"

namespace testutil {

inline double max_abs_diff(const histoport::Tensor& a, const histoport::Tensor& b) {
  if (a.size() != b.size()) return 1e300;
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

inline double max_abs(const histoport::Tensor& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

/// out[c] = in[(c - k) mod C] on axis 0 — the regular-rep shift.
inline histoport::Tensor roll_axis0(const histoport::Tensor& a, int k) {
  const auto& s = a.shape();
  int c = s[0];
  size_t plane = a.size() / size_t(c);
  std::vector<double> out(a.size());
  for (int i = 0; i < c; ++i) {
    int src = ((i - k) % c + c) % c;
    for (size_t p = 0; p < plane; ++p)
      out[size_t(i) * plane + p] = a.values()[size_t(src) * plane + p];
  }
  return histoport::Tensor::from_data(s, std::move(out));
}

/// Central-difference check of d loss / d leaf against the autodiff grads.
/// `loss` must rebuild the graph from the current leaf values on every call.
/// Checks `samples` coordinates spread evenly through each leaf.  Returns the
/// worst mixed absolute/relative error.
inline double grad_check(const std::function<histoport::Tensor()>& loss,
                         std::vector<histoport::Tensor> leaves,
                         int samples = 6, double h = 1e-5) {
  using histoport::Tensor;
  for (Tensor& l : leaves) l.zero_grad();
  Tensor l0 = loss();
  l0.backward();
  double worst = 0.0;
  for (Tensor& leaf : leaves) {
    std::vector<double> analytic = leaf.grads();
    size_t n = leaf.size();
    size_t step = std::max<size_t>(1, n / size_t(samples));
    for (size_t i = 0; i < n; i += step) {
      double keep = leaf.values()[i];
      double hh = h * std::max(1.0, std::abs(keep));
      leaf.values()[i] = keep + hh;
      double up = loss().scalar_value();
      leaf.values()[i] = keep - hh;
      double dn = loss().scalar_value();
      leaf.values()[i] = keep;
      double fd = (up - dn) / (2.0 * hh);
      double err = std::abs(analytic[i] - fd) /
                   std::max({1.0, std::abs(analytic[i]), std::abs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// Deterministic weighted sum turning any tensor into a scalar probe loss.
inline histoport::Tensor probe_loss(const histoport::Tensor& y) {
  using histoport::Tensor;
  std::vector<double> w(y.size());
  for (size_t i = 0; i < w.size(); ++i)
    w[i] = std::cos(0.7 * double(i) + 0.3) + 0.1;
  Tensor wt = Tensor::from_data(y.shape(), std::move(w));
  return histoport::sum_all(histoport::mul(y, wt));
}

}  // namespace testutil
