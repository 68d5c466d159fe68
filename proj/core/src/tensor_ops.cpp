#include <cblas.h>

#include <algorithm>
#include <cmath>

#include "histoport/group.hpp"
#include "histoport/tensor.hpp"

namespace histoport {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Accumulate into a parent's grad if it participates in the backward pass.
bool wants_grad(const std::shared_ptr<Node>& p) {
  if (!p->requires_grad) return false;
  p->ensure_grad();
  return true;
}

void check_chw(const Tensor& a, const char* op) {
  if (a.ndim() != 3)
    throw std::invalid_argument(std::string(op) + ": expected (C,H,W), got " +
                                shape_str(a.shape()));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + b.values()[i];
  return detail::make_op(
      a.shape(), std::move(v), {a, b},
      [](Node& n) {
        for (auto& p : n.parents)
          if (wants_grad(p))
            for (size_t i = 0; i < n.grad.size(); ++i) p->grad[i] += n.grad[i];
      },
      "add");
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] - b.values()[i];
  return detail::make_op(
      a.shape(), std::move(v), {a, b},
      [](Node& n) {
        if (wants_grad(n.parents[0]))
          for (size_t i = 0; i < n.grad.size(); ++i) n.parents[0]->grad[i] += n.grad[i];
        if (wants_grad(n.parents[1]))
          for (size_t i = 0; i < n.grad.size(); ++i) n.parents[1]->grad[i] -= n.grad[i];
      },
      "sub");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  return detail::make_op(
      a.shape(), std::move(v), {a, b},
      [](Node& n) {
        auto& pa = n.parents[0];
        auto& pb = n.parents[1];
        if (wants_grad(pa))
          for (size_t i = 0; i < n.grad.size(); ++i)
            pa->grad[i] += n.grad[i] * pb->value[i];
        if (wants_grad(pb))
          for (size_t i = 0; i < n.grad.size(); ++i)
            pb->grad[i] += n.grad[i] * pa->value[i];
      },
      "mul");
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * s;
  return detail::make_op(
      a.shape(), std::move(v), {a},
      [s](Node& n) {
        if (wants_grad(n.parents[0]))
          for (size_t i = 0; i < n.grad.size(); ++i)
            n.parents[0]->grad[i] += n.grad[i] * s;
      },
      "scale");
}

Tensor add_scalar(const Tensor& a, double s) {
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] + s;
  return detail::make_op(
      a.shape(), std::move(v), {a},
      [](Node& n) {
        if (wants_grad(n.parents[0]))
          for (size_t i = 0; i < n.grad.size(); ++i)
            n.parents[0]->grad[i] += n.grad[i];
      },
      "add_scalar");
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor elu(const Tensor& a) {
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double x = a.values()[i];
    v[i] = x > 0.0 ? x : std::expm1(x);
  }
  return detail::make_op(
      a.shape(), std::move(v), {a},
      [](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t i = 0; i < n.grad.size(); ++i) {
          double d = n.parents[0]->value[i] > 0.0 ? 1.0 : n.value[i] + 1.0;
          n.parents[0]->grad[i] += n.grad[i] * d;
        }
      },
      "elu");
}

Tensor sqrt_op(const Tensor& a) {
  std::vector<double> v(a.size());
  for (size_t i = 0; i < v.size(); ++i) {
    double x = a.values()[i];
    if (x < 0.0) throw std::domain_error("sqrt_op: negative input");
    v[i] = std::sqrt(x);
  }
  return detail::make_op(
      a.shape(), std::move(v), {a},
      [](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t i = 0; i < n.grad.size(); ++i)
          n.parents[0]->grad[i] += n.grad[i] * 0.5 / n.value[i];
      },
      "sqrt");
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return detail::make_op(
      {1}, {s}, {a},
      [](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (double& g : n.parents[0]->grad) g += n.grad[0];
      },
      "sum_all");
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    throw std::invalid_argument("matmul: incompatible shapes " +
                                shape_str(a.shape()) + " x " + shape_str(b.shape()));
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> v(size_t(m) * n, 0.0);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0,
              a.values().data(), k, b.values().data(), n, 0.0, v.data(), n);
  return detail::make_op(
      {m, n}, std::move(v), {a, b},
      [m, k, n](Node& node) {
        auto& pa = node.parents[0];
        auto& pb = node.parents[1];
        if (wants_grad(pa))  // dA += G * B^T
          cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, m, k, n, 1.0,
                      node.grad.data(), n, pb->value.data(), n, 1.0,
                      pa->grad.data(), k);
        if (wants_grad(pb))  // dB += A^T * G
          cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, n, m, 1.0,
                      pa->value.data(), k, node.grad.data(), n, 1.0,
                      pb->grad.data(), n);
      },
      "matmul");
}

Tensor reshape(const Tensor& a, const Shape& s) {
  if (shape_numel(s) != a.size())
    throw std::invalid_argument("reshape: element count mismatch");
  std::vector<double> v = a.values();
  return detail::make_op(
      s, std::move(v), {a},
      [](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t i = 0; i < n.grad.size(); ++i)
          n.parents[0]->grad[i] += n.grad[i];
      },
      "reshape");
}

Tensor slice_axis0(const Tensor& a, int start, int len) {
  if (a.ndim() < 1 || start < 0 || len < 0 || start + len > a.dim(0))
    throw std::invalid_argument("slice_axis0: range out of bounds");
  size_t stride = a.size() / size_t(a.dim(0));
  Shape s = a.shape();
  s[0] = len;
  std::vector<double> v(a.values().begin() + start * stride,
                        a.values().begin() + (start + len) * stride);
  return detail::make_op(
      s, std::move(v), {a},
      [start, stride](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t i = 0; i < n.grad.size(); ++i)
          n.parents[0]->grad[start * stride + i] += n.grad[i];
      },
      "slice_axis0");
}

Tensor concat_axis0(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_axis0: empty list");
  Shape s = parts[0].shape();
  size_t stride = parts[0].size() / size_t(s[0]);
  int total = 0;
  for (const Tensor& p : parts) {
    Shape ps = p.shape();
    if (ps.size() != s.size() ||
        !std::equal(ps.begin() + 1, ps.end(), s.begin() + 1))
      throw std::invalid_argument("concat_axis0: trailing dims differ");
    total += ps[0];
  }
  std::vector<double> v;
  v.reserve(total * stride);
  for (const Tensor& p : parts)
    v.insert(v.end(), p.values().begin(), p.values().end());
  s[0] = total;
  return detail::make_op(
      s, std::move(v), parts,
      [](Node& n) {
        size_t at = 0;
        for (auto& p : n.parents) {
          size_t len = p->value.size();
          if (wants_grad(p))
            for (size_t i = 0; i < len; ++i) p->grad[i] += n.grad[at + i];
          at += len;
        }
      },
      "concat_axis0");
}

Tensor index_select_axis0(const Tensor& a, const std::vector<int>& idx) {
  if (a.ndim() < 1) throw std::invalid_argument("index_select_axis0: rank 0");
  size_t stride = a.size() / size_t(a.dim(0));
  for (int i : idx)
    if (i < 0 || i >= a.dim(0))
      throw std::invalid_argument("index_select_axis0: index out of range");
  Shape s = a.shape();
  s[0] = int(idx.size());
  std::vector<double> v(idx.size() * stride);
  for (size_t r = 0; r < idx.size(); ++r)
    std::copy_n(a.values().begin() + idx[r] * stride, stride, v.begin() + r * stride);
  return detail::make_op(
      s, std::move(v), {a},
      [idx, stride](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t r = 0; r < idx.size(); ++r)
          for (size_t i = 0; i < stride; ++i)
            n.parents[0]->grad[idx[r] * stride + i] += n.grad[r * stride + i];
      },
      "index_select_axis0");
}

Tensor channel_matmul(const Mat& m, const Tensor& a) {
  if (a.ndim() < 1 || a.dim(0) != m.cols())
    throw std::invalid_argument("channel_matmul: matrix cols != leading dim");
  int d = m.cols(), s = m.rows();
  size_t px = a.size() / size_t(d);
  std::vector<double> v(size_t(s) * px, 0.0);
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, s, int(px), d, 1.0,
              m.data().data(), d, a.values().data(), int(px), 0.0, v.data(),
              int(px));
  Shape out = a.shape();
  out[0] = s;
  // The matrix is a fixed structural constant; only the tensor gets grads.
  Mat mt = m.transposed();
  return detail::make_op(
      out, std::move(v), {a},
      [mt, d, s, px](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, d, int(px), s,
                    1.0, mt.data().data(), s, n.grad.data(), int(px), 1.0,
                    n.parents[0]->grad.data(), int(px));
      },
      "channel_matmul");
}

Tensor add_channel_bias(const Tensor& a, const Tensor& bias) {
  if (a.ndim() < 1 || bias.ndim() != 1 || bias.dim(0) != a.dim(0))
    throw std::invalid_argument("add_channel_bias: bias must match channels");
  int c = a.dim(0);
  size_t px = a.size() / size_t(c);
  std::vector<double> v(a.size());
  for (int ch = 0; ch < c; ++ch) {
    double b = bias.values()[ch];
    for (size_t i = 0; i < px; ++i) v[ch * px + i] = a.values()[ch * px + i] + b;
  }
  return detail::make_op(
      a.shape(), std::move(v), {a, bias},
      [c, px](Node& n) {
        if (wants_grad(n.parents[0]))
          for (size_t i = 0; i < n.grad.size(); ++i)
            n.parents[0]->grad[i] += n.grad[i];
        if (wants_grad(n.parents[1]))
          for (int ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (size_t i = 0; i < px; ++i) s += n.grad[ch * px + i];
            n.parents[1]->grad[ch] += s;
          }
      },
      "add_channel_bias");
}

Tensor pad2d(const Tensor& a, int pad) {
  check_chw(a, "pad2d");
  if (pad < 0) throw std::invalid_argument("pad2d: negative padding");
  int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  int oh = h + 2 * pad, ow = w + 2 * pad;
  std::vector<double> v(size_t(c) * oh * ow, 0.0);
  for (int ch = 0; ch < c; ++ch)
    for (int u = 0; u < h; ++u)
      std::copy_n(a.values().begin() + (size_t(ch) * h + u) * w, w,
                  v.begin() + (size_t(ch) * oh + u + pad) * ow + pad);
  return detail::make_op(
      {c, oh, ow}, std::move(v), {a},
      [c, h, w, pad, oh, ow](Node& n) {
        (void)oh;
        if (!wants_grad(n.parents[0])) return;
        for (int ch = 0; ch < c; ++ch)
          for (int u = 0; u < h; ++u)
            for (int x = 0; x < w; ++x)
              n.parents[0]->grad[(size_t(ch) * h + u) * w + x] +=
                  n.grad[(size_t(ch) * (h + 2 * pad) + u + pad) * ow + x + pad];
      },
      "pad2d");
}

Tensor slice2d(const Tensor& a, int r0, int c0, int h, int w) {
  check_chw(a, "slice2d");
  int c = a.dim(0), ih = a.dim(1), iw = a.dim(2);
  if (r0 < 0 || c0 < 0 || h < 0 || w < 0 || r0 + h > ih || c0 + w > iw)
    throw std::invalid_argument("slice2d: window out of bounds");
  std::vector<double> v(size_t(c) * h * w);
  for (int ch = 0; ch < c; ++ch)
    for (int u = 0; u < h; ++u)
      std::copy_n(a.values().begin() + (size_t(ch) * ih + r0 + u) * iw + c0, w,
                  v.begin() + (size_t(ch) * h + u) * w);
  return detail::make_op(
      {c, h, w}, std::move(v), {a},
      [c, ih, iw, r0, c0, h, w](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (int ch = 0; ch < c; ++ch)
          for (int u = 0; u < h; ++u)
            for (int x = 0; x < w; ++x)
              n.parents[0]->grad[(size_t(ch) * ih + r0 + u) * iw + c0 + x] +=
                  n.grad[(size_t(ch) * h + u) * w + x];
      },
      "slice2d");
}

Tensor max_pool2d(const Tensor& a) {
  check_chw(a, "max_pool2d");
  int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("max_pool2d: spatial dims must be even");
  int oh = h / 2, ow = w / 2;
  std::vector<double> v(size_t(c) * oh * ow);
  // Ties resolve to the first element in scan order (top-left first).
  std::vector<int> arg(v.size());
  for (int ch = 0; ch < c; ++ch)
    for (int u = 0; u < oh; ++u)
      for (int x = 0; x < ow; ++x) {
        double best = -1e300;
        int besti = 0;
        for (int du = 0; du < 2; ++du)
          for (int dx = 0; dx < 2; ++dx) {
            int idx = (size_t(ch) * h + 2 * u + du) * w + 2 * x + dx;
            if (a.values()[idx] > best) {
              best = a.values()[idx];
              besti = idx;
            }
          }
        size_t o = (size_t(ch) * oh + u) * ow + x;
        v[o] = best;
        arg[o] = besti;
      }
  return detail::make_op(
      {c, oh, ow}, std::move(v), {a},
      [arg](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t o = 0; o < n.grad.size(); ++o)
          n.parents[0]->grad[arg[o]] += n.grad[o];
      },
      "max_pool2d");
}

Tensor avg_pool2d(const Tensor& a) {
  check_chw(a, "avg_pool2d");
  int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("avg_pool2d: spatial dims must be even");
  int oh = h / 2, ow = w / 2;
  std::vector<double> v(size_t(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch)
    for (int u = 0; u < oh; ++u)
      for (int x = 0; x < ow; ++x) {
        double s = 0.0;
        for (int du = 0; du < 2; ++du)
          for (int dx = 0; dx < 2; ++dx)
            s += a.values()[(size_t(ch) * h + 2 * u + du) * w + 2 * x + dx];
        v[(size_t(ch) * oh + u) * ow + x] = 0.25 * s;
      }
  return detail::make_op(
      {c, oh, ow}, std::move(v), {a},
      [c, h, w, oh, ow](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (int ch = 0; ch < c; ++ch)
          for (int u = 0; u < oh; ++u)
            for (int x = 0; x < ow; ++x) {
              double g = 0.25 * n.grad[(size_t(ch) * oh + u) * ow + x];
              for (int du = 0; du < 2; ++du)
                for (int dx = 0; dx < 2; ++dx)
                  n.parents[0]
                      ->grad[(size_t(ch) * h + 2 * u + du) * w + 2 * x + dx] += g;
            }
      },
      "avg_pool2d");
}

namespace {
// Align-corners source coordinate for a doubled axis.
inline double up2_src(int o, int in_len, int out_len) {
  if (out_len == 1) return 0.0;
  return double(o) * double(in_len - 1) / double(out_len - 1);
}
}  // namespace

Tensor upsample_bilinear2(const Tensor& a) {
  check_chw(a, "upsample_bilinear2");
  int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  int oh = 2 * h, ow = 2 * w;
  std::vector<double> v(size_t(c) * oh * ow);
  for (int ch = 0; ch < c; ++ch)
    for (int u = 0; u < oh; ++u) {
      double sr = up2_src(u, h, oh);
      int r0 = std::min(int(sr), h - 1);
      int r1 = std::min(r0 + 1, h - 1);
      double fr = sr - r0;
      for (int x = 0; x < ow; ++x) {
        double sc = up2_src(x, w, ow);
        int c0 = std::min(int(sc), w - 1);
        int c1 = std::min(c0 + 1, w - 1);
        double fc = sc - c0;
        const double* in = a.values().data() + size_t(ch) * h * w;
        v[(size_t(ch) * oh + u) * ow + x] =
            (1 - fr) * ((1 - fc) * in[r0 * w + c0] + fc * in[r0 * w + c1]) +
            fr * ((1 - fc) * in[r1 * w + c0] + fc * in[r1 * w + c1]);
      }
    }
  return detail::make_op(
      {c, oh, ow}, std::move(v), {a},
      [c, h, w, oh, ow](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (int ch = 0; ch < c; ++ch)
          for (int u = 0; u < oh; ++u) {
            double sr = up2_src(u, h, oh);
            int r0 = std::min(int(sr), h - 1);
            int r1 = std::min(r0 + 1, h - 1);
            double fr = sr - r0;
            for (int x = 0; x < ow; ++x) {
              double sc = up2_src(x, w, ow);
              int c0 = std::min(int(sc), w - 1);
              int c1 = std::min(c0 + 1, w - 1);
              double fc = sc - c0;
              double g = n.grad[(size_t(ch) * oh + u) * ow + x];
              double* d = n.parents[0]->grad.data() + size_t(ch) * h * w;
              d[r0 * w + c0] += g * (1 - fr) * (1 - fc);
              d[r0 * w + c1] += g * (1 - fr) * fc;
              d[r1 * w + c0] += g * fr * (1 - fc);
              d[r1 * w + c1] += g * fr * fc;
            }
          }
      },
      "upsample_bilinear2");
}

namespace {
// Flat index map for a quarter-turn: out[u][v] = in[src(u,v)].
inline size_t rot90_src(int k, int h, int w, int u, int v) {
  switch (k) {
    case 1: return size_t(h - 1 - v) * w + u;
    case 2: return size_t(h - 1 - u) * w + (w - 1 - v);
    case 3: return size_t(v) * w + (w - 1 - u);
    default: return size_t(u) * w + v;
  }
}
}  // namespace

Tensor rot90(const Tensor& a, int k) {
  check_chw(a, "rot90");
  k = ((k % 4) + 4) % 4;
  int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  int oh = (k % 2 == 0) ? h : w;
  int ow = (k % 2 == 0) ? w : h;
  std::vector<double> v(a.size());
  for (int ch = 0; ch < c; ++ch) {
    const double* in = a.values().data() + size_t(ch) * h * w;
    double* out = v.data() + size_t(ch) * oh * ow;
    for (int u = 0; u < oh; ++u)
      for (int x = 0; x < ow; ++x) out[size_t(u) * ow + x] = in[rot90_src(k, h, w, u, x)];
  }
  return detail::make_op(
      {c, oh, ow}, std::move(v), {a},
      [c, h, w, oh, ow, k](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (int ch = 0; ch < c; ++ch) {
          double* d = n.parents[0]->grad.data() + size_t(ch) * h * w;
          const double* g = n.grad.data() + size_t(ch) * oh * ow;
          for (int u = 0; u < oh; ++u)
            for (int x = 0; x < ow; ++x)
              d[rot90_src(k, h, w, u, x)] += g[size_t(u) * ow + x];
        }
      },
      "rot90");
}

namespace {

struct BilinearTap {
  // Source corner indices and weights for one output pixel; -1 = outside.
  int idx[4];
  double wgt[4];
};

// Inverse-map taps for a content rotation by phi in [0, pi/2).
std::vector<BilinearTap> residual_taps(int h, int w, double phi) {
  double cr = 0.5 * (h - 1), cc = 0.5 * (w - 1);
  double cph = std::cos(phi), sph = std::sin(phi);
  std::vector<BilinearTap> taps(size_t(h) * w);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      double x = v - cc, y = u - cr;
      // out(p) = in(R(-phi) p)
      double xs = cph * x + sph * y;
      double ys = -sph * x + cph * y;
      double rs = ys + cr, cs = xs + cc;
      double fr0 = std::floor(rs), fc0 = std::floor(cs);
      int r0 = int(fr0), c0 = int(fc0);
      double fr = rs - fr0, fc = cs - fc0;
      BilinearTap t;
      const int rr[4] = {r0, r0, r0 + 1, r0 + 1};
      const int cc4[4] = {c0, c0 + 1, c0, c0 + 1};
      const double ww[4] = {(1 - fr) * (1 - fc), (1 - fr) * fc, fr * (1 - fc),
                            fr * fc};
      for (int i = 0; i < 4; ++i) {
        if (rr[i] >= 0 && rr[i] < h && cc4[i] >= 0 && cc4[i] < w && ww[i] != 0.0) {
          t.idx[i] = rr[i] * w + cc4[i];
          t.wgt[i] = ww[i];
        } else {
          t.idx[i] = -1;
          t.wgt[i] = 0.0;
        }
      }
      taps[size_t(u) * w + v] = t;
    }
  return taps;
}

Tensor rotate_residual(const Tensor& a, double phi) {
  int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  auto taps = residual_taps(h, w, phi);
  std::vector<double> v(a.size(), 0.0);
  for (int ch = 0; ch < c; ++ch) {
    const double* in = a.values().data() + size_t(ch) * h * w;
    double* out = v.data() + size_t(ch) * h * w;
    for (size_t p = 0; p < taps.size(); ++p) {
      const BilinearTap& t = taps[p];
      double acc = 0.0;
      for (int i = 0; i < 4; ++i)
        if (t.idx[i] >= 0) acc += t.wgt[i] * in[t.idx[i]];
      out[p] = acc;
    }
  }
  auto taps_ptr = std::make_shared<std::vector<BilinearTap>>(std::move(taps));
  return detail::make_op(
      a.shape(), std::move(v), {a},
      [c, h, w, taps_ptr](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (int ch = 0; ch < c; ++ch) {
          double* d = n.parents[0]->grad.data() + size_t(ch) * h * w;
          const double* g = n.grad.data() + size_t(ch) * h * w;
          for (size_t p = 0; p < taps_ptr->size(); ++p) {
            const BilinearTap& t = (*taps_ptr)[p];
            for (int i = 0; i < 4; ++i)
              if (t.idx[i] >= 0) d[t.idx[i]] += g[p] * t.wgt[i];
          }
        }
      },
      "rotate_residual");
}

}  // namespace

Tensor rotate_bilinear(const Tensor& a, double theta) {
  check_chw(a, "rotate_bilinear");
  double t = std::fmod(theta, kTwoPi);
  if (t < 0) t += kTwoPi;
  if (t >= kTwoPi) t = 0.0;
  int k = int(std::floor(t / (kPi / 2)));
  if (k > 3) k = 3;
  double phi = t - k * (kPi / 2);
  // Snap residuals that are quarter turns up to rounding, keeping exact
  // permutations exact.
  if (phi < 1e-12) {
    phi = 0.0;
  } else if (kPi / 2 - phi < 1e-12) {
    phi = 0.0;
    k = (k + 1) % 4;
  }
  Tensor base = (k == 0) ? a : rot90(a, k);
  if (phi == 0.0) return base;
  return rotate_residual(base, phi);
}

Tensor softmax_axis0(const Tensor& a) {
  if (a.ndim() < 1) throw std::invalid_argument("softmax_axis0: rank 0");
  int c = a.dim(0);
  size_t px = a.size() / size_t(c);
  std::vector<double> v(a.size());
  for (size_t p = 0; p < px; ++p) {
    double m = -1e300;
    for (int i = 0; i < c; ++i) m = std::max(m, a.values()[i * px + p]);
    double s = 0.0;
    for (int i = 0; i < c; ++i) {
      double e = std::exp(a.values()[i * px + p] - m);
      v[i * px + p] = e;
      s += e;
    }
    for (int i = 0; i < c; ++i) v[i * px + p] /= s;
  }
  return detail::make_op(
      a.shape(), std::move(v), {a},
      [c, px](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        for (size_t p = 0; p < px; ++p) {
          double dot = 0.0;
          for (int i = 0; i < c; ++i) dot += n.grad[i * px + p] * n.value[i * px + p];
          for (int i = 0; i < c; ++i)
            n.parents[0]->grad[i * px + p] +=
                n.value[i * px + p] * (n.grad[i * px + p] - dot);
        }
      },
      "softmax_axis0");
}

Tensor softmax_flat(const Tensor& a) {
  Tensor flat = reshape(a, {int(a.size())});
  Tensor s = softmax_axis0(flat);
  return reshape(s, a.shape());
}

Tensor cross_entropy(const Tensor& logits, size_t target) {
  if (target >= logits.size())
    throw std::invalid_argument("cross_entropy: target out of range");
  const auto& l = logits.values();
  double m = -1e300;
  for (double x : l) m = std::max(m, x);
  double lse = 0.0;
  for (double x : l) lse += std::exp(x - m);
  lse = std::log(lse) + m;
  double loss = lse - l[target];
  return detail::make_op(
      {1}, {loss}, {logits},
      [target, m, lse](Node& n) {
        if (!wants_grad(n.parents[0])) return;
        (void)m;
        double g = n.grad[0];
        auto& p = *n.parents[0];
        for (size_t i = 0; i < p.value.size(); ++i) {
          double soft = std::exp(p.value[i] - lse);
          p.grad[i] += g * (soft - (i == target ? 1.0 : 0.0));
        }
      },
      "cross_entropy");
}

size_t argmax_flat(const Tensor& a) {
  size_t best = 0;
  for (size_t i = 1; i < a.size(); ++i)
    if (a.values()[i] > a.values()[best]) best = i;
  return best;
}

}  // namespace histoport
