#include <cblas.h>
#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstring>
#include <map>

#include "histoport/tensor.hpp"

// Cross-correlation (no kernel flip), stride 1, symmetric zero padding.
// Three execution paths chosen deterministically by shape:
//   - direct loops for tiny problems,
//   - strip-wise im2col + dgemm (default),
//   - FFT pointwise products for large kernels over large outputs, where the
//     quadratic kernel-area cost dominates (the template-correlation layer).
// All paths compute the same quantity in f64; tests pin them against a
// loop-nest reference.

namespace histoport {

namespace {

bool wants_grad(const std::shared_ptr<Node>& p) {
  if (!p->requires_grad) return false;
  p->ensure_grad();
  return true;
}

struct ConvDims {
  int ci, h, w, co, kh, kw, pad, oh, ow;
  size_t cost() const {
    return size_t(co) * ci * kh * kw * oh * ow;
  }
};

ConvDims conv_dims(const Tensor& input, const Tensor& kernel, int pad) {
  if (input.ndim() != 3)
    throw std::invalid_argument("conv2d: input must be (C,H,W)");
  if (kernel.ndim() != 4)
    throw std::invalid_argument("conv2d: kernel must be (O,C,kh,kw)");
  if (pad < 0) throw std::invalid_argument("conv2d: negative padding");
  ConvDims d;
  d.ci = input.dim(0);
  d.h = input.dim(1);
  d.w = input.dim(2);
  d.co = kernel.dim(0);
  d.kh = kernel.dim(2);
  d.kw = kernel.dim(3);
  d.pad = pad;
  if (kernel.dim(1) != d.ci)
    throw std::invalid_argument("conv2d: kernel channel count mismatch");
  d.oh = d.h + 2 * pad - d.kh + 1;
  d.ow = d.w + 2 * pad - d.kw + 1;
  if (d.oh < 1 || d.ow < 1)
    throw std::invalid_argument("conv2d: kernel larger than padded input");
  return d;
}

constexpr size_t kDirectCostLimit = 200000;
constexpr size_t kFftCostFloor = 100000000;  // 1e8 MACs
constexpr int kFftMinKernel = 9;

// ---------------- direct path ----------------

void direct_forward(const ConvDims& d, const double* in, const double* ker,
                    double* out) {
  for (int o = 0; o < d.co; ++o)
    for (int y = 0; y < d.oh; ++y)
      for (int x = 0; x < d.ow; ++x) {
        double acc = 0.0;
        for (int c = 0; c < d.ci; ++c)
          for (int i = 0; i < d.kh; ++i) {
            int r = y + i - d.pad;
            if (r < 0 || r >= d.h) continue;
            for (int j = 0; j < d.kw; ++j) {
              int q = x + j - d.pad;
              if (q < 0 || q >= d.w) continue;
              acc += in[(size_t(c) * d.h + r) * d.w + q] *
                     ker[((size_t(o) * d.ci + c) * d.kh + i) * d.kw + j];
            }
          }
        out[(size_t(o) * d.oh + y) * d.ow + x] = acc;
      }
}

void direct_backward(const ConvDims& d, const double* in, const double* ker,
                     const double* gout, double* gin, double* gker) {
  for (int o = 0; o < d.co; ++o)
    for (int y = 0; y < d.oh; ++y)
      for (int x = 0; x < d.ow; ++x) {
        double g = gout[(size_t(o) * d.oh + y) * d.ow + x];
        if (g == 0.0) continue;
        for (int c = 0; c < d.ci; ++c)
          for (int i = 0; i < d.kh; ++i) {
            int r = y + i - d.pad;
            if (r < 0 || r >= d.h) continue;
            for (int j = 0; j < d.kw; ++j) {
              int q = x + j - d.pad;
              if (q < 0 || q >= d.w) continue;
              size_t ii = (size_t(c) * d.h + r) * d.w + q;
              size_t ki = ((size_t(o) * d.ci + c) * d.kh + i) * d.kw + j;
              if (gin) gin[ii] += g * ker[ki];
              if (gker) gker[ki] += g * in[ii];
            }
          }
      }
}

// ---------------- im2col + GEMM path ----------------

// Fill patch matrix rows (C*kh*kw) x (rows*ow) for output rows [y0, y0+rows).
void fill_patch(const ConvDims& d, const double* in, int y0, int rows,
                double* patch) {
  int cols = rows * d.ow;
  for (int c = 0; c < d.ci; ++c)
    for (int i = 0; i < d.kh; ++i)
      for (int j = 0; j < d.kw; ++j) {
        double* prow = patch + (size_t(c) * d.kh * d.kw + size_t(i) * d.kw + j) * cols;
        for (int yy = 0; yy < rows; ++yy) {
          int r = y0 + yy + i - d.pad;
          double* dst = prow + size_t(yy) * d.ow;
          if (r < 0 || r >= d.h) {
            std::memset(dst, 0, sizeof(double) * d.ow);
            continue;
          }
          const double* src = in + (size_t(c) * d.h + r) * d.w;
          for (int x = 0; x < d.ow; ++x) {
            int q = x + j - d.pad;
            dst[x] = (q < 0 || q >= d.w) ? 0.0 : src[q];
          }
        }
      }
}

int strip_rows(const ConvDims& d) {
  // Keep the patch buffer near 4 MB.
  size_t per_row = size_t(d.ci) * d.kh * d.kw * d.ow * sizeof(double);
  int rows = int(std::max<size_t>(1, (4u << 20) / std::max<size_t>(per_row, 1)));
  return std::min(rows, d.oh);
}

void gemm_forward(const ConvDims& d, const double* in, const double* ker,
                  double* out) {
  int k = d.ci * d.kh * d.kw;
  int rows = strip_rows(d);
  std::vector<double> patch(size_t(k) * rows * d.ow);
  for (int y0 = 0; y0 < d.oh; y0 += rows) {
    int r = std::min(rows, d.oh - y0);
    int cols = r * d.ow;
    fill_patch(d, in, y0, r, patch.data());
    // out_strip (co x cols) = ker (co x k) * patch (k x cols); output strips
    // for different o are non-contiguous, so use ldc = oh*ow.
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, d.co, cols, k, 1.0,
                ker, k, patch.data(), cols, 0.0,
                out + size_t(y0) * d.ow, d.oh * d.ow);
  }
}

void gemm_backward(const ConvDims& d, const double* in, const double* ker,
                   const double* gout, double* gin, double* gker) {
  int k = d.ci * d.kh * d.kw;
  int rows = strip_rows(d);
  std::vector<double> patch(size_t(k) * rows * d.ow);
  std::vector<double> dpatch(gin ? size_t(k) * rows * d.ow : 0);
  for (int y0 = 0; y0 < d.oh; y0 += rows) {
    int r = std::min(rows, d.oh - y0);
    int cols = r * d.ow;
    if (gker) {
      fill_patch(d, in, y0, r, patch.data());
      // dker += gout_strip (co x cols) * patch^T (cols x k)
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, d.co, k, cols, 1.0,
                  gout + size_t(y0) * d.ow, d.oh * d.ow, patch.data(), cols,
                  1.0, gker, k);
    }
    if (gin) {
      // dpatch (k x cols) = ker^T (k x co) * gout_strip (co x cols)
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, k, cols, d.co, 1.0,
                  ker, k, gout + size_t(y0) * d.ow, d.oh * d.ow, 0.0,
                  dpatch.data(), cols);
      // col2im scatter-add.
      for (int c = 0; c < d.ci; ++c)
        for (int i = 0; i < d.kh; ++i)
          for (int j = 0; j < d.kw; ++j) {
            const double* prow =
                dpatch.data() + (size_t(c) * d.kh * d.kw + size_t(i) * d.kw + j) * cols;
            for (int yy = 0; yy < r; ++yy) {
              int rr = y0 + yy + i - d.pad;
              if (rr < 0 || rr >= d.h) continue;
              double* dst = gin + (size_t(c) * d.h + rr) * d.w;
              const double* src = prow + size_t(yy) * d.ow;
              for (int x = 0; x < d.ow; ++x) {
                int q = x + j - d.pad;
                if (q >= 0 && q < d.w) dst[q] += src[x];
              }
            }
          }
    }
  }
}

// ---------------- FFT path ----------------

struct FftPlans {
  int h = 0, w = 0, cw = 0;  // cw = w/2+1 complex columns
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  fftw_plan fwd = nullptr, inv = nullptr;

  ~FftPlans() {
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
    if (real) fftw_free(real);
    if (cplx) fftw_free(cplx);
  }
};

FftPlans& plans_for(int h, int w) {
  static std::map<std::pair<int, int>, std::unique_ptr<FftPlans>> cache;
  auto key = std::make_pair(h, w);
  auto it = cache.find(key);
  if (it == cache.end()) {
    auto p = std::make_unique<FftPlans>();
    p->h = h;
    p->w = w;
    p->cw = w / 2 + 1;
    p->real = fftw_alloc_real(size_t(h) * w);
    p->cplx = fftw_alloc_complex(size_t(h) * p->cw);
    p->fwd = fftw_plan_dft_r2c_2d(h, w, p->real, p->cplx, FFTW_ESTIMATE);
    p->inv = fftw_plan_dft_c2r_2d(h, w, p->cplx, p->real, FFTW_ESTIMATE);
    it = cache.emplace(key, std::move(p)).first;
  }
  return *it->second;
}

using CVec = std::vector<std::complex<double>>;

// r2c of `src` (sh x sw) placed at the top-left of an h x w zero canvas.
CVec fft_embed(FftPlans& p, const double* src, int sh, int sw) {
  std::memset(p.real, 0, sizeof(double) * p.h * p.w);
  for (int r = 0; r < sh; ++r)
    std::memcpy(p.real + size_t(r) * p.w, src + size_t(r) * sw, sizeof(double) * sw);
  fftw_execute(p.fwd);
  CVec out(size_t(p.h) * p.cw);
  // fftw_complex is double[2] with the same layout as std::complex<double>.
  std::memcpy(static_cast<void*>(out.data()), p.cplx,
              sizeof(fftw_complex) * out.size());
  return out;
}

// c2r of `spec`, normalized, copying the (oh x ow) top-left corner to dst
// with dst row stride `stride` (accumulate if acc).
void ifft_corner(FftPlans& p, const CVec& spec, int oh, int ow, double* dst,
                 int stride, bool acc) {
  std::memcpy(p.cplx, spec.data(), sizeof(fftw_complex) * spec.size());
  fftw_execute(p.inv);
  double norm = 1.0 / (double(p.h) * p.w);
  for (int r = 0; r < oh; ++r)
    for (int c = 0; c < ow; ++c) {
      double v = p.real[size_t(r) * p.w + c] * norm;
      if (acc)
        dst[size_t(r) * stride + c] += v;
      else
        dst[size_t(r) * stride + c] = v;
    }
}

// Spectra computed in the forward pass and reused by the backward pass.
struct FftSaved {
  std::vector<CVec> in_hat;  // per input channel, padded
  std::vector<CVec> k_hat;   // per (o,c) pair
};

void fft_forward(const ConvDims& d, const double* in, const double* ker,
                 double* out, FftSaved* keep) {
  int ph = d.h + 2 * d.pad, pw = d.w + 2 * d.pad;
  FftPlans& p = plans_for(ph, pw);
  size_t nf = size_t(ph) * p.cw;
  // Padded input channel spectra.  Padding shifts content by +pad in both
  // axes; embed at offset by padding rows/cols of zeros via a temp.
  std::vector<double> padded(size_t(ph) * pw);
  std::vector<CVec> in_hat(d.ci);
  for (int c = 0; c < d.ci; ++c) {
    std::memset(padded.data(), 0, sizeof(double) * padded.size());
    for (int r = 0; r < d.h; ++r)
      std::memcpy(padded.data() + size_t(r + d.pad) * pw + d.pad,
                  in + (size_t(c) * d.h + r) * d.w, sizeof(double) * d.w);
    in_hat[c] = fft_embed(p, padded.data(), ph, pw);
  }
  std::vector<CVec> k_hat(size_t(d.co) * d.ci);
  for (int o = 0; o < d.co; ++o)
    for (int c = 0; c < d.ci; ++c)
      k_hat[size_t(o) * d.ci + c] =
          fft_embed(p, ker + (size_t(o) * d.ci + c) * d.kh * d.kw, d.kh, d.kw);
  CVec acc(nf);
  for (int o = 0; o < d.co; ++o) {
    std::fill(acc.begin(), acc.end(), std::complex<double>(0.0, 0.0));
    for (int c = 0; c < d.ci; ++c) {
      const CVec& kh = k_hat[size_t(o) * d.ci + c];
      for (size_t f = 0; f < nf; ++f) acc[f] += in_hat[c][f] * std::conj(kh[f]);
    }
    ifft_corner(p, acc, d.oh, d.ow, out + size_t(o) * d.oh * d.ow, d.ow, false);
  }
  if (keep) {
    keep->in_hat = std::move(in_hat);
    keep->k_hat = std::move(k_hat);
  }
}

void fft_backward(const ConvDims& d, const FftSaved& saved, const double* gout,
                  double* gin, double* gker) {
  int ph = d.h + 2 * d.pad, pw = d.w + 2 * d.pad;
  FftPlans& p = plans_for(ph, pw);
  size_t nf = size_t(ph) * p.cw;
  std::vector<CVec> g_hat(d.co);
  for (int o = 0; o < d.co; ++o)
    g_hat[o] = fft_embed(p, gout + size_t(o) * d.oh * d.ow, d.oh, d.ow);

  if (gker) {
    CVec spec(nf);
    for (int o = 0; o < d.co; ++o)
      for (int c = 0; c < d.ci; ++c) {
        // dK[o][c] = corr(x_c, g_o) over the kernel window.
        for (size_t f = 0; f < nf; ++f)
          spec[f] = saved.in_hat[c][f] * std::conj(g_hat[o][f]);
        ifft_corner(p, spec, d.kh, d.kw,
                    gker + (size_t(o) * d.ci + c) * d.kh * d.kw, d.kw, true);
      }
  }
  if (gin) {
    // dX_pad[c] = sum_o conv(g_o, k_oc).
    CVec spec(nf);
    std::vector<double> gpad(size_t(ph) * pw);
    for (int c = 0; c < d.ci; ++c) {
      std::fill(spec.begin(), spec.end(), std::complex<double>(0.0, 0.0));
      for (int o = 0; o < d.co; ++o) {
        const CVec& kh = saved.k_hat[size_t(o) * d.ci + c];
        for (size_t f = 0; f < nf; ++f) spec[f] += g_hat[o][f] * kh[f];
      }
      ifft_corner(p, spec, ph, pw, gpad.data(), pw, false);
      for (int r = 0; r < d.h; ++r)
        for (int q = 0; q < d.w; ++q)
          gin[(size_t(c) * d.h + r) * d.w + q] +=
              gpad[size_t(r + d.pad) * pw + q + d.pad];
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int pad) {
  ConvDims d = conv_dims(input, kernel, pad);
  std::vector<double> out(size_t(d.co) * d.oh * d.ow);
  size_t cost = d.cost();
  bool use_fft = std::min(d.kh, d.kw) >= kFftMinKernel && cost >= kFftCostFloor;
  bool use_direct = !use_fft && cost <= kDirectCostLimit;

  auto saved = std::make_shared<FftSaved>();
  if (use_fft) {
    fft_forward(d, input.values().data(), kernel.values().data(), out.data(),
                saved.get());
  } else if (use_direct) {
    direct_forward(d, input.values().data(), kernel.values().data(), out.data());
  } else {
    gemm_forward(d, input.values().data(), kernel.values().data(), out.data());
  }

  return detail::make_op(
      {d.co, d.oh, d.ow}, std::move(out), {input, kernel},
      [d, use_fft, use_direct, saved](Node& n) {
        auto& pin = n.parents[0];
        auto& pker = n.parents[1];
        double* gin = wants_grad(pin) ? pin->grad.data() : nullptr;
        double* gker = wants_grad(pker) ? pker->grad.data() : nullptr;
        if (!gin && !gker) return;
        if (use_fft) {
          fft_backward(d, *saved, n.grad.data(), gin, gker);
        } else if (use_direct) {
          direct_backward(d, pin->value.data(), pker->value.data(),
                          n.grad.data(), gin, gker);
        } else {
          gemm_backward(d, pin->value.data(), pker->value.data(),
                        n.grad.data(), gin, gker);
        }
      },
      "conv2d");
}

}  // namespace histoport
