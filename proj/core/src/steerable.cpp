#include "histoport/steerable.hpp"

#include <cmath>
#include <map>

namespace histoport {

namespace {

// Analytic dim_out x dim_in evaluation of one element family before radial
// weighting; phi is the polar angle.
void eval_angular(int m, int n, char type, double phi, Mat& out) {
  if (m == 0 && n == 0) {
    out(0, 0) = 1.0;
    return;
  }
  if (m == 0) {  // columns of R(n phi)
    double cn = std::cos(n * phi), sn = std::sin(n * phi);
    if (type == 'A') {
      out(0, 0) = cn;
      out(1, 0) = sn;
    } else {
      out(0, 0) = -sn;
      out(1, 0) = cn;
    }
    return;
  }
  if (n == 0) {  // rows against R(m phi)
    double cm = std::cos(m * phi), sm = std::sin(m * phi);
    if (type == 'A') {
      out(0, 0) = cm;
      out(0, 1) = sm;
    } else {
      out(0, 0) = sm;
      out(0, 1) = -cm;
    }
    return;
  }
  if (type == 'A') {  // G * R((n-m) phi)
    double w = (n - m) * phi;
    double c = std::cos(w), s = std::sin(w);
    out(0, 0) = c;
    out(0, 1) = -s;
    out(1, 0) = s;
    out(1, 1) = c;
  } else {  // G * R((n+m) phi) * F,  F = diag(1,-1)
    double v = (n + m) * phi;
    double c = std::cos(v), s = std::sin(v);
    out(0, 0) = c;
    out(0, 1) = s;
    out(1, 0) = s;
    out(1, 1) = -c;
  }
}

int element_mu(int m, int n, char type) {
  if (m == 0 && n == 0) return 0;
  if (m == 0) return n;
  if (n == 0) return m;
  return type == 'A' ? std::abs(n - m) : n + m;
}

}  // namespace

Mat basis_element_eval(const KernelBasis& basis, const BasisElement& e, double x,
                       double y) {
  Mat out(e.dim_out, e.dim_in);
  double phi = std::atan2(y, x);
  eval_angular(basis.freq_in, basis.freq_out, e.type, phi, out);
  double rho = std::hypot(x, y);
  double dr = rho - e.ring;
  double g = std::exp(-dr * dr / (2.0 * basis.sigma * basis.sigma)) / e.norm;
  // The angular factor has no limit at the origin when mu != 0; the only
  // rotation-consistent value there is zero.
  if (e.mu != 0 && rho < 1e-12) g = 0.0;
  for (auto& v : out.data()) v *= g;
  return out;
}

KernelBasis build_kernel_basis(int m, int n, int k, const std::vector<int>& rings,
                               double sigma) {
  if (k % 2 == 0 || k < 1) throw std::invalid_argument("kernel size must be odd");
  if (m < 0 || n < 0) throw std::invalid_argument("frequencies must be >= 0");
  for (int r : rings)
    if (r < 0 || r > (k - 1) / 2)
      throw std::invalid_argument("ring outside [0, (k-1)/2]");

  KernelBasis basis;
  basis.freq_in = m;
  basis.freq_out = n;
  basis.k = k;
  basis.sigma = sigma;
  int dim_out = n == 0 ? 1 : 2;
  int dim_in = m == 0 ? 1 : 2;
  int c = (k - 1) / 2;

  std::vector<char> types;
  if (m == 0 && n == 0)
    types = {'A'};
  else
    types = {'A', 'B'};

  for (int ring : rings) {
    for (char type : types) {
      int mu = element_mu(m, n, type);
      if (ring == 0 && mu != 0) continue;  // angle undefined at the origin
      BasisElement e;
      e.ring = ring;
      e.mu = mu;
      e.type = type;
      e.dim_out = dim_out;
      e.dim_in = dim_in;
      e.raster.assign(size_t(dim_out) * dim_in * k * k, 0.0);
      Mat ang(dim_out, dim_in);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          double x = j - c, y = i - c;
          double phi = std::atan2(y, x);
          eval_angular(m, n, type, phi, ang);
          double rho = std::hypot(x, y);
          double dr = rho - ring;
          double g = std::exp(-dr * dr / (2.0 * sigma * sigma));
          if (mu != 0 && i == c && j == c) g = 0.0;  // no angle at the origin
          for (int oc = 0; oc < dim_out; ++oc)
            for (int ic = 0; ic < dim_in; ++ic)
              e.raster[((size_t(oc) * dim_in + ic) * k + i) * k + j] =
                  g * ang(oc, ic);
        }
      double norm = 0.0;
      for (double v : e.raster) norm += v * v;
      norm = std::sqrt(norm);
      if (norm < 1e-14) continue;  // degenerate raster, nothing to span
      e.norm = norm;
      for (double& v : e.raster) v /= norm;
      basis.elements.push_back(std::move(e));
    }
  }
  return basis;
}

namespace {

// Sub-irrep channel offsets within a block, in theta_frequencies order.
std::vector<std::pair<int, int>> sub_irreps(const RepSpec& b) {
  std::vector<std::pair<int, int>> out;  // (theta frequency, channel offset)
  int at = 0;
  for (int f : b.theta_frequencies()) {
    out.emplace_back(f, at);
    at += (f == 0 ? 1 : 2);
  }
  return out;
}

}  // namespace

SteerableConv::SteerableConv(FieldType in, FieldType out, int k, int pad,
                             std::vector<int> rings, double sigma)
    : in_(std::move(in)), out_(std::move(out)), k_(k), pad_(pad) {
  if (rings.empty())
    for (int r = 0; r <= (k - 1) / 2; ++r) rings.push_back(r);
  int c_in = in_.dim();

  std::map<std::pair<int, int>, KernelBasis> cache;
  auto basis_for = [&](int m, int n) -> const KernelBasis& {
    auto key = std::make_pair(m, n);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache.emplace(key, build_kernel_basis(m, n, k_, rings, sigma)).first;
    return it->second;
  };

  for (size_t ob = 0; ob < out_.blocks.size(); ++ob) {
    int out_base = out_.offset(int(ob));
    for (const auto& [n, off_n] : sub_irreps(out_.blocks[ob])) {
      for (size_t ib = 0; ib < in_.blocks.size(); ++ib) {
        int in_base = in_.offset(int(ib));
        for (const auto& [m, off_m] : sub_irreps(in_.blocks[ib])) {
          const KernelBasis& basis = basis_for(m, n);
          for (const auto& e : basis.elements) {
            std::vector<std::pair<int, double>> entries;
            entries.reserve(e.raster.size());
            for (int oc = 0; oc < e.dim_out; ++oc)
              for (int ic = 0; ic < e.dim_in; ++ic)
                for (int i = 0; i < k_; ++i)
                  for (int j = 0; j < k_; ++j) {
                    double v =
                        e.raster[((size_t(oc) * e.dim_in + ic) * k_ + i) * k_ + j];
                    if (v == 0.0) continue;
                    int flat =
                        ((out_base + off_n + oc) * c_in + (in_base + off_m + ic)) *
                            k_ * k_ +
                        i * k_ + j;
                    entries.emplace_back(flat, v);
                  }
            scatter_.push_back(std::move(entries));
            info_.push_back({int(ob), int(ib), n, m, e.ring, e.mu, e.type});
          }
        }
      }
    }
  }
  coeffs_ = Tensor::zeros({int(scatter_.size())}, true);
}

void SteerableConv::init(Rng& rng) {
  double stddev = std::sqrt(2.0 / (double(in_.dim()) * k_ * k_));
  for (double& v : coeffs_.values()) v = stddev * rng.normal();
}

Tensor SteerableConv::materialize_kernel() const {
  size_t numel = size_t(out_.dim()) * in_.dim() * k_ * k_;
  std::vector<double> kernel(numel, 0.0);
  for (size_t e = 0; e < scatter_.size(); ++e) {
    double ce = coeffs_.values()[e];
    for (const auto& [idx, v] : scatter_[e]) kernel[idx] += ce * v;
  }
  auto scatter = &scatter_;  // layer outlives any graph built from it
  return detail::make_op(
      {out_.dim(), in_.dim(), k_, k_}, std::move(kernel), {coeffs_},
      [scatter](Node& node) {
        auto& p = node.parents[0];
        if (!p->requires_grad) return;
        p->ensure_grad();
        for (size_t e = 0; e < scatter->size(); ++e) {
          double acc = 0.0;
          for (const auto& [idx, v] : (*scatter)[e]) acc += v * node.grad[idx];
          p->grad[e] += acc;
        }
      },
      "materialize_kernel");
}

Tensor SteerableConv::forward(const Tensor& x) const {
  if (x.ndim() != 3 || x.dim(0) != in_.dim())
    throw std::invalid_argument("SteerableConv: input does not match field type");
  return conv2d(x, materialize_kernel(), pad_);
}

int default_felu_grid(const FieldType& type) {
  int max_dim = 1;
  for (const auto& b : type.blocks)
    if (b.kind == RepKind::kIrrepSum || b.kind == RepKind::kQuotientIrrepSum)
      max_dim = std::max(max_dim, b.dim());
  int s = 2 * max_dim;
  return (s + 3) / 4 * 4;
}

Sequential::Sequential(FieldType in, const std::vector<LayerDesc>& layers)
    : in_(std::move(in)) {
  FieldType cur = in_;
  for (const auto& desc : layers) {
    Item item;
    item.desc = desc;
    item.in = cur;
    switch (desc.kind) {
      case LayerDesc::Kind::kConv: {
        int pad = desc.pad < 0 ? (desc.k - 1) / 2 : desc.pad;
        item.convs.emplace_back(cur, desc.out, desc.k, pad);
        cur = desc.out;
        break;
      }
      case LayerDesc::Kind::kResidual: {
        int pad = (desc.k - 1) / 2;
        item.convs.emplace_back(cur, cur, desc.k, pad);
        item.convs.emplace_back(cur, cur, desc.k, pad);
        item.grid = default_felu_grid(cur);
        break;
      }
      case LayerDesc::Kind::kFelu:
        item.grid = desc.grid > 0 ? desc.grid : default_felu_grid(cur);
        break;
      case LayerDesc::Kind::kPool:
      case LayerDesc::Kind::kUpsample:
        break;
      case LayerDesc::Kind::kNormPool:
        cur = norm_pooled_type(cur);
        break;
    }
    item.out = cur;
    items_.push_back(std::move(item));
  }
  out_ = cur;
}

void Sequential::init(Rng& rng) {
  for (auto& item : items_)
    for (auto& conv : item.convs) conv.init(rng);
}

Tensor Sequential::forward(const Tensor& x) const {
  Tensor cur = x;
  for (const auto& item : items_) {
    switch (item.desc.kind) {
      case LayerDesc::Kind::kConv:
        cur = item.convs[0].forward(cur);
        break;
      case LayerDesc::Kind::kResidual: {
        Tensor h = item.convs[0].forward(cur);
        h = fourier_elu(item.in, h, item.grid);
        h = item.convs[1].forward(h);
        cur = add(cur, h);
        break;
      }
      case LayerDesc::Kind::kFelu:
        cur = fourier_elu(item.in, cur, item.grid);
        break;
      case LayerDesc::Kind::kPool:
        // Mean pooling: per-channel max does not commute with the mixing of
        // irrep channel pairs, so it would break equivariance.
        cur = avg_pool2d(cur);
        break;
      case LayerDesc::Kind::kUpsample:
        cur = upsample_bilinear2(cur);
        break;
      case LayerDesc::Kind::kNormPool:
        cur = norm_pool(item.in, cur);
        break;
    }
  }
  return cur;
}

std::vector<Tensor> Sequential::parameters() const {
  std::vector<Tensor> out;
  for (const auto& item : items_)
    for (const auto& conv : item.convs) out.push_back(conv.coefficients());
  return out;
}

size_t Sequential::parameter_count() const {
  size_t n = 0;
  for (const Tensor& t : parameters()) n += t.size();
  return n;
}

std::vector<const SteerableConv*> Sequential::conv_layers() const {
  std::vector<const SteerableConv*> out;
  for (const auto& item : items_)
    for (const auto& conv : item.convs) out.push_back(&conv);
  return out;
}

Sequential assemble_network(FieldType in, const std::vector<LayerDesc>& layers) {
  return Sequential(std::move(in), layers);
}

UNet::UNet(UNetConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.widths.empty()) throw std::invalid_argument("UNet: no widths");
  int levels = int(cfg_.widths.size()) - 1;
  int pad_lift = (cfg_.k_lift - 1) / 2, pad = (cfg_.k - 1) / 2;
  lift_ = SteerableConv(cfg_.in, cfg_.widths[0], cfg_.k_lift, pad_lift);
  lift_grid_ = default_felu_grid(cfg_.widths[0]);
  for (int l = 0; l <= levels; ++l) {
    ResBlock rb;
    rb.c1 = SteerableConv(cfg_.widths[l], cfg_.widths[l], cfg_.k, pad);
    rb.c2 = SteerableConv(cfg_.widths[l], cfg_.widths[l], cfg_.k, pad);
    rb.grid = default_felu_grid(cfg_.widths[l]);
    level_grids_.push_back(rb.grid);
    res_.push_back(std::move(rb));
  }
  for (int l = 0; l < levels; ++l) {
    down_.emplace_back(cfg_.widths[l], cfg_.widths[l + 1], cfg_.k, pad);
    up_.emplace_back(cfg_.widths[l + 1], cfg_.widths[l], cfg_.k, pad);
  }
  head_ = SteerableConv(cfg_.widths[0], cfg_.out, cfg_.k, pad);
}

void UNet::init(Rng& rng) {
  lift_.init(rng);
  for (auto& rb : res_) {
    rb.c1.init(rng);
    rb.c2.init(rng);
  }
  for (auto& c : down_) c.init(rng);
  for (auto& c : up_) c.init(rng);
  head_.init(rng);
}

Tensor UNet::forward(const Tensor& x) const {
  int levels = int(cfg_.widths.size()) - 1;
  auto res_fwd = [&](const ResBlock& rb, const FieldType& t, const Tensor& v) {
    Tensor h = rb.c1.forward(v);
    h = fourier_elu(t, h, rb.grid);
    h = rb.c2.forward(h);
    return add(v, h);
  };
  Tensor cur = fourier_elu(cfg_.widths[0], lift_.forward(x), lift_grid_);
  std::vector<Tensor> skips;
  for (int l = 0; l < levels; ++l) {
    cur = res_fwd(res_[l], cfg_.widths[l], cur);
    skips.push_back(cur);
    cur = avg_pool2d(cur);  // mean: commutes with the irrep channel action
    cur = fourier_elu(cfg_.widths[l + 1], down_[l].forward(cur),
                      default_felu_grid(cfg_.widths[l + 1]));
  }
  cur = res_fwd(res_[levels], cfg_.widths[levels], cur);
  for (int l = levels - 1; l >= 0; --l) {
    cur = upsample_bilinear2(cur);
    cur = fourier_elu(cfg_.widths[l], up_[l].forward(cur),
                      default_felu_grid(cfg_.widths[l]));
    cur = add(cur, skips[l]);
  }
  return head_.forward(cur);
}

std::vector<Tensor> UNet::parameters() const {
  std::vector<Tensor> out;
  for (const SteerableConv* c : conv_layers()) out.push_back(c->coefficients());
  return out;
}

std::vector<const SteerableConv*> UNet::conv_layers() const {
  std::vector<const SteerableConv*> out;
  out.push_back(&lift_);
  for (const auto& rb : res_) {
    out.push_back(&rb.c1);
    out.push_back(&rb.c2);
  }
  for (const auto& c : down_) out.push_back(&c);
  for (const auto& c : up_) out.push_back(&c);
  out.push_back(&head_);
  return out;
}

double equivariance_residual(const Sequential& net, const Tensor& x,
                             const GroupElement& g) {
  Tensor y1 = net.forward(transform_field(net.in_type(), x, g));
  Tensor y2 = transform_field(net.out_type(), net.forward(x), g);
  double m = 0.0;
  for (size_t i = 0; i < y1.size(); ++i)
    m = std::max(m, std::abs(y1.values()[i] - y2.values()[i]));
  return m;
}

}  // namespace histoport
