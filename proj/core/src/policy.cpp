#include "histoport/policy.hpp"

#include <cmath>
#include <stdexcept>

namespace histoport {

namespace {

std::vector<LayerDesc> encoder_layers(const PolicyConfig& cfg) {
  FieldType hidden = FieldType::of(RepSpec::irrep_sum(cfg.jc_place), 3);
  FieldType head = FieldType::of(RepSpec::irrep_sum(cfg.jc_place), 1);
  std::vector<LayerDesc> layers = {
      LayerDesc::conv(hidden, 5), LayerDesc::felu(),
      LayerDesc::conv(hidden, 3), LayerDesc::felu(),
      LayerDesc::conv(hidden, 3), LayerDesc::felu(),
  };
  // Both modes share the same head; invariant mode only swaps the final
  // group discretization for group pooling, so the ablation differs in the
  // descriptor computation alone (identical parameter count).
  layers.push_back(LayerDesc::conv(head, 5));
  if (cfg.mode != PlaceMode::kEoh)
    layers.push_back(LayerDesc::norm_pool_layer());
  return layers;
}

}  // namespace

PolicyBundle::PolicyBundle(const PolicyConfig& cfg) : cfg_(cfg) {
  if (cfg.n <= 0 || cfg.m <= 0 || cfg.n % cfg.m != 0)
    throw std::invalid_argument("n must be a positive multiple of m");
  if (cfg.n % 2 != 0) throw std::invalid_argument("n must be even");
  if (cfg.crop % 2 == 0 || cfg.place_crop % 2 == 0)
    throw std::invalid_argument("crop sides must be odd");
  if (cfg.m < 1 + 2 * cfg.jc_place)
    throw std::invalid_argument("m below the place-encoder Nyquist bound");
  if (cfg.height % 4 != 0 || cfg.width % 4 != 0)
    throw std::invalid_argument("observation sides must be divisible by 4");

  FieldType in = FieldType::of(RepSpec::trivial(), cfg.in_channels);
  RepSpec f3 = RepSpec::irrep_sum(3);

  UNetConfig uc;
  uc.in = in;
  uc.widths = {FieldType::of(f3, 3), FieldType::of(f3, 5), FieldType::of(f3, 5)};
  uc.out = FieldType::of(f3, 2);
  pick_net_ = UNet(uc);
  pick_out_type_ = uc.out;
  int pooled = norm_pooled_type(uc.out).dim();
  head_w1_ = Tensor::zeros({pooled, pooled, 1, 1}, true);
  head_b1_ = Tensor::zeros({pooled}, true);
  head_w2_ = Tensor::zeros({1, pooled, 1, 1}, true);
  head_b2_ = Tensor::zeros({1}, true);

  FieldType angle_hidden = FieldType::of(RepSpec::irrep_sum(cfg.jc_angle), 3);
  FieldType angle_head = FieldType::of(RepSpec::quotient_irrep_sum(cfg.jc_angle), 1);
  // Five valid convolutions collapse the odd crop to 1x1 while keeping the
  // rotation center on a pixel (pooling would force even intermediates).
  int k_last = cfg.crop - 4 * 4;  // after four k=5 stages
  if (k_last < 1 || k_last % 2 == 0)
    throw std::invalid_argument("crop side incompatible with the angle stack");
  angle_net_ = assemble_network(
      in, {LayerDesc::conv(angle_hidden, 5, 0), LayerDesc::felu(),
           LayerDesc::conv(angle_hidden, 5, 0), LayerDesc::felu(),
           LayerDesc::conv(angle_hidden, 5, 0), LayerDesc::felu(),
           LayerDesc::conv(angle_hidden, 5, 0), LayerDesc::felu(),
           LayerDesc::conv(angle_head, k_last, 0)});

  scene_net_ = assemble_network(in, encoder_layers(cfg));
  crop_net_ = assemble_network(in, encoder_layers(cfg));
}

void PolicyBundle::init(Rng& rng) {
  pick_net_.init(rng);
  int pooled = norm_pooled_type(pick_out_type_).dim();
  double std1 = std::sqrt(2.0 / pooled);
  head_w1_ = Tensor::randn({pooled, pooled, 1, 1}, rng, std1, true);
  head_b1_ = Tensor::zeros({pooled}, true);
  head_w2_ = Tensor::randn({1, pooled, 1, 1}, rng, std1, true);
  head_b2_ = Tensor::zeros({1}, true);
  angle_net_.init(rng);
  scene_net_.init(rng);
  crop_net_.init(rng);
}

Tensor PolicyBundle::pick_position_logits(const Tensor& obs) const {
  const Shape& s = obs.shape();
  if (int(s.size()) != 3 || s[0] != cfg_.in_channels || s[1] != cfg_.height ||
      s[2] != cfg_.width)
    throw std::invalid_argument("observation shape mismatch");
  Tensor feat = norm_pool(pick_out_type_, pick_net_.forward(obs));
  Tensor h = elu(add_channel_bias(conv2d(feat, head_w1_, 0), head_b1_));
  Tensor logits = add_channel_bias(conv2d(h, head_w2_, 0), head_b2_);
  return reshape(logits, {cfg_.height * cfg_.width});
}

Tensor PolicyBundle::pick_position(const Tensor& obs) const {
  return reshape(softmax_flat(pick_position_logits(obs)),
                 {cfg_.height, cfg_.width});
}

Tensor PolicyBundle::pick_angle_logits(const Tensor& crop) const {
  const Shape& s = crop.shape();
  if (int(s.size()) != 3 || s[0] != cfg_.in_channels || s[1] != cfg_.crop ||
      s[2] != cfg_.crop)
    throw std::invalid_argument("pick crop shape mismatch");
  Tensor coeffs = angle_net_.forward(crop);  // (1+2jc, 1, 1)
  DiscretizationMatrix d =
      discretization_matrix(cfg_.n, (coeffs.shape()[0] - 1) / 2, true);
  return reshape(channel_matmul(d.q, coeffs), {cfg_.n / 2});
}

Tensor PolicyBundle::pick_angle(const Tensor& crop) const {
  return softmax_axis0(pick_angle_logits(crop));
}

Tensor PolicyBundle::place_distribution(const Tensor& obs, const Tensor& crop) const {
  const Shape& cs = crop.shape();
  if (int(cs.size()) != 3 || cs[0] != cfg_.in_channels ||
      cs[1] != cfg_.place_crop || cs[2] != cfg_.place_crop)
    throw std::invalid_argument("place crop shape mismatch");
  int p = (cfg_.place_crop - 1) / 2;
  Tensor scene_feat = scene_net_.forward(pad2d(obs, p));
  Tensor crop_feat = crop_net_.forward(crop);
  Tensor kernel;
  Tensor scene_map;
  if (cfg_.mode == PlaceMode::kEoh) {
    scene_map = generate_eoh(scene_feat, cfg_.m);
    // Align in coefficient space: the channel action of a rotation on
    // Fourier coefficients is exact at any angle, and the histogram softmax
    // runs downstream of the spatial interpolation, so kernel peaks stay
    // sharp at non-quarter angles (interpolating probabilities instead
    // flattens them).
    FieldType ct = FieldType::of(RepSpec::irrep_sum(cfg_.jc_place), 1);
    std::vector<Tensor> rows;
    rows.reserve(cfg_.n);
    for (int i = 0; i < cfg_.n; ++i) {
      GroupElement gi = GroupElement::rotation(kTwoPi * i / cfg_.n);
      rows.push_back(generate_eoh(transform_field(ct, crop_feat, gi), cfg_.m));
    }
    kernel = reshape(concat_axis0(rows),
                     {cfg_.n, cfg_.m, cfg_.place_crop, cfg_.place_crop});
  } else {
    scene_map = scene_feat;  // already invariant channels
    int c = crop_feat.shape()[0];
    kernel = reshape(invariant_alignment(crop_feat, cfg_.n),
                     {cfg_.n, c, cfg_.place_crop, cfg_.place_crop});
  }
  return conv2d(scene_map, kernel, 0);
}

Tensor PolicyBundle::scene_descriptor_map(const Tensor& obs) const {
  int p = (cfg_.place_crop - 1) / 2;
  Tensor feat = scene_net_.forward(pad2d(obs, p));
  if (cfg_.mode == PlaceMode::kEoh) return generate_eoh(feat, cfg_.m);
  return feat;
}

Tensor PolicyBundle::crop_centered(const Tensor& obs, int u, int v, int side) {
  const Shape& s = obs.shape();
  if (int(s.size()) != 3) throw std::invalid_argument("expected (C, H, W)");
  int h = (side - 1) / 2;
  return slice2d(pad2d(obs, h), u, v, side, side);
}

std::pair<Action, Action> PolicyBundle::select_actions(const Tensor& obs) const {
  Tensor pm = pick_position(obs);
  size_t flat = argmax_flat(pm);
  Action pick;
  pick.u = int(flat / cfg_.width);
  pick.v = int(flat % cfg_.width);
  Tensor angle = pick_angle(crop_centered(obs, pick.u, pick.v, cfg_.crop));
  pick.theta_index = int(argmax_flat(angle));

  Tensor scores = place_distribution(
      obs, crop_centered(obs, pick.u, pick.v, cfg_.place_crop));
  size_t pf = argmax_flat(scores);
  size_t pix = size_t(cfg_.height) * cfg_.width;
  Action place;
  place.theta_index = int(pf / pix);
  place.u = int((pf % pix) / cfg_.width);
  place.v = int(pf % cfg_.width);
  return {pick, place};
}

std::vector<Tensor> PolicyBundle::parameters() const {
  std::vector<Tensor> out = pick_net_.parameters();
  out.push_back(head_w1_);
  out.push_back(head_b1_);
  out.push_back(head_w2_);
  out.push_back(head_b2_);
  for (const Tensor& t : angle_net_.parameters()) out.push_back(t);
  for (const Tensor& t : scene_net_.parameters()) out.push_back(t);
  for (const Tensor& t : crop_net_.parameters()) out.push_back(t);
  return out;
}

size_t PolicyBundle::parameter_count() const {
  size_t n = 0;
  for (const Tensor& t : parameters()) n += t.values().size();
  return n;
}

std::vector<PolicyBundle::ParamDesc> PolicyBundle::parameter_descriptions() const {
  std::vector<ParamDesc> out;
  auto add_convs = [&](const std::string& prefix,
                       const std::vector<const SteerableConv*>& convs) {
    for (size_t i = 0; i < convs.size(); ++i)
      out.push_back({prefix + ".conv" + std::to_string(i),
                     convs[i]->coefficients().shape(), convs[i]});
  };
  add_convs("pick_pos.unet", pick_net_.conv_layers());
  out.push_back({"pick_pos.head_w1", head_w1_.shape(), nullptr});
  out.push_back({"pick_pos.head_b1", head_b1_.shape(), nullptr});
  out.push_back({"pick_pos.head_w2", head_w2_.shape(), nullptr});
  out.push_back({"pick_pos.head_b2", head_b2_.shape(), nullptr});
  add_convs("pick_angle", angle_net_.conv_layers());
  add_convs("place.scene", scene_net_.conv_layers());
  add_convs("place.crop", crop_net_.conv_layers());
  return out;
}

PolicyBundle::HeadCounts PolicyBundle::head_parameter_counts() const {
  HeadCounts c;
  for (const Tensor& t : pick_net_.parameters()) c.pick_pos += t.values().size();
  c.pick_pos += head_w1_.values().size() + head_b1_.values().size() +
                head_w2_.values().size() + head_b2_.values().size();
  c.pick_angle = angle_net_.parameter_count();
  c.place = scene_net_.parameter_count() + crop_net_.parameter_count();
  return c;
}

}  // namespace histoport
