#include "histoport/training.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace histoport {

Targets make_targets(const Action& pick, const Action& place, int n, int h, int w) {
  auto in_range = [&](const Action& a, int bins) {
    return a.u >= 0 && a.u < h && a.v >= 0 && a.v < w && a.theta_index >= 0 &&
           a.theta_index < bins;
  };
  if (!in_range(pick, n / 2) || !in_range(place, n))
    throw std::out_of_range("action outside its bin ranges");
  Targets t;
  t.pick_pos = size_t(pick.u) * w + pick.v;
  t.pick_angle = size_t(pick.theta_index);
  t.place = (size_t(place.theta_index) * h + place.u) * w + place.v;
  return t;
}

Action unflatten_place(size_t index, int h, int w) {
  Action a;
  a.theta_index = int(index / (size_t(h) * w));
  a.u = int((index / w) % h);
  a.v = int(index % w);
  return a;
}

Tensor translate_int(const Tensor& a, int dr, int dc) {
  const Shape& s = a.shape();
  if (s.size() != 3) throw std::invalid_argument("expected (C, H, W)");
  int c = s[0], h = s[1], w = s[2];
  std::vector<double> out(size_t(c) * h * w, 0.0);
  const std::vector<double>& in = a.values();
  for (int ch = 0; ch < c; ++ch)
    for (int r = 0; r < h; ++r) {
      int sr = r - dr;
      if (sr < 0 || sr >= h) continue;
      for (int col = 0; col < w; ++col) {
        int sc = col - dc;
        if (sc < 0 || sc >= w) continue;
        out[(size_t(ch) * h + r) * w + col] = in[(size_t(ch) * h + sr) * w + sc];
      }
    }
  return Tensor::from_data(s, std::move(out));
}

AugmentResult augment(const DemoStep& step, int n, bool rotate, bool translate,
                      int max_translate, Rng& rng) {
  const Shape& s = step.obs.shape();
  int h = s[1], w = s[2];
  for (int attempt = 0; attempt < 100; ++attempt) {
    int kr = rotate ? rng.uniform_int(0, n - 1) : 0;
    int dr = translate ? rng.uniform_int(-max_translate, max_translate) : 0;
    int dc = translate ? rng.uniform_int(-max_translate, max_translate) : 0;
    double theta = kTwoPi * kr / n;

    Scene scene2 = transform_scene(step.scene, theta, dr, dc);
    Vec2 pick_pt{double(step.pick.v), double(step.pick.u)};
    Vec2 place_pt{double(step.place.v), double(step.place.u)};
    Vec2 p2 = transform_point(step.scene, pick_pt, theta, dr, dc);
    Vec2 q2 = transform_point(step.scene, place_pt, theta, dr, dc);
    Action pick2{int(std::lround(p2.y)), int(std::lround(p2.x)),
                 (step.pick.theta_index + kr) % (n / 2)};
    Action place2{int(std::lround(q2.y)), int(std::lround(q2.x)),
                  step.place.theta_index};

    auto inside = [&](const Action& a) {
      return a.u >= 0 && a.u < h && a.v >= 0 && a.v < w;
    };
    if (!inside(pick2) || !inside(place2)) continue;
    if (!scene2.tool_contains({double(pick2.v), double(pick2.u)})) continue;
    if (!scene2.cavity_contains({double(place2.v), double(place2.u)})) continue;

    AugmentResult out;
    if (kr == 0 && dr == 0 && dc == 0) {
      out.obs = step.obs;
    } else {
      out.obs = translate_int(rotate_bilinear(step.obs, theta), dr, dc);
    }
    out.pick = pick2;
    out.place = place2;
    out.scene = scene2;
    out.augmented = true;
    return out;
  }
  return {step.obs, step.pick, step.place, step.scene, false};
}

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const Tensor& p : params_) {
    m_.emplace_back(p.values().size(), 0.0);
    v_.emplace_back(p.values().size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, double(t_));
  double bc2 = 1.0 - std::pow(beta2_, double(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    std::vector<double>& w = params_[i].values();
    const std::vector<double>& g = params_[i].grads();
    for (size_t j = 0; j < w.size(); ++j) {
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g[j];
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g[j] * g[j];
      w[j] -= lr_ * (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

EvalResult evaluate(const PolicyBundle& policy, int episodes, uint64_t seed_base,
                    const EnvConfig& env) {
  EvalResult r;
  r.episodes = episodes;
  int successes = 0;
  double terr = 0, rerr = 0, ms = 0;
  for (int i = 0; i < episodes; ++i) {
    Scene scene = generate_episode(seed_base + uint64_t(i), env);
    Tensor obs = render_observation(scene);
    auto t0 = std::chrono::steady_clock::now();
    auto [pick, place] = policy.select_actions(obs);
    auto t1 = std::chrono::steady_clock::now();
    ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
    Scene after = apply_action(scene, pick, place, policy.config().n);
    SuccessReport rep = check_success(after);
    successes += rep.success ? 1 : 0;
    terr += rep.translation_error;
    rerr += std::abs(rep.rotation_error);
  }
  r.success_rate = 100.0 * successes / std::max(1, episodes);
  r.mean_translation_error = terr / std::max(1, episodes);
  r.mean_rotation_error = rerr / std::max(1, episodes);
  r.mean_inference_ms = ms / std::max(1, episodes);
  return r;
}

std::vector<std::vector<double>> snapshot_weights(const PolicyBundle& policy) {
  std::vector<std::vector<double>> w;
  for (const Tensor& p : policy.parameters()) w.push_back(p.values());
  return w;
}

void restore_weights(PolicyBundle& policy, const std::vector<std::vector<double>>& w) {
  std::vector<Tensor> params = policy.parameters();
  if (params.size() != w.size())
    throw std::invalid_argument("weight snapshot layout mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    if (params[i].values().size() != w[i].size())
      throw std::invalid_argument("weight snapshot shape mismatch");
    params[i].values() = w[i];
  }
}

TrainResult train(const TrainConfig& cfg, const std::vector<DemoStep>& dataset,
                  PolicyBundle& policy) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  const PolicyConfig& pc = cfg.policy;
  for (const DemoStep& d : dataset) {
    const Shape& s = d.obs.shape();
    if (s.size() != 3 || s[0] != pc.in_channels || s[1] != pc.height ||
        s[2] != pc.width)
      throw std::invalid_argument("dataset observation shape mismatch");
  }

  Rng rng(hash64(cfg.seed));
  policy.init(rng);
  Adam opt(policy.parameters(), cfg.learning_rate);

  TrainResult result;
  std::vector<std::vector<double>> best;
  auto start = std::chrono::steady_clock::now();

  for (int it = 1; it <= cfg.iterations; ++it) {
    const DemoStep& step = dataset[rng.uniform_int(0, int(dataset.size()) - 1)];
    AugmentResult aug = augment(step, pc.n, cfg.augment_rotate,
                                cfg.augment_translate, cfg.max_translate, rng);
    Targets t = make_targets(aug.pick, aug.place, pc.n, pc.height, pc.width);

    Tensor pick_logits = policy.pick_position_logits(aug.obs);
    Tensor crop = PolicyBundle::crop_centered(aug.obs, aug.pick.u, aug.pick.v, pc.crop);
    Tensor angle_logits = policy.pick_angle_logits(crop);
    Tensor place_crop =
        PolicyBundle::crop_centered(aug.obs, aug.pick.u, aug.pick.v, pc.place_crop);
    Tensor place_logits = policy.place_distribution(aug.obs, place_crop);

    Tensor l_pick = cross_entropy(pick_logits, t.pick_pos);
    Tensor l_angle = cross_entropy(angle_logits, t.pick_angle);
    Tensor l_place = cross_entropy(place_logits, t.place);
    Tensor loss = add(add(l_pick, l_angle), l_place);

    opt.zero_grad();
    loss.backward();
    opt.step();

    MetricRow row;
    row.iteration = it;
    row.loss_pick_pos = l_pick.scalar_value();
    row.loss_pick_angle = l_angle.scalar_value();
    row.loss_place = l_place.scalar_value();
    if (cfg.eval_every > 0 &&
        (it % cfg.eval_every == 0 || it == cfg.iterations)) {
      EvalResult ev =
          evaluate(policy, cfg.eval_episodes, cfg.eval_seed_base, cfg.env);
      row.eval_success_rate = ev.success_rate;
      if (ev.success_rate > result.best_success) {
        result.best_success = ev.success_rate;
        result.best_iteration = it;
        best = snapshot_weights(policy);
      }
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    result.final_loss = row.loss_pick_pos + row.loss_pick_angle + row.loss_place;
    result.metrics.push_back(row);
  }

  if (!best.empty()) restore_weights(policy, best);
  return result;
}

}  // namespace histoport
