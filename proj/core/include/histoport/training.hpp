#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "histoport/policy.hpp"

namespace histoport {

/// One recorded expert step.  The scene is kept alongside the rendered
/// observation so augmentation can verify that transformed action pixels
/// still land on the tool / in the cavity.
struct DemoStep {
  Tensor obs;
  Action pick, place;
  Scene scene;
};

struct TrainConfig {
  int iterations = 5000;
  double learning_rate = 1e-4;
  int eval_every = 1000;
  int eval_episodes = 20;
  uint64_t eval_seed_base = 1000000;
  bool augment_rotate = true;
  bool augment_translate = true;
  int max_translate = 8;  // pixels, each axis
  uint64_t seed = 0;
  PolicyConfig policy;
  EnvConfig env;
};

/// Flat one-hot targets: pick position over H*W, pick angle over N/2,
/// place over N*H*W with index theta*H*W + u*W + v.
struct Targets {
  size_t pick_pos = 0, pick_angle = 0, place = 0;
};
Targets make_targets(const Action& pick, const Action& place, int n, int h, int w);
Action unflatten_place(size_t index, int h, int w);

/// C_N rotation + integer translation of an observation/action pair.  Labels
/// shift exactly (pick angle by the rotation's bin count, place angle not at
/// all).  Draws are rejected — up to 100 times — whenever a mapped action
/// pixel leaves the image, the tool silhouette, or the cavity; on budget
/// exhaustion the original pair comes back unchanged.
struct AugmentResult {
  Tensor obs;
  Action pick, place;
  Scene scene;
  bool augmented = false;
};
AugmentResult augment(const DemoStep& step, int n, bool rotate, bool translate,
                      int max_translate, Rng& rng);

/// Integer-pixel shift with zero fill: out(r, c) = in(r - dr, c - dc).
Tensor translate_int(const Tensor& a, int dr, int dc);

class Adam {
 public:
  Adam(std::vector<Tensor> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

struct MetricRow {
  int iteration = 0;
  double loss_pick_pos = 0, loss_pick_angle = 0, loss_place = 0;
  double eval_success_rate = -1;  // <0 = not evaluated this iteration
  double wall_seconds = 0;
};

struct EvalResult {
  double success_rate = 0;  // 0..100
  double mean_translation_error = 0;
  double mean_rotation_error = 0;
  double mean_inference_ms = 0;
  int episodes = 0;
};

/// Roll out `episodes` fresh scenes (seeds seed_base, seed_base+1, ...) with
/// greedy actions; weights are untouched.
EvalResult evaluate(const PolicyBundle& policy, int episodes, uint64_t seed_base,
                    const EnvConfig& env);

struct TrainResult {
  std::vector<MetricRow> metrics;
  double best_success = -1;
  int best_iteration = -1;
  double final_loss = 0;
};

/// Behavior cloning, batch size 1: initialize `policy` from cfg.seed, then
/// per iteration sample a step, augment, sum the three cross-entropies,
/// backprop, Adam.  Periodic evaluations retain the best snapshot, which is
/// restored into `policy` on return.
TrainResult train(const TrainConfig& cfg, const std::vector<DemoStep>& dataset,
                  PolicyBundle& policy);

std::vector<std::vector<double>> snapshot_weights(const PolicyBundle& policy);
void restore_weights(PolicyBundle& policy, const std::vector<std::vector<double>>& w);

}  // namespace histoport
