#pragma once
#include <string>
#include <utility>

#include "histoport/eoh.hpp"
#include "histoport/kitting.hpp"
#include "histoport/steerable.hpp"

namespace histoport {

/// How the place model describes scene and crop: `kEoh` correlates
/// orientation histograms through the subgroup alignment; `kInvariant`
/// norm-pools both encoders to rotation-invariant channels and aligns by
/// spatial rotation only (the ablation baseline).
enum class PlaceMode { kEoh, kInvariant };

struct PolicyConfig {
  int n = 36;           // C_N angle resolution
  int m = 12;           // alignment subgroup order (divides n)
  int crop = 25;        // pick-angle crop side, odd
  int place_crop = 25;  // place template side, odd
  int in_channels = 1;
  int height = 64, width = 64;
  PlaceMode mode = PlaceMode::kEoh;
  int jc_angle = 6;  // pick-angle quotient head cutoff
  int jc_place = 3;  // place encoder head cutoff
};

/// The three heads of the agent.
///
///  - pick position: equivariant U-Net, norm-pooled to invariant channels,
///    finished by plain 1x1 convolutions and a softmax over all pixels;
///  - pick angle: bias-free equivariant stack collapsing the crop to a
///    single quotient coefficient vector, discretized to N/2 bins over
///    [0, pi) and softmaxed;
///  - place: scene and crop encoders ending in orientation histograms; the
///    crop histogram stack is rotated/channel-aligned N ways and slid over
///    the padded scene map as a cross-correlation, giving N x H x W joint
///    logits.
class PolicyBundle {
 public:
  explicit PolicyBundle(const PolicyConfig& cfg);

  void init(Rng& rng);

  /// (H, W) probability map, sums to 1.
  Tensor pick_position(const Tensor& obs) const;
  /// (N/2) probability vector from a (d, crop, crop) patch.
  Tensor pick_angle(const Tensor& crop) const;
  /// Pre-softmax versions for cross-entropy training, flattened.
  Tensor pick_position_logits(const Tensor& obs) const;  // (H*W)
  Tensor pick_angle_logits(const Tensor& crop) const;    // (N/2)
  /// (N, H, W) raw correlation scores (joint logits).
  Tensor place_distribution(const Tensor& obs, const Tensor& crop) const;

  /// The scene encoder's descriptor map over the padded observation:
  /// (M, H+2p, W+2p) orientation histograms, or the pooled invariant
  /// channels in `kInvariant` mode.  Used by the visualizer.
  Tensor scene_descriptor_map(const Tensor& obs) const;

  /// Greedy action pair; ties break to the lowest flat row-major index.
  std::pair<Action, Action> select_actions(const Tensor& obs) const;

  /// Patch of side `side` centered at pixel (u, v), zero-padded past edges.
  static Tensor crop_centered(const Tensor& obs, int u, int v, int side);

  std::vector<Tensor> parameters() const;
  size_t parameter_count() const;
  struct HeadCounts {
    size_t pick_pos = 0, pick_angle = 0, place = 0;
  };
  HeadCounts head_parameter_counts() const;

  /// One entry per parameters() element; `conv` points at the owning
  /// equivariant layer when the tensor holds basis coefficients.
  struct ParamDesc {
    std::string name;
    Shape shape;
    const SteerableConv* conv = nullptr;
  };
  std::vector<ParamDesc> parameter_descriptions() const;

  const PolicyConfig& config() const { return cfg_; }

 private:
  PolicyConfig cfg_;
  UNet pick_net_;
  FieldType pick_out_type_;
  Tensor head_w1_, head_b1_, head_w2_, head_b2_;  // plain 1x1 convs
  Sequential angle_net_;
  Sequential scene_net_, crop_net_;  // phi (scene) and psi (crop)
};

}  // namespace histoport
