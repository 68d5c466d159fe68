#pragma once
#include <filesystem>
#include <vector>

#include "histoport/tensor.hpp"

namespace histoport {

/// Per-pixel maximum over the bin axis of an (M, H, W) map.
std::vector<double> max_bin_map(const Tensor& eoh);

/// Binary P6 image of `v` (row-major h x w) under a dark-to-bright color
/// ramp; values are normalized to the observed [min, max].
void write_ppm_heatmap(const std::filesystem::path& path,
                       const std::vector<double>& v, int h, int w);

/// Orientation-star overlay: at every stride-th pixel, one line segment per
/// bin of an (M, H, W) map, angle 2*pi*j/M, length proportional to the bin
/// value.  Emits exactly ceil(H/stride)*ceil(W/stride)*M <line> elements.
void write_eoh_svg(const std::filesystem::path& path, const Tensor& eoh,
                   int stride);

}  // namespace histoport
