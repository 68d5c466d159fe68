#include "histoport/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "histoport/group.hpp"

namespace histoport {

std::vector<double> max_bin_map(const Tensor& eoh) {
  const Shape& s = eoh.shape();
  if (s.size() != 3) throw std::invalid_argument("expected (M, H, W)");
  int m = s[0], h = s[1], w = s[2];
  std::vector<double> out(size_t(h) * w, -1e300);
  const std::vector<double>& v = eoh.values();
  for (int b = 0; b < m; ++b)
    for (size_t i = 0; i < size_t(h) * w; ++i)
      out[i] = std::max(out[i], v[size_t(b) * h * w + i]);
  return out;
}

namespace {

struct Rgb {
  double r, g, b;
};

// Compact dark-violet -> orange -> light-yellow ramp.
Rgb ramp(double t) {
  static const Rgb stops[] = {{0.00, 0.00, 0.05}, {0.23, 0.03, 0.37},
                              {0.63, 0.16, 0.40}, {0.91, 0.36, 0.21},
                              {0.98, 0.73, 0.16}, {0.99, 0.99, 0.75}};
  t = std::clamp(t, 0.0, 1.0) * 5.0;
  int i = std::min(4, int(t));
  double f = t - i;
  return {stops[i].r + f * (stops[i + 1].r - stops[i].r),
          stops[i].g + f * (stops[i + 1].g - stops[i].g),
          stops[i].b + f * (stops[i + 1].b - stops[i].b)};
}

}  // namespace

void write_ppm_heatmap(const std::filesystem::path& path,
                       const std::vector<double>& v, int h, int w) {
  if (int(v.size()) != h * w) throw std::invalid_argument("size mismatch");
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  double span = hi - lo > 0 ? hi - lo : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P6\n" << w << " " << h << "\n255\n";
  for (double x : v) {
    Rgb c = ramp((x - lo) / span);
    unsigned char px[3] = {(unsigned char)std::lround(255 * c.r),
                           (unsigned char)std::lround(255 * c.g),
                           (unsigned char)std::lround(255 * c.b)};
    out.write(reinterpret_cast<const char*>(px), 3);
  }
}

void write_eoh_svg(const std::filesystem::path& path, const Tensor& eoh,
                   int stride) {
  const Shape& s = eoh.shape();
  if (s.size() != 3) throw std::invalid_argument("expected (M, H, W)");
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  int m = s[0], h = s[1], w = s[2];
  const std::vector<double>& v = eoh.values();
  double vmax = *std::max_element(v.begin(), v.end());
  if (vmax <= 0) vmax = 1.0;

  const int scale = 8;  // display pixels per image pixel
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale
      << "\" height=\"" << h * scale << "\" viewBox=\"0 0 " << w * scale << " "
      << h * scale << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"#111\"/>\n";
  for (int r = 0; r < h; r += stride)
    for (int c = 0; c < w; c += stride) {
      double cx = (c + 0.5) * scale, cy = (r + 0.5) * scale;
      for (int j = 0; j < m; ++j) {
        double val = v[(size_t(j) * h + r) * w + c];
        double len = 0.5 * stride * scale * std::max(0.0, val) / vmax;
        double a = kTwoPi * j / m;
        out << "<line x1=\"" << cx << "\" y1=\"" << cy << "\" x2=\""
            << cx + len * std::cos(a) << "\" y2=\"" << cy + len * std::sin(a)
            << "\" stroke=\"#fc6\" stroke-width=\"1\"/>\n";
      }
    }
  out << "</svg>\n";
}

}  // namespace histoport
