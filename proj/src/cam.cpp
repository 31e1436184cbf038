#include "pcam/cam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcam/kernels.hpp"

namespace pcam {

Heatmap compute_cam(const Network& net, const Tensor& image,
                    std::optional<std::size_t> class_index) {
  if (!is_cam_ready(net))
    throw std::invalid_argument("compute_cam: network is not CAM-ready");
  const ForwardTrace trace = network_forward(net, image);
  const std::size_t c =
      class_index.has_value() ? *class_index : trace.predicted;
  const LayerSpec& dense = net.layers[net.layers.size() - 2];
  if (c >= dense.weight.shape()[0])
    throw std::invalid_argument("compute_cam: class index out of range");

  const std::size_t channels = trace.pre_gap.shape()[0];
  const std::size_t h = trace.pre_gap.shape()[1];
  const std::size_t w = trace.pre_gap.shape()[2];
  Heatmap map;
  map.values = Tensor({1, h, w});
  map.class_index = c;
  map.source_h = image.shape()[1];
  map.source_w = image.shape()[2];
  kernels::cam_accumulate(trace.pre_gap.data(), channels, h, w,
                          dense.weight.data() + c * channels,
                          map.values.data());
  return map;
}

double cam_logit_identity_check(const Network& net, const Tensor& image) {
  const ForwardTrace trace = network_forward(net, image);
  const std::size_t c = trace.predicted;
  const LayerSpec& dense = net.layers[net.layers.size() - 2];
  const std::size_t channels = trace.pre_gap.shape()[0];
  const std::size_t h = trace.pre_gap.shape()[1];
  const std::size_t w = trace.pre_gap.shape()[2];
  Tensor heat({1, h, w});
  kernels::cam_accumulate(trace.pre_gap.data(), channels, h, w,
                          dense.weight.data() + c * channels, heat.data());
  double mean = 0.0;
  for (std::size_t i = 0; i < heat.size(); ++i) mean += heat[i];
  mean /= static_cast<double>(h * w);
  return std::abs(mean + dense.bias[c] - trace.logits[c]);
}

Heatmap upsample_bilinear(const Heatmap& map, std::size_t target_h,
                          std::size_t target_w) {
  const std::size_t sh = map.values.shape()[1];
  const std::size_t sw = map.values.shape()[2];
  if (target_h < sh || target_w < sw)
    throw std::invalid_argument("upsample: target smaller than source");
  Heatmap out = map;
  if (target_h == sh && target_w == sw) return out;
  out.values = Tensor({1, target_h, target_w});
  const double sy = target_h > 1 ? static_cast<double>(sh - 1) /
                                       static_cast<double>(target_h - 1)
                                 : 0.0;
  const double sx = target_w > 1 ? static_cast<double>(sw - 1) /
                                       static_cast<double>(target_w - 1)
                                 : 0.0;
  for (std::size_t y = 0; y < target_h; ++y) {
    const double fy = static_cast<double>(y) * sy;
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), sh - 1);
    const std::size_t y1 = std::min(y0 + 1, sh - 1);
    const double dy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < target_w; ++x) {
      const double fx = static_cast<double>(x) * sx;
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), sw - 1);
      const std::size_t x1 = std::min(x0 + 1, sw - 1);
      const double dx = fx - static_cast<double>(x0);
      const double v00 = map.values[y0 * sw + x0];
      const double v01 = map.values[y0 * sw + x1];
      const double v10 = map.values[y1 * sw + x0];
      const double v11 = map.values[y1 * sw + x1];
      out.values[y * target_w + x] =
          (1.0 - dy) * ((1.0 - dx) * v00 + dx * v01) +
          dy * ((1.0 - dx) * v10 + dx * v11);
    }
  }
  return out;
}

Heatmap normalize_heatmap(const Heatmap& map) {
  Heatmap out = map;
  double lo = map.values[0], hi = map.values[0];
  for (std::size_t i = 1; i < map.values.size(); ++i) {
    lo = std::min(lo, map.values[i]);
    hi = std::max(hi, map.values[i]);
  }
  if (hi > lo) {
    const double inv = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < out.values.size(); ++i)
      out.values[i] = (map.values[i] - lo) * inv;
  } else {
    out.values.fill(0.0);
  }
  out.normalized = true;
  return out;
}

LocScore localization_score(const Heatmap& map, const Tensor& mask,
                            double threshold) {
  if (!map.normalized)
    throw std::invalid_argument("localization_score: heatmap not normalized");
  if (!map.values.same_shape(mask))
    throw std::invalid_argument("localization_score: size mismatch");
  const std::size_t h = mask.shape()[1];
  const std::size_t w = mask.shape()[2];

  std::size_t rmin = h, rmax = 0, cmin = w, cmax = 0;
  bool any = false;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (mask[y * w + x] != 0.0) {
        any = true;
        rmin = std::min(rmin, y);
        rmax = std::max(rmax, y);
        cmin = std::min(cmin, x);
        cmax = std::max(cmax, x);
      }
    }
  }
  if (!any) throw std::invalid_argument("localization_score: empty mask");

  std::size_t peak = 0;
  for (std::size_t i = 1; i < map.values.size(); ++i)
    if (map.values[i] > map.values[peak]) peak = i;
  const std::size_t py = peak / w;
  const std::size_t px = peak % w;

  LocScore score;
  score.hit = py >= rmin && py <= rmax && px >= cmin && px <= cmax;
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool in_region = map.values[i] >= threshold;
    const bool in_mask = mask[i] != 0.0;
    if (in_region && in_mask) ++inter;
    if (in_region || in_mask) ++uni;
  }
  score.iou = uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni)
                      : 0.0;
  return score;
}

}  // namespace pcam
