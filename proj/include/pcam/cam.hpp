#pragma once

#include <cstddef>
#include <optional>

#include "pcam/network.hpp"
#include "pcam/tensor.hpp"

namespace pcam {

struct Heatmap {
  Tensor values;  // [1,h,w]; raw maps are unbounded in sign
  std::size_t class_index = 0;
  std::size_t source_h = 0, source_w = 0;  // input image size
  bool normalized = false;
};

// One forward pass, then heatmap(y,x) = sum_i w[c][i] * pre_gap[i](y,x)
// with w the Dense weight and c the requested (or predicted) class.
// The Dense bias is not part of the map.
Heatmap compute_cam(const Network& net, const Tensor& image,
                    std::optional<std::size_t> class_index = std::nullopt);

// |mean(heatmap_c) + bias_c - logit_c| for the predicted class; the
// GAP/Dense linearity identity makes this tiny (< 1e-9 in doubles).
double cam_logit_identity_check(const Network& net, const Tensor& image);

// Align-corners bilinear to (target_h, target_w); target must be at
// least the source size in both dimensions.
Heatmap upsample_bilinear(const Heatmap& map, std::size_t target_h,
                          std::size_t target_w);

// Min-max to [0,1]; a constant map becomes all zeros.
Heatmap normalize_heatmap(const Heatmap& map);

struct LocScore {
  bool hit = false;
  double iou = 0.0;
};

// hit: the heatmap argmax pixel (row-major first on ties) lies inside
// the mask's tight bounding box. iou: pixels >= threshold vs mask.
// Expects a normalized heatmap matching the mask's size.
LocScore localization_score(const Heatmap& map, const Tensor& mask,
                            double threshold = 0.5);

}  // namespace pcam
