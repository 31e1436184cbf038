#pragma once

#include <cstddef>
#include <cstdint>

#include "pcam/dataset.hpp"
#include "pcam/rng.hpp"
#include "pcam/tensor.hpp"

namespace pcam {

enum class Abnormality { Calcification, Mass };

struct FullImageCase {
  Tensor image;  // [1,H,W]
  Tensor mask;   // [1,H,W], 1 where abnormality contribution > 0.05
  // Tight bounding box of the mask.
  std::size_t bbox_row = 0, bbox_col = 0, bbox_h = 0, bbox_w = 0;
  std::size_t label = 0;  // 0 = calcification, 1 = mass (sorted names)
};

// Textured background: 0.25 plus three sinusoids with amplitude in
// [0.02,0.05], so values stay in [0.10,0.40]. Twelve uniform draws.
Tensor gen_background(RngState& rng, std::size_t h, std::size_t w);

// Background plus one smooth elliptical blob (0.6*exp(-r^2) profile),
// clipped to [0,1].
Tensor gen_mass_patch(RngState& rng, std::size_t size);

// Background plus a cluster of 5-15 super-gaussian speckles inside a
// disk of radius size/5, clipped to [0,1].
Tensor gen_calcification_patch(RngState& rng, std::size_t size);

// Two classes {calcification, mass}, n_per_class each, in label order.
// Per-class sample streams are derived from draws on `rng`.
Dataset gen_patch_dataset(RngState& rng, std::size_t n_per_class,
                          std::size_t size);

// Four classes {background, bar, blob, speckle} over the shared
// background model, balanced.
Dataset gen_pretext_dataset(RngState& rng, std::size_t n_per_class,
                            std::size_t size);

// Full canvas with one abnormality at patch scale (64), centroid at
// least patch_scale/2 from every border. H,W must be at least 4x the
// patch scale.
FullImageCase gen_full_image(RngState& rng, std::size_t height,
                             std::size_t width, Abnormality kind);

}  // namespace pcam
