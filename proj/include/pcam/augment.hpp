#pragma once

#include "pcam/rng.hpp"
#include "pcam/tensor.hpp"

namespace pcam {

struct AugmentPolicy {
  bool rotate = true;
  bool reflect_x = true;
  bool reflect_y = true;
};

enum class Axis { X, Y };

// Rotation about ((h-1)/2, (w-1)/2), counter-clockwise positive,
// bilinear inverse mapping, out-of-bounds sources read as 0. Angle is
// taken mod 360; exact multiples of 90 use exact trig so square images
// come back as pure pixel permutations.
Tensor rotate(const Tensor& image, double angle_degrees);

// X mirrors columns (vertical axis), Y mirrors rows.
Tensor reflect(const Tensor& image, Axis axis);

// Draw order: angle (when rotate), x-coin, y-coin; a coin below 0.5
// applies its reflection. Consumes 3 uniforms with rotate enabled, 2
// without, 0 when the policy is all-false.
Tensor augment_sample(const Tensor& image, const AugmentPolicy& policy,
                      RngState& rng);

}  // namespace pcam
