#include "pcam/augment.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pcam {

namespace {

// Exact values for multiples of 90 keep those rotations pure pixel
// permutations on square images (std::cos(pi/2) is only ~6e-17).
void trig_for(double degrees, double& c, double& s) {
  if (degrees == 0.0) {
    c = 1.0;
    s = 0.0;
  } else if (degrees == 90.0) {
    c = 0.0;
    s = 1.0;
  } else if (degrees == 180.0) {
    c = -1.0;
    s = 0.0;
  } else if (degrees == 270.0) {
    c = 0.0;
    s = -1.0;
  } else {
    const double rad = degrees * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }
}

double sample_bilinear(const Tensor& img, std::size_t h, std::size_t w,
                       double sy, double sx) {
  const double fy0 = std::floor(sy);
  const double fx0 = std::floor(sx);
  const std::ptrdiff_t y0 = static_cast<std::ptrdiff_t>(fy0);
  const std::ptrdiff_t x0 = static_cast<std::ptrdiff_t>(fx0);
  const double dy = sy - fy0;
  const double dx = sx - fx0;
  auto pix = [&](std::ptrdiff_t y, std::ptrdiff_t x) -> double {
    if (y < 0 || y >= static_cast<std::ptrdiff_t>(h) || x < 0 ||
        x >= static_cast<std::ptrdiff_t>(w))
      return 0.0;
    return img[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  return (1.0 - dy) * ((1.0 - dx) * pix(y0, x0) + dx * pix(y0, x0 + 1)) +
         dy * ((1.0 - dx) * pix(y0 + 1, x0) + dx * pix(y0 + 1, x0 + 1));
}

}  // namespace

Tensor rotate(const Tensor& image, double angle_degrees) {
  if (image.shape().size() != 3 || image.shape()[0] != 1)
    throw std::invalid_argument("rotate: image must be [1,h,w]");
  double angle = std::fmod(angle_degrees, 360.0);
  if (angle < 0.0) angle += 360.0;
  if (angle == 0.0) return image;

  const std::size_t h = image.shape()[1];
  const std::size_t w = image.shape()[2];
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  double c, s;
  trig_for(angle, c, s);

  Tensor out(image.shape());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t col = 0; col < w; ++col) {
      // Destination pixel in centered math coordinates (y up), rotated
      // backwards by the angle to find its source.
      const double X = static_cast<double>(col) - cx;
      const double Y = cy - static_cast<double>(r);
      const double xs = X * c + Y * s;
      const double ys = -X * s + Y * c;
      const double src_col = cx + xs;
      const double src_row = cy - ys;
      out[r * w + col] = sample_bilinear(image, h, w, src_row, src_col);
    }
  }
  return out;
}

Tensor reflect(const Tensor& image, Axis axis) {
  if (image.shape().size() != 3 || image.shape()[0] != 1)
    throw std::invalid_argument("reflect: image must be [1,h,w]");
  const std::size_t h = image.shape()[1];
  const std::size_t w = image.shape()[2];
  Tensor out(image.shape());
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t col = 0; col < w; ++col)
      out[r * w + col] = (axis == Axis::X) ? image[r * w + (w - 1 - col)]
                                           : image[(h - 1 - r) * w + col];
  return out;
}

Tensor augment_sample(const Tensor& image, const AugmentPolicy& policy,
                      RngState& rng) {
  if (!policy.rotate && !policy.reflect_x && !policy.reflect_y) return image;
  Tensor out = image;
  if (policy.rotate) out = rotate(out, 360.0 * rng_uniform(rng));
  // Both coins are drawn whenever any transform is enabled, so the
  // stream position depends only on the rotate flag.
  const double x_coin = rng_uniform(rng);
  const double y_coin = rng_uniform(rng);
  if (policy.reflect_x && x_coin < 0.5) out = reflect(out, Axis::X);
  if (policy.reflect_y && y_coin < 0.5) out = reflect(out, Axis::Y);
  return out;
}

}  // namespace pcam
