#include "pcam/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pcam/errors.hpp"

namespace pcam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
// Geometry of every abnormality is defined at this scale; full images
// embed abnormalities at patch scale rather than canvas scale.
constexpr std::size_t kPatchScale = 64;
constexpr double kMaskThreshold = 0.05;

void clip01(Tensor& img) {
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = std::clamp(img[i], 0.0, 1.0);
}

// Draws cy then cx, each uniform in [lo*extent, hi*extent).
void draw_center(RngState& rng, double h, double w, double lo, double hi,
                 double& cy, double& cx) {
  cy = h * (lo + (hi - lo) * rng_uniform(rng));
  cx = w * (lo + (hi - lo) * rng_uniform(rng));
}

// Smooth elliptical blob, 0.6*exp(-r^2) in ellipse coordinates.
// Draw order: cy, cx, ry, rx.
void add_mass(RngState& rng, Tensor& img, Tensor& contrib, double cy,
              double cx, double scale) {
  const double ry = scale * (0.125 + 0.125 * rng_uniform(rng));
  const double rx = scale * (0.125 + 0.125 * rng_uniform(rng));
  const std::size_t h = img.shape()[1];
  const std::size_t w = img.shape()[2];
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double ny = (static_cast<double>(y) - cy) / ry;
      const double nx = (static_cast<double>(x) - cx) / rx;
      const double r2 = ny * ny + nx * nx;
      if (r2 > 16.0) continue;  // exp(-16) is far below the mask cut
      const double v = 0.6 * std::exp(-r2);
      img[y * w + x] += v;
      contrib[y * w + x] += v;
    }
  }
}

// Cluster of sharp speckles inside a disk of radius scale/5. Draw
// order: count coin, then per speckle angle, radial, radius,
// intensity.
void add_calcification(RngState& rng, Tensor& img, Tensor& contrib, double cy,
                       double cx, double scale) {
  const std::size_t count =
      5 + static_cast<std::size_t>(std::floor(rng_uniform(rng) * 11.0));
  const double cluster_r = scale / 5.0;
  const std::size_t h = img.shape()[1];
  const std::size_t w = img.shape()[2];
  for (std::size_t s = 0; s < count; ++s) {
    const double angle = kTwoPi * rng_uniform(rng);
    const double rdist = cluster_r * std::sqrt(rng_uniform(rng));
    const double srad = 1.0 + 2.0 * rng_uniform(rng);
    const double inten = 0.7 + 0.3 * rng_uniform(rng);
    const double sy = cy + rdist * std::sin(angle);
    const double sx = cx + rdist * std::cos(angle);
    // Super-gaussian: near-flat core, sharp falloff past srad.
    const double reach = 3.0 * srad;
    const std::size_t y0 = static_cast<std::size_t>(
        std::max(0.0, std::floor(sy - reach)));
    const std::size_t y1 = static_cast<std::size_t>(
        std::min(static_cast<double>(h) - 1.0, std::ceil(sy + reach)));
    const std::size_t x0 = static_cast<std::size_t>(
        std::max(0.0, std::floor(sx - reach)));
    const std::size_t x1 = static_cast<std::size_t>(
        std::min(static_cast<double>(w) - 1.0, std::ceil(sx + reach)));
    for (std::size_t y = y0; y <= y1; ++y) {
      for (std::size_t x = x0; x <= x1; ++x) {
        const double dy = (static_cast<double>(y) - sy) / srad;
        const double dx = (static_cast<double>(x) - sx) / srad;
        const double d4 = (dy * dy + dx * dx) * (dy * dy + dx * dx);
        const double v = inten * std::exp(-d4);
        img[y * w + x] += v;
        contrib[y * w + x] += v;
      }
    }
  }
}

// Bright bar through (cy,cx). Draw order: orientation, half-length,
// half-width, intensity.
void add_bar(RngState& rng, Tensor& img, double cy, double cx, double scale) {
  const double theta = std::numbers::pi * rng_uniform(rng);
  const double half_len = scale * (0.2 + 0.15 * rng_uniform(rng));
  const double half_wid = 1.5 + 2.0 * rng_uniform(rng);
  const double inten = 0.5 + 0.3 * rng_uniform(rng);
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const std::size_t h = img.shape()[1];
  const std::size_t w = img.shape()[2];
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double oy = static_cast<double>(y) - cy;
      const double ox = static_cast<double>(x) - cx;
      const double par = (ox * ct + oy * st) / half_len;
      const double perp = (-ox * st + oy * ct) / half_wid;
      const double e = par * par * par * par + perp * perp * perp * perp;
      if (e > 16.0) continue;
      img[y * w + x] += inten * std::exp(-e);
    }
  }
}

std::size_t floor_count(std::size_t n_per_class) {
  if (n_per_class < 1)
    throw std::invalid_argument("dataset: n_per_class must be >= 1");
  return n_per_class;
}

}  // namespace

Tensor gen_background(RngState& rng, std::size_t h, std::size_t w) {
  // Three sinusoids; per sinusoid draw order: amplitude, orientation,
  // frequency, phase.
  double amp[3], ct[3], st[3], freq[3], phase[3];
  for (int k = 0; k < 3; ++k) {
    amp[k] = 0.02 + 0.03 * rng_uniform(rng);
    const double theta = std::numbers::pi * rng_uniform(rng);
    ct[k] = std::cos(theta);
    st[k] = std::sin(theta);
    freq[k] = kTwoPi * (0.02 + 0.10 * rng_uniform(rng));
    phase[k] = kTwoPi * rng_uniform(rng);
  }
  Tensor img({1, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0.25;
      for (int k = 0; k < 3; ++k)
        v += amp[k] * std::sin(freq[k] * (static_cast<double>(x) * ct[k] +
                                          static_cast<double>(y) * st[k]) +
                               phase[k]);
      img[y * w + x] = v;
    }
  }
  return img;
}

Tensor gen_mass_patch(RngState& rng, std::size_t size) {
  if (size < 32) throw std::invalid_argument("gen_mass_patch: size < 32");
  Tensor img = gen_background(rng, size, size);
  Tensor contrib({1, size, size});
  double cy, cx;
  draw_center(rng, static_cast<double>(size), static_cast<double>(size), 0.25,
              0.75, cy, cx);
  add_mass(rng, img, contrib, cy, cx, static_cast<double>(size));
  clip01(img);
  return img;
}

Tensor gen_calcification_patch(RngState& rng, std::size_t size) {
  if (size < 32)
    throw std::invalid_argument("gen_calcification_patch: size < 32");
  Tensor img = gen_background(rng, size, size);
  Tensor contrib({1, size, size});
  double cy, cx;
  draw_center(rng, static_cast<double>(size), static_cast<double>(size), 0.25,
              0.75, cy, cx);
  add_calcification(rng, img, contrib, cy, cx, static_cast<double>(size));
  clip01(img);
  return img;
}

Dataset gen_patch_dataset(RngState& rng, std::size_t n_per_class,
                          std::size_t size) {
  const std::size_t n = floor_count(n_per_class);
  Dataset data;
  data.class_names = {"calcification", "mass"};
  const std::uint64_t base_calc = rng_next_u64(rng);
  const std::uint64_t base_mass = rng_next_u64(rng);
  for (std::size_t i = 0; i < n; ++i) {
    RngState sub(base_calc ^ static_cast<std::uint64_t>(i));
    data.samples.push_back({gen_calcification_patch(sub, size), 0, {}});
  }
  for (std::size_t i = 0; i < n; ++i) {
    RngState sub(base_mass ^ static_cast<std::uint64_t>(i));
    data.samples.push_back({gen_mass_patch(sub, size), 1, {}});
  }
  return data;
}

Dataset gen_pretext_dataset(RngState& rng, std::size_t n_per_class,
                            std::size_t size) {
  const std::size_t n = floor_count(n_per_class);
  if (size < 32) throw std::invalid_argument("gen_pretext_dataset: size < 32");
  Dataset data;
  data.class_names = {"background", "bar", "blob", "speckle"};
  std::uint64_t base[4];
  for (int c = 0; c < 4; ++c) base[c] = rng_next_u64(rng);
  const double sz = static_cast<double>(size);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      RngState sub(base[c] ^ static_cast<std::uint64_t>(i));
      Tensor img = gen_background(sub, size, size);
      if (c != 0) {
        Tensor contrib({1, size, size});
        double cy, cx;
        draw_center(sub, sz, sz, 0.25, 0.75, cy, cx);
        if (c == 1) add_bar(sub, img, cy, cx, sz);
        if (c == 2) add_mass(sub, img, contrib, cy, cx, sz);
        if (c == 3) add_calcification(sub, img, contrib, cy, cx, sz);
      }
      clip01(img);
      data.samples.push_back({std::move(img), c, {}});
    }
  }
  return data;
}

FullImageCase gen_full_image(RngState& rng, std::size_t height,
                             std::size_t width, Abnormality kind) {
  if (height < 4 * kPatchScale || width < 4 * kPatchScale)
    throw std::invalid_argument(
        "gen_full_image: canvas must be at least 4x the patch scale");
  FullImageCase out;
  out.image = gen_background(rng, height, width);
  Tensor contrib({1, height, width});
  // Centroid margin: half the patch scale from every border.
  const double margin = static_cast<double>(kPatchScale) / 2.0;
  const double cy =
      margin + rng_uniform(rng) * (static_cast<double>(height) - 1.0 -
                                   2.0 * margin);
  const double cx =
      margin + rng_uniform(rng) * (static_cast<double>(width) - 1.0 -
                                   2.0 * margin);
  if (kind == Abnormality::Mass) {
    add_mass(rng, out.image, contrib, cy, cx,
             static_cast<double>(kPatchScale));
    out.label = 1;
  } else {
    add_calcification(rng, out.image, contrib, cy, cx,
                      static_cast<double>(kPatchScale));
    out.label = 0;
  }
  clip01(out.image);

  out.mask = Tensor({1, height, width});
  std::size_t rmin = height, rmax = 0, cmin = width, cmax = 0;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      if (contrib[y * width + x] > kMaskThreshold) {
        out.mask[y * width + x] = 1.0;
        rmin = std::min(rmin, y);
        rmax = std::max(rmax, y);
        cmin = std::min(cmin, x);
        cmax = std::max(cmax, x);
      }
    }
  }
  if (rmin > rmax)
    throw NumericError("gen_full_image: abnormality left no mask pixels");
  out.bbox_row = rmin;
  out.bbox_col = cmin;
  out.bbox_h = rmax - rmin + 1;
  out.bbox_w = cmax - cmin + 1;
  return out;
}

}  // namespace pcam
