#pragma once

#include <string>

#include "pcam/dataset.hpp"
#include "pcam/tensor.hpp"

namespace pcam {

// P2 (ASCII) or P5 (binary) PGM, maxval <= 255; pixels scaled to [0,1]
// by v/maxval. Throws DataError on malformed or truncated input.
Tensor read_pgm(const std::string& path);

// P5, maxval 255, header exactly "P5\n<w> <h>\n255\n", v -> round(v*255).
// Values must already be in [0,1].
void write_pgm(const Tensor& image, const std::string& path);

// P6 PPM: red = (1-alpha)*base + alpha*heat, green = blue =
// (1-alpha)*base. heat must be a normalized map the same size as base.
void write_overlay_ppm(const Tensor& base, const Tensor& heat,
                       const std::string& path, double alpha = 0.5);

// root/<class>/<name>.pgm with optional <name>.mask.pgm siblings.
// Classes and files are taken in sorted order; masks are binarized at
// 0.5 and size-checked against their image.
Dataset load_dataset_dir(const std::string& root);

}  // namespace pcam
