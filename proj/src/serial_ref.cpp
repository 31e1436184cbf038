#include "pcam/serial_ref.hpp"

#include <cstring>

namespace pcam::serialref {

void conv3x3_forward(const double* in, std::size_t c_in, std::size_t h,
                     std::size_t w, const double* kernel, const double* bias,
                     std::size_t c_out, double* out) {
  const std::ptrdiff_t hh = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t ww = static_cast<std::ptrdiff_t>(w);
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    for (std::ptrdiff_t y = 0; y < hh; ++y) {
      for (std::ptrdiff_t x = 0; x < ww; ++x) {
        double acc = bias[oc];
        for (std::size_t ic = 0; ic < c_in; ++ic) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const std::ptrdiff_t sy = y + ky - 1;
              const std::ptrdiff_t sx = x + kx - 1;
              if (sy < 0 || sy >= hh || sx < 0 || sx >= ww) continue;
              acc += kernel[((oc * c_in + ic) * 3 + ky) * 3 + kx] *
                     in[(ic * h + static_cast<std::size_t>(sy)) * w +
                        static_cast<std::size_t>(sx)];
            }
          }
        }
        out[(oc * h + static_cast<std::size_t>(y)) * w +
            static_cast<std::size_t>(x)] = acc;
      }
    }
  }
}

void conv3x3_backward_input(const double* grad_out, std::size_t c_out,
                            std::size_t h, std::size_t w, const double* kernel,
                            std::size_t c_in, double* grad_in) {
  const std::ptrdiff_t hh = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t ww = static_cast<std::ptrdiff_t>(w);
  for (std::size_t ic = 0; ic < c_in; ++ic) {
    for (std::ptrdiff_t y = 0; y < hh; ++y) {
      for (std::ptrdiff_t x = 0; x < ww; ++x) {
        double acc = 0.0;
        for (std::size_t oc = 0; oc < c_out; ++oc) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const std::ptrdiff_t oy = y - (ky - 1);
              const std::ptrdiff_t ox = x - (kx - 1);
              if (oy < 0 || oy >= hh || ox < 0 || ox >= ww) continue;
              acc += kernel[((oc * c_in + ic) * 3 + ky) * 3 + kx] *
                     grad_out[(oc * h + static_cast<std::size_t>(oy)) * w +
                              static_cast<std::size_t>(ox)];
            }
          }
        }
        grad_in[(ic * h + static_cast<std::size_t>(y)) * w +
                static_cast<std::size_t>(x)] = acc;
      }
    }
  }
}

void conv3x3_backward_params(const double* in, std::size_t c_in, std::size_t h,
                             std::size_t w, const double* grad_out,
                             std::size_t c_out, double* grad_kernel,
                             double* grad_bias) {
  const std::ptrdiff_t hh = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t ww = static_cast<std::ptrdiff_t>(w);
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    double bacc = 0.0;
    for (std::ptrdiff_t y = 0; y < hh; ++y)
      for (std::ptrdiff_t x = 0; x < ww; ++x)
        bacc += grad_out[(oc * h + static_cast<std::size_t>(y)) * w +
                         static_cast<std::size_t>(x)];
    grad_bias[oc] = bacc;
    for (std::size_t ic = 0; ic < c_in; ++ic) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (std::ptrdiff_t y = 0; y < hh; ++y) {
            for (std::ptrdiff_t x = 0; x < ww; ++x) {
              const std::ptrdiff_t sy = y + ky - 1;
              const std::ptrdiff_t sx = x + kx - 1;
              if (sy < 0 || sy >= hh || sx < 0 || sx >= ww) continue;
              acc += grad_out[(oc * h + static_cast<std::size_t>(y)) * w +
                              static_cast<std::size_t>(x)] *
                     in[(ic * h + static_cast<std::size_t>(sy)) * w +
                        static_cast<std::size_t>(sx)];
            }
          }
          grad_kernel[((oc * c_in + ic) * 3 + ky) * 3 + kx] = acc;
        }
      }
    }
  }
}

void relu_forward(const double* in, std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* grad_out, std::size_t n,
                   double* grad_in) {
  for (std::size_t i = 0; i < n; ++i)
    grad_in[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
}

void maxpool2x2_forward(const double* in, std::size_t c, std::size_t h,
                        std::size_t w, double* out, std::uint32_t* argmax) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = 0;
        double bv = 0.0;
        bool first = true;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx =
                (ch * h + 2 * oy + dy) * w + 2 * ox + dx;
            if (first || in[idx] > bv) {
              bv = in[idx];
              best = idx;
              first = false;
            }
          }
        }
        out[(ch * oh + oy) * ow + ox] = bv;
        argmax[(ch * oh + oy) * ow + ox] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

void maxpool2x2_backward(const double* grad_out, std::size_t c, std::size_t h,
                         std::size_t w, const std::uint32_t* argmax,
                         double* grad_in) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  std::memset(grad_in, 0, c * h * w * sizeof(double));
  for (std::size_t i = 0; i < c * oh * ow; ++i)
    grad_in[argmax[i]] += grad_out[i];
}

void gap_forward(const double* in, std::size_t c, std::size_t h, std::size_t w,
                 double* out) {
  for (std::size_t ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) acc += in[ch * h * w + i];
    out[ch] = acc * (1.0 / static_cast<double>(h * w));
  }
}

void gap_backward(const double* grad_out, std::size_t c, std::size_t h,
                  std::size_t w, double* grad_in) {
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h * w; ++i)
      grad_in[ch * h * w + i] =
          grad_out[ch] * (1.0 / static_cast<double>(h * w));
}

void dense_forward(const double* in, const double* weight, const double* bias,
                   std::size_t rows, std::size_t cols, double* out) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = bias[r];
    for (std::size_t i = 0; i < cols; ++i) acc += weight[r * cols + i] * in[i];
    out[r] = acc;
  }
}

void dense_backward(const double* in, const double* weight,
                    const double* grad_out, std::size_t rows, std::size_t cols,
                    double* grad_in, double* grad_weight, double* grad_bias) {
  for (std::size_t i = 0; i < cols; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
      acc += weight[r * cols + i] * grad_out[r];
    grad_in[i] = acc;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i = 0; i < cols; ++i)
      grad_weight[r * cols + i] = grad_out[r] * in[i];
    grad_bias[r] = grad_out[r];
  }
}

void cam_accumulate(const double* features, std::size_t c, std::size_t h,
                    std::size_t w, const double* weight_row, double* heatmap) {
  for (std::size_t p = 0; p < h * w; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c; ++i)
      acc += weight_row[i] * features[i * h * w + p];
    heatmap[p] = acc;
  }
}

}  // namespace pcam::serialref
