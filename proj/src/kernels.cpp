#include "pcam/kernels.hpp"

#include <cstring>

namespace pcam::kernels {

void conv3x3_forward(const double* in, std::size_t c_in, std::size_t h,
                     std::size_t w, const double* kernel, const double* bias,
                     std::size_t c_out, double* out) {
  const std::ptrdiff_t hh = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t ww = static_cast<std::ptrdiff_t>(w);
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    for (std::ptrdiff_t y = 0; y < hh; ++y) {
      double* orow = out + (oc * h + static_cast<std::size_t>(y)) * w;
      for (std::ptrdiff_t x = 0; x < ww; ++x) {
        double acc = bias[oc];
        const double* kbase = kernel + oc * c_in * 9;
        for (std::size_t ic = 0; ic < c_in; ++ic) {
          const double* iplane = in + ic * h * w;
          const double* k = kbase + ic * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const std::ptrdiff_t sy = y + ky - 1;
            if (sy < 0 || sy >= hh) continue;
            const double* irow = iplane + static_cast<std::size_t>(sy) * w;
            for (int kx = 0; kx < 3; ++kx) {
              const std::ptrdiff_t sx = x + kx - 1;
              if (sx < 0 || sx >= ww) continue;
              acc += k[ky * 3 + kx] * irow[sx];
            }
          }
        }
        orow[x] = acc;
      }
    }
  }
}

void conv3x3_backward_input(const double* grad_out, std::size_t c_out,
                            std::size_t h, std::size_t w, const double* kernel,
                            std::size_t c_in, double* grad_in) {
  const std::ptrdiff_t hh = static_cast<std::ptrdiff_t>(h);
  const std::ptrdiff_t ww = static_cast<std::ptrdiff_t>(w);
  // grad_in[ic][y][x] = sum over (oc,ky,kx) of
  //   kernel[oc][ic][ky][kx] * grad_out[oc][y - (ky-1)][x - (kx-1)]
  // (the transpose of the forward stencil).
#pragma omp parallel for collapse(2) schedule(static)
  for (std::size_t ic = 0; ic < c_in; ++ic) {
    for (std::ptrdiff_t y = 0; y < hh; ++y) {
      double* grow = grad_in + (ic * h + static_cast<std::size_t>(y)) * w;
      for (std::ptrdiff_t x = 0; x < ww; ++x) {
        double acc = 0.0;
        for (std::size_t oc = 0; oc < c_out; ++oc) {
          const double* gplane = grad_out + oc * h * w;
          const double* k = kernel + (oc * c_in + ic) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            const std::ptrdiff_t oy = y - (ky - 1);
            if (oy < 0 || oy >= hh) continue;
            const double* gorow = gplane + static_cast<std::size_t>(oy) * w;
            for (int kx = 0; kx < 3; ++kx) {
              const std::ptrdiff_t ox = x - (kx - 1);
              if (ox < 0 || ox >= ww) continue;
              acc += k[ky * 3 + kx] * gorow[ox];
            }
          }
        }
        grow[x] = acc;
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
#pragma omp parallel for schedule(static)
  for (std::size_t oc = 0; oc < c_out; ++oc) {
    const double* gplane = grad_out + oc * h * w;
    double bacc = 0.0;
    for (std::ptrdiff_t y = 0; y < hh; ++y)
      for (std::ptrdiff_t x = 0; x < ww; ++x)
        bacc += gplane[y * ww + x];
    grad_bias[oc] = bacc;
    for (std::size_t ic = 0; ic < c_in; ++ic) {
      const double* iplane = in + ic * h * w;
      double* gk = grad_kernel + (oc * c_in + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          double acc = 0.0;
          for (std::ptrdiff_t y = 0; y < hh; ++y) {
            const std::ptrdiff_t sy = y + ky - 1;
            if (sy < 0 || sy >= hh) continue;
            const double* irow = iplane + sy * ww;
            const double* gorow = gplane + y * ww;
            for (std::ptrdiff_t x = 0; x < ww; ++x) {
              const std::ptrdiff_t sx = x + kx - 1;
              if (sx < 0 || sx >= ww) continue;
              acc += gorow[x] * irow[sx];
            }
          }
          gk[ky * 3 + kx] = acc;
        }
      }
    }
  }
}

void relu_forward(const double* in, std::size_t n, double* out) {
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nn; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
}

void relu_backward(const double* in, const double* grad_out, std::size_t n,
                   double* grad_in) {
  const std::ptrdiff_t nn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < nn; ++i)
    grad_in[i] = in[i] > 0.0 ? grad_out[i] : 0.0;
}

void maxpool2x2_forward(const double* in, std::size_t c, std::size_t h,
                        std::size_t w, double* out, std::uint32_t* argmax) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < cc; ++ch) {
    const double* iplane = in + static_cast<std::size_t>(ch) * h * w;
    double* oplane = out + static_cast<std::size_t>(ch) * oh * ow;
    std::uint32_t* aplane = argmax + static_cast<std::size_t>(ch) * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const std::size_t base = (2 * oy) * w + 2 * ox;
        // Row-major window order; strict > keeps the first on ties.
        std::size_t best = base;
        double bv = iplane[base];
        const std::size_t cand[3] = {base + 1, base + w, base + w + 1};
        for (std::size_t k = 0; k < 3; ++k) {
          if (iplane[cand[k]] > bv) {
            bv = iplane[cand[k]];
            best = cand[k];
          }
        }
        oplane[oy * ow + ox] = bv;
        aplane[oy * ow + ox] = static_cast<std::uint32_t>(
            static_cast<std::size_t>(ch) * h * w + best);
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
  const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c);
  // Argmax indices never collide (each selects within its own window),
  // and windows of different channels never alias, so channel-parallel
  // scatter is race-free.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < cc; ++ch) {
    const std::size_t start = static_cast<std::size_t>(ch) * oh * ow;
    for (std::size_t i = start; i < start + oh * ow; ++i)
      grad_in[argmax[i]] += grad_out[i];
  }
}

void gap_forward(const double* in, std::size_t c, std::size_t h, std::size_t w,
                 double* out) {
  const double inv = 1.0 / static_cast<double>(h * w);
  const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < cc; ++ch) {
    const double* plane = in + static_cast<std::size_t>(ch) * h * w;
    double acc = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) acc += plane[i];
    out[ch] = acc * inv;
  }
}

void gap_backward(const double* grad_out, std::size_t c, std::size_t h,
                  std::size_t w, double* grad_in) {
  const double inv = 1.0 / static_cast<double>(h * w);
  const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(c);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ch = 0; ch < cc; ++ch) {
    const double g = grad_out[ch] * inv;
    double* plane = grad_in + static_cast<std::size_t>(ch) * h * w;
    for (std::size_t i = 0; i < h * w; ++i) plane[i] = g;
  }
}

void dense_forward(const double* in, const double* weight, const double* bias,
                   std::size_t rows, std::size_t cols, double* out) {
  const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rr; ++r) {
    const double* wrow = weight + static_cast<std::size_t>(r) * cols;
    double acc = bias[r];
    for (std::size_t i = 0; i < cols; ++i) acc += wrow[i] * in[i];
    out[r] = acc;
  }
}

void dense_backward(const double* in, const double* weight,
                    const double* grad_out, std::size_t rows, std::size_t cols,
                    double* grad_in, double* grad_weight, double* grad_bias) {
  const std::ptrdiff_t cc = static_cast<std::ptrdiff_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < cc; ++i) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
      acc += weight[r * cols + i] * grad_out[r];
    grad_in[i] = acc;
  }
  const std::ptrdiff_t rr = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < rr; ++r) {
    double* gw = grad_weight + static_cast<std::size_t>(r) * cols;
    for (std::size_t i = 0; i < cols; ++i) gw[i] = grad_out[r] * in[i];
    grad_bias[r] = grad_out[r];
  }
}

void cam_accumulate(const double* features, std::size_t c, std::size_t h,
                    std::size_t w, const double* weight_row, double* heatmap) {
  const std::ptrdiff_t hw = static_cast<std::ptrdiff_t>(h * w);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < hw; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c; ++i)
      acc += weight_row[i] * features[i * h * w + p];
    heatmap[p] = acc;
  }
}

}  // namespace pcam::kernels
