#pragma once

#include <cstddef>
#include <cstdint>

// Hot loops behind the layer objects. All buffers are caller-owned,
// row-major, CHW. Every output element is accumulated in one fixed
// serial order, so results are bit-identical for any thread count.

namespace pcam::kernels {

// 3x3 cross-correlation, stride 1, zero "same" padding.
// kernel: [c_out][c_in][3][3], bias: [c_out].
// out[oc][y][x] starts at bias[oc], then adds taps ascending in
// (ic, ky, kx).
void conv3x3_forward(const double* in, std::size_t c_in, std::size_t h,
                     std::size_t w, const double* kernel, const double* bias,
                     std::size_t c_out, double* out);

// grad_in[ic][y][x] accumulates ascending in (oc, ky, kx).
void conv3x3_backward_input(const double* grad_out, std::size_t c_out,
                            std::size_t h, std::size_t w, const double* kernel,
                            std::size_t c_in, double* grad_in);

// grad_kernel[oc][ic][ky][kx] and grad_bias[oc] accumulate over the
// image ascending in (y, x). Both grads are overwritten, not added to.
void conv3x3_backward_params(const double* in, std::size_t c_in, std::size_t h,
                             std::size_t w, const double* grad_out,
                             std::size_t c_out, double* grad_kernel,
                             double* grad_bias);

void relu_forward(const double* in, std::size_t n, double* out);

// Gate on the forward *input* sign: grad passes where in > 0.
void relu_backward(const double* in, const double* grad_out, std::size_t n,
                   double* grad_in);

// 2x2 window, stride 2, floor semantics (odd trailing row/col dropped).
// Ties go to the first element in row-major window order. argmax holds
// the flat index into `in` of each selected element.
void maxpool2x2_forward(const double* in, std::size_t c, std::size_t h,
                        std::size_t w, double* out, std::uint32_t* argmax);

// Routes each grad_out element to its argmax position; grad_in is
// zeroed first.
void maxpool2x2_backward(const double* grad_out, std::size_t c, std::size_t h,
                         std::size_t w, const std::uint32_t* argmax,
                         double* grad_in);

// Per-channel spatial mean. out: [c].
void gap_forward(const double* in, std::size_t c, std::size_t h, std::size_t w,
                 double* out);

void gap_backward(const double* grad_out, std::size_t c, std::size_t h,
                  std::size_t w, double* grad_in);

// out[r] = bias[r] + sum_i weight[r][i] * in[i], i ascending.
void dense_forward(const double* in, const double* weight, const double* bias,
                   std::size_t rows, std::size_t cols, double* out);

// grad_in[i] accumulates ascending in r. grad_weight/grad_bias are
// overwritten.
void dense_backward(const double* in, const double* weight,
                    const double* grad_out, std::size_t rows, std::size_t cols,
                    double* grad_in, double* grad_weight, double* grad_bias);

// heatmap[y][x] = sum_i weight_row[i] * features[i][y][x], i ascending.
void cam_accumulate(const double* features, std::size_t c, std::size_t h,
                    std::size_t w, const double* weight_row, double* heatmap);

}  // namespace pcam::kernels
