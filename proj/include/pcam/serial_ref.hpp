#pragma once

#include <cstddef>
#include <cstdint>

// Plain nested-loop versions of the kernels, no OpenMP, written as
// directly from the definitions as possible. Used by tests as oracles
// and by the benchmark as the baseline. Each accumulates per output
// element in the same order as the parallel kernels, so the two must
// agree bit for bit.

namespace pcam::serialref {

void conv3x3_forward(const double* in, std::size_t c_in, std::size_t h,
                     std::size_t w, const double* kernel, const double* bias,
                     std::size_t c_out, double* out);

void conv3x3_backward_input(const double* grad_out, std::size_t c_out,
                            std::size_t h, std::size_t w, const double* kernel,
                            std::size_t c_in, double* grad_in);

void conv3x3_backward_params(const double* in, std::size_t c_in, std::size_t h,
                             std::size_t w, const double* grad_out,
                             std::size_t c_out, double* grad_kernel,
                             double* grad_bias);

void relu_forward(const double* in, std::size_t n, double* out);

void relu_backward(const double* in, const double* grad_out, std::size_t n,
                   double* grad_in);

void maxpool2x2_forward(const double* in, std::size_t c, std::size_t h,
                        std::size_t w, double* out, std::uint32_t* argmax);

void maxpool2x2_backward(const double* grad_out, std::size_t c, std::size_t h,
                         std::size_t w, const std::uint32_t* argmax,
                         double* grad_in);

void gap_forward(const double* in, std::size_t c, std::size_t h, std::size_t w,
                 double* out);

void gap_backward(const double* grad_out, std::size_t c, std::size_t h,
                  std::size_t w, double* grad_in);

void dense_forward(const double* in, const double* weight, const double* bias,
                   std::size_t rows, std::size_t cols, double* out);

void dense_backward(const double* in, const double* weight,
                    const double* grad_out, std::size_t rows, std::size_t cols,
                    double* grad_in, double* grad_weight, double* grad_bias);

void cam_accumulate(const double* features, std::size_t c, std::size_t h,
                    std::size_t w, const double* weight_row, double* heatmap);

}  // namespace pcam::serialref
