#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pcam/rng.hpp"
#include "pcam/tensor.hpp"

namespace pcam {

// Tag values double as the on-disk layer kind bytes; do not renumber.
enum class LayerKind : std::uint8_t {
  Conv3x3 = 1,
  ReLU = 2,
  MaxPool2x2 = 3,
  Residual = 4,
  GlobalAvgPool = 5,
  Dense = 6,
  SoftmaxOutput = 7,
};

struct LayerSpec {
  LayerKind kind = LayerKind::ReLU;
  Tensor weight;  // Conv3x3: [out_ch,in_ch,3,3]; Dense: [rows,cols]
  Tensor bias;    // Conv3x3: [out_ch]; Dense: [rows]
  std::vector<LayerSpec> nested;  // Residual body, applied in order
  double lr_factor = 1.0;
  bool frozen = false;
};

// He-initialized parameter layers: weights ~ normal(0, sqrt(2/fan_in))
// drawn in row-major order, biases zero.
LayerSpec make_conv3x3(std::size_t out_ch, std::size_t in_ch, RngState& rng);
LayerSpec make_dense(std::size_t rows, std::size_t cols, RngState& rng);
LayerSpec make_relu();
LayerSpec make_maxpool();
LayerSpec make_residual(std::vector<LayerSpec> nested);
LayerSpec make_gap();
LayerSpec make_softmax();

// What the backward pass needs from the matching forward call.
struct LayerTrace {
  Tensor input;
  std::vector<std::uint32_t> argmax;  // MaxPool2x2 only
  std::vector<LayerTrace> nested;     // Residual only
};

// Parameter gradients, same shapes as the LayerSpec tensors (empty for
// parameter-free layers). Also reused as the SGDM velocity store.
struct LayerGrads {
  Tensor weight;
  Tensor bias;
  std::vector<LayerGrads> nested;
};

// Tensor-level ops the layer dispatch is built from.
Tensor conv3x3_forward(const Tensor& input, const Tensor& kernel,
                       const Tensor& bias);
Tensor maxpool2x2_forward(const Tensor& input,
                          std::vector<std::uint32_t>& argmax);
Tensor gap_forward(const Tensor& input);
Tensor dense_forward(const Tensor& input, const Tensor& weight,
                     const Tensor& bias);
Tensor residual_forward(const Tensor& input,
                        const std::vector<LayerSpec>& nested,
                        std::vector<LayerTrace>& nested_traces);

// Stable softmax (max shift) plus cross-entropy against target.
// probabilities sum to 1 within 1e-12; loss = -ln p[target].
std::pair<Tensor, double> softmax_xent(const Tensor& logits,
                                       std::size_t target);

Tensor layer_forward(const LayerSpec& spec, const Tensor& input,
                     LayerTrace& trace);

// Returns grad wrt the layer input; parameter grads (if any) are
// written into `grads` (overwritten, not accumulated).
Tensor layer_backward(const LayerSpec& spec, const LayerTrace& trace,
                      const Tensor& grad_out, LayerGrads& grads);

std::size_t layer_param_count(const LayerSpec& spec);

}  // namespace pcam
