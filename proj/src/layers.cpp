#include "pcam/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pcam/kernels.hpp"

namespace pcam {

namespace {

void he_fill(Tensor& weight, std::size_t fan_in, RngState& rng) {
  const double sigma = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < weight.size(); ++i)
    weight[i] = sigma * rng_normal(rng);
}

}  // namespace

LayerSpec make_conv3x3(std::size_t out_ch, std::size_t in_ch, RngState& rng) {
  LayerSpec spec;
  spec.kind = LayerKind::Conv3x3;
  spec.weight = Tensor({out_ch, in_ch, 3, 3});
  spec.bias = Tensor({out_ch});
  he_fill(spec.weight, in_ch * 9, rng);
  return spec;
}

LayerSpec make_dense(std::size_t rows, std::size_t cols, RngState& rng) {
  LayerSpec spec;
  spec.kind = LayerKind::Dense;
  spec.weight = Tensor({rows, cols});
  spec.bias = Tensor({rows});
  he_fill(spec.weight, cols, rng);
  return spec;
}

LayerSpec make_relu() {
  LayerSpec spec;
  spec.kind = LayerKind::ReLU;
  return spec;
}

LayerSpec make_maxpool() {
  LayerSpec spec;
  spec.kind = LayerKind::MaxPool2x2;
  return spec;
}

LayerSpec make_residual(std::vector<LayerSpec> nested) {
  LayerSpec spec;
  spec.kind = LayerKind::Residual;
  spec.nested = std::move(nested);
  return spec;
}

LayerSpec make_gap() {
  LayerSpec spec;
  spec.kind = LayerKind::GlobalAvgPool;
  return spec;
}

LayerSpec make_softmax() {
  LayerSpec spec;
  spec.kind = LayerKind::SoftmaxOutput;
  return spec;
}

Tensor conv3x3_forward(const Tensor& input, const Tensor& kernel,
                       const Tensor& bias) {
  if (input.shape().size() != 3)
    throw std::invalid_argument("conv3x3: input must be [c,h,w]");
  if (kernel.shape().size() != 4 || kernel.shape()[2] != 3 ||
      kernel.shape()[3] != 3)
    throw std::invalid_argument("conv3x3: kernel must be [out,in,3,3]");
  const std::size_t c_in = input.shape()[0];
  const std::size_t h = input.shape()[1];
  const std::size_t w = input.shape()[2];
  const std::size_t c_out = kernel.shape()[0];
  if (kernel.shape()[1] != c_in)
    throw std::invalid_argument("conv3x3: kernel input channels mismatch");
  if (bias.shape() != std::vector<std::size_t>{c_out})
    throw std::invalid_argument("conv3x3: bias shape mismatch");
  Tensor out({c_out, h, w});
  kernels::conv3x3_forward(input.data(), c_in, h, w, kernel.data(),
                           bias.data(), c_out, out.data());
  return out;
}

Tensor maxpool2x2_forward(const Tensor& input,
                          std::vector<std::uint32_t>& argmax) {
  if (input.shape().size() != 3)
    throw std::invalid_argument("maxpool2x2: input must be [c,h,w]");
  const std::size_t c = input.shape()[0];
  const std::size_t h = input.shape()[1];
  const std::size_t w = input.shape()[2];
  if (h < 2 || w < 2)
    throw std::invalid_argument("maxpool2x2: spatial dims must be >= 2");
  Tensor out({c, h / 2, w / 2});
  argmax.assign(out.size(), 0);
  kernels::maxpool2x2_forward(input.data(), c, h, w, out.data(),
                              argmax.data());
  return out;
}

Tensor gap_forward(const Tensor& input) {
  if (input.shape().size() != 3)
    throw std::invalid_argument("gap: input must be [c,h,w]");
  Tensor out({input.shape()[0]});
  kernels::gap_forward(input.data(), input.shape()[0], input.shape()[1],
                       input.shape()[2], out.data());
  return out;
}

Tensor dense_forward(const Tensor& input, const Tensor& weight,
                     const Tensor& bias) {
  if (input.shape().size() != 1)
    throw std::invalid_argument("dense: input must be rank 1");
  if (weight.shape().size() != 2 || weight.shape()[1] != input.shape()[0])
    throw std::invalid_argument("dense: weight shape mismatch");
  const std::size_t rows = weight.shape()[0];
  if (bias.shape() != std::vector<std::size_t>{rows})
    throw std::invalid_argument("dense: bias shape mismatch");
  Tensor out({rows});
  kernels::dense_forward(input.data(), weight.data(), bias.data(), rows,
                         input.shape()[0], out.data());
  return out;
}

Tensor residual_forward(const Tensor& input,
                        const std::vector<LayerSpec>& nested,
                        std::vector<LayerTrace>& nested_traces) {
  nested_traces.assign(nested.size(), LayerTrace{});
  Tensor cur = input;
  for (std::size_t i = 0; i < nested.size(); ++i)
    cur = layer_forward(nested[i], cur, nested_traces[i]);
  if (!cur.same_shape(input))
    throw std::invalid_argument(
        "residual: nested layers changed the input shape");
  return tensor_map2(input, cur, [](double a, double b) { return a + b; });
}

std::pair<Tensor, double> softmax_xent(const Tensor& logits,
                                       std::size_t target) {
  const std::size_t k = logits.size();
  if (target >= k) throw std::invalid_argument("softmax_xent: bad target");
  double m = logits[0];
  for (std::size_t i = 1; i < k; ++i) m = std::max(m, logits[i]);
  Tensor probs(logits.shape());
  double denom = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    probs[i] = std::exp(logits[i] - m);
    denom += probs[i];
  }
  for (std::size_t i = 0; i < k; ++i) probs[i] /= denom;
  const double loss = std::log(denom) - (logits[target] - m);
  return {std::move(probs), loss};
}

Tensor layer_forward(const LayerSpec& spec, const Tensor& input,
                     LayerTrace& trace) {
  trace.input = input;
  trace.argmax.clear();
  trace.nested.clear();
  switch (spec.kind) {
    case LayerKind::Conv3x3:
      return conv3x3_forward(input, spec.weight, spec.bias);
    case LayerKind::ReLU: {
      Tensor out(input.shape());
      kernels::relu_forward(input.data(), input.size(), out.data());
      return out;
    }
    case LayerKind::MaxPool2x2:
      return maxpool2x2_forward(input, trace.argmax);
    case LayerKind::Residual:
      return residual_forward(input, spec.nested, trace.nested);
    case LayerKind::GlobalAvgPool:
      return gap_forward(input);
    case LayerKind::Dense:
      return dense_forward(input, spec.weight, spec.bias);
    case LayerKind::SoftmaxOutput: {
      if (input.shape().size() != 1)
        throw std::invalid_argument("softmax: input must be rank 1");
      // Probabilities only; the loss needs a target and lives in
      // softmax_xent.
      return softmax_xent(input, 0).first;
    }
  }
  throw std::invalid_argument("layer_forward: unknown layer kind");
}

Tensor layer_backward(const LayerSpec& spec, const LayerTrace& trace,
                      const Tensor& grad_out, LayerGrads& grads) {
  const Tensor& input = trace.input;
  switch (spec.kind) {
    case LayerKind::Conv3x3: {
      const std::size_t c_in = input.shape()[0];
      const std::size_t h = input.shape()[1];
      const std::size_t w = input.shape()[2];
      const std::size_t c_out = spec.weight.shape()[0];
      if (grad_out.shape() != std::vector<std::size_t>{c_out, h, w})
        throw std::invalid_argument("conv3x3 backward: grad shape mismatch");
      grads.weight = Tensor(spec.weight.shape());
      grads.bias = Tensor(spec.bias.shape());
      kernels::conv3x3_backward_params(input.data(), c_in, h, w,
                                       grad_out.data(), c_out,
                                       grads.weight.data(), grads.bias.data());
      Tensor grad_in(input.shape());
      kernels::conv3x3_backward_input(grad_out.data(), c_out, h, w,
                                      spec.weight.data(), c_in,
                                      grad_in.data());
      return grad_in;
    }
    case LayerKind::ReLU: {
      if (!grad_out.same_shape(input))
        throw std::invalid_argument("relu backward: grad shape mismatch");
      Tensor grad_in(input.shape());
      kernels::relu_backward(input.data(), grad_out.data(), input.size(),
                             grad_in.data());
      return grad_in;
    }
    case LayerKind::MaxPool2x2: {
      const std::size_t c = input.shape()[0];
      const std::size_t h = input.shape()[1];
      const std::size_t w = input.shape()[2];
      if (trace.argmax.size() != grad_out.size())
        throw std::invalid_argument("maxpool backward: trace mismatch");
      Tensor grad_in(input.shape());
      kernels::maxpool2x2_backward(grad_out.data(), c, h, w,
                                   trace.argmax.data(), grad_in.data());
      return grad_in;
    }
    case LayerKind::Residual: {
      if (trace.nested.size() != spec.nested.size())
        throw std::invalid_argument("residual backward: trace mismatch");
      grads.nested.assign(spec.nested.size(), LayerGrads{});
      Tensor g = grad_out;
      for (std::size_t i = spec.nested.size(); i-- > 0;)
        g = layer_backward(spec.nested[i], trace.nested[i], g,
                           grads.nested[i]);
      // Identity skip adds grad_out straight through.
      return tensor_map2(g, grad_out,
                         [](double a, double b) { return a + b; });
    }
    case LayerKind::GlobalAvgPool: {
      const std::size_t c = input.shape()[0];
      if (grad_out.shape() != std::vector<std::size_t>{c})
        throw std::invalid_argument("gap backward: grad shape mismatch");
      Tensor grad_in(input.shape());
      kernels::gap_backward(grad_out.data(), c, input.shape()[1],
                            input.shape()[2], grad_in.data());
      return grad_in;
    }
    case LayerKind::Dense: {
      const std::size_t rows = spec.weight.shape()[0];
      const std::size_t cols = spec.weight.shape()[1];
      if (grad_out.shape() != std::vector<std::size_t>{rows} ||
          input.shape() != std::vector<std::size_t>{cols})
        throw std::invalid_argument("dense backward: shape mismatch");
      grads.weight = Tensor(spec.weight.shape());
      grads.bias = Tensor(spec.bias.shape());
      Tensor grad_in(input.shape());
      kernels::dense_backward(input.data(), spec.weight.data(),
                              grad_out.data(), rows, cols, grad_in.data(),
                              grads.weight.data(), grads.bias.data());
      return grad_in;
    }
    case LayerKind::SoftmaxOutput: {
      // Jacobian-vector product of softmax alone: the fused
      // cross-entropy shortcut (p - onehot) lives in network_backward.
      auto [probs, loss] = softmax_xent(input, 0);
      (void)loss;
      if (!grad_out.same_shape(probs))
        throw std::invalid_argument("softmax backward: grad shape mismatch");
      double dot = 0.0;
      for (std::size_t i = 0; i < probs.size(); ++i)
        dot += grad_out[i] * probs[i];
      Tensor grad_in(input.shape());
      for (std::size_t i = 0; i < probs.size(); ++i)
        grad_in[i] = probs[i] * (grad_out[i] - dot);
      return grad_in;
    }
  }
  throw std::invalid_argument("layer_backward: unknown layer kind");
}

std::size_t layer_param_count(const LayerSpec& spec) {
  std::size_t n = spec.weight.size() + spec.bias.size();
  for (const LayerSpec& inner : spec.nested) n += layer_param_count(inner);
  return n;
}

}  // namespace pcam
