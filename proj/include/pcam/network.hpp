#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcam/layers.hpp"
#include "pcam/rng.hpp"
#include "pcam/tensor.hpp"

namespace pcam {

struct Network {
  std::vector<LayerSpec> layers;
  std::vector<std::string> class_names;
  std::size_t in_channels = 1;
  // Train-time spatial size. Forward accepts larger inputs; the trunk
  // is size-agnostic, only Dense is dimension-bound (to the channel
  // count, which spatial size does not change).
  std::size_t in_height = 64;
  std::size_t in_width = 64;
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Tensor pre_gap;  // feature maps entering GAP, retained for CAM
  Tensor logits;
  Tensor probs;
  std::size_t predicted = 0;  // argmax of probs, lowest index on ties
};

using NetworkGrads = std::vector<LayerGrads>;

// Presets: "minivgg" and "miniresnet", both ending GAP, Dense, Softmax.
Network build_preset(const std::string& name, std::size_t in_channels,
                     std::size_t num_classes, RngState& rng,
                     std::size_t train_h = 64, std::size_t train_w = 64);

// True when the last three layers are exactly GAP, Dense, Softmax and
// no other layer has one of those kinds.
bool is_cam_ready(const Network& net);

// Drops the final Dense + Softmax (GAP stays), appends a freshly
// He-initialized Dense for the new classes plus a Softmax. The new
// Dense gets lr_factor = head_lr_factor; trunk hyperparameters are
// untouched.
Network replace_head(const Network& net,
                     std::vector<std::string> new_class_names, RngState& rng,
                     double head_lr_factor = 20.0);

// Throws NumericError if any activation goes non-finite. Increments
// the forward call counter exactly once.
ForwardTrace network_forward(const Network& net, const Tensor& image);

// Cross-entropy backward from `label`; fills `grads` (overwritten) and
// returns the loss for this sample.
double network_backward(const Network& net, const ForwardTrace& trace,
                        std::size_t label, NetworkGrads& grads);

NetworkGrads alloc_grads(const Network& net);
// Fixed-order elementwise addition; the batch reduction runs through
// this serially in sample-index order.
void accumulate_grads(NetworkGrads& into, const NetworkGrads& from);
void scale_grads(NetworkGrads& grads, double s);

std::size_t param_count(const Network& net);

// Process-wide count of network_forward invocations (test
// instrumentation for the one-forward-pass contract).
std::uint64_t forward_call_count();

// Model file round trip: "PCAMNET1" container, 32-bit float parameters
// (save narrows, load widens). Throws DataError on malformed files.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

}  // namespace pcam
