#include "pcam/network.hpp"

#include <atomic>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "pcam/errors.hpp"

namespace pcam {

namespace {

std::atomic<std::uint64_t> g_forward_calls{0};

}  // namespace

Network build_preset(const std::string& name, std::size_t in_channels,
                     std::size_t num_classes, RngState& rng,
                     std::size_t train_h, std::size_t train_w) {
  if (num_classes < 2)
    throw std::invalid_argument("build_preset: need at least 2 classes");
  Network net;
  net.in_channels = in_channels;
  net.in_height = train_h;
  net.in_width = train_w;
  auto& L = net.layers;
  if (name == "minivgg") {
    L.push_back(make_conv3x3(8, in_channels, rng));
    L.push_back(make_relu());
    L.push_back(make_maxpool());
    L.push_back(make_conv3x3(16, 8, rng));
    L.push_back(make_relu());
    L.push_back(make_maxpool());
    L.push_back(make_conv3x3(32, 16, rng));
    L.push_back(make_relu());
    L.push_back(make_maxpool());
    L.push_back(make_gap());
    L.push_back(make_dense(num_classes, 32, rng));
    L.push_back(make_softmax());
  } else if (name == "miniresnet") {
    L.push_back(make_conv3x3(8, in_channels, rng));
    L.push_back(make_relu());
    L.push_back(make_maxpool());
    {
      std::vector<LayerSpec> body;
      body.push_back(make_conv3x3(8, 8, rng));
      body.push_back(make_relu());
      body.push_back(make_conv3x3(8, 8, rng));
      L.push_back(make_residual(std::move(body)));
    }
    L.push_back(make_relu());
    L.push_back(make_maxpool());
    L.push_back(make_conv3x3(16, 8, rng));
    L.push_back(make_relu());
    {
      std::vector<LayerSpec> body;
      body.push_back(make_conv3x3(16, 16, rng));
      body.push_back(make_relu());
      body.push_back(make_conv3x3(16, 16, rng));
      L.push_back(make_residual(std::move(body)));
    }
    L.push_back(make_relu());
    L.push_back(make_maxpool());
    L.push_back(make_gap());
    L.push_back(make_dense(num_classes, 16, rng));
    L.push_back(make_softmax());
  } else {
    throw std::invalid_argument("build_preset: unknown preset '" + name + "'");
  }
  net.class_names.resize(num_classes);
  for (std::size_t i = 0; i < num_classes; ++i)
    net.class_names[i] = "class" + std::to_string(i);
  return net;
}

bool is_cam_ready(const Network& net) {
  const std::size_t n = net.layers.size();
  if (n < 3) return false;
  if (net.layers[n - 3].kind != LayerKind::GlobalAvgPool ||
      net.layers[n - 2].kind != LayerKind::Dense ||
      net.layers[n - 1].kind != LayerKind::SoftmaxOutput)
    return false;
  for (std::size_t i = 0; i + 3 < n; ++i) {
    const LayerKind k = net.layers[i].kind;
    if (k == LayerKind::GlobalAvgPool || k == LayerKind::Dense ||
        k == LayerKind::SoftmaxOutput)
      return false;
  }
  if (net.class_names.size() != net.layers[n - 2].weight.shape()[0])
    return false;
  return true;
}

Network replace_head(const Network& net,
                     std::vector<std::string> new_class_names, RngState& rng,
                     double head_lr_factor) {
  if (!is_cam_ready(net))
    throw std::invalid_argument("replace_head: network is not CAM-ready");
  if (new_class_names.size() < 2)
    throw std::invalid_argument("replace_head: need at least 2 classes");
  Network out = net;
  const std::size_t features = net.layers[net.layers.size() - 2].weight.shape()[1];
  out.layers.pop_back();  // Softmax
  out.layers.pop_back();  // Dense
  LayerSpec head = make_dense(new_class_names.size(), features, rng);
  head.lr_factor = head_lr_factor;
  out.layers.push_back(std::move(head));
  out.layers.push_back(make_softmax());
  out.class_names = std::move(new_class_names);
  return out;
}

ForwardTrace network_forward(const Network& net, const Tensor& image) {
  if (image.shape().size() != 3 || image.shape()[0] != net.in_channels)
    throw std::invalid_argument("forward: input must be [" +
                                std::to_string(net.in_channels) + ",h,w]");
  g_forward_calls.fetch_add(1, std::memory_order_relaxed);
  ForwardTrace trace;
  trace.layers.assign(net.layers.size(), LayerTrace{});
  Tensor cur = image;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    cur = layer_forward(net.layers[i], cur, trace.layers[i]);
    if (!cur.all_finite())
      throw NumericError("forward: non-finite activation after layer " +
                         std::to_string(i));
    if (net.layers[i].kind == LayerKind::GlobalAvgPool)
      trace.pre_gap = trace.layers[i].input;
    if (net.layers[i].kind == LayerKind::Dense) trace.logits = cur;
  }
  trace.probs = cur;
  std::size_t best = 0;
  for (std::size_t i = 1; i < trace.probs.size(); ++i)
    if (trace.probs[i] > trace.probs[best]) best = i;
  trace.predicted = best;
  return trace;
}

double network_backward(const Network& net, const ForwardTrace& trace,
                        std::size_t label, NetworkGrads& grads) {
  const std::size_t n = net.layers.size();
  if (trace.layers.size() != n)
    throw std::invalid_argument("backward: trace/network layer count mismatch");
  if (n == 0 || net.layers[n - 1].kind != LayerKind::SoftmaxOutput)
    throw std::invalid_argument("backward: network must end in Softmax");
  if (grads.size() != n) grads.assign(n, LayerGrads{});
  auto [probs, loss] = softmax_xent(trace.layers[n - 1].input, label);
  // Fused softmax + cross-entropy gradient wrt logits.
  Tensor g(probs.shape());
  for (std::size_t i = 0; i < probs.size(); ++i)
    g[i] = probs[i] - (i == label ? 1.0 : 0.0);
  for (std::size_t i = n - 1; i-- > 0;)
    g = layer_backward(net.layers[i], trace.layers[i], g, grads[i]);
  return loss;
}

namespace {

void alloc_layer_grads(const LayerSpec& spec, LayerGrads& g) {
  if (!spec.weight.empty()) g.weight = Tensor(spec.weight.shape());
  if (!spec.bias.empty()) g.bias = Tensor(spec.bias.shape());
  g.nested.assign(spec.nested.size(), LayerGrads{});
  for (std::size_t i = 0; i < spec.nested.size(); ++i)
    alloc_layer_grads(spec.nested[i], g.nested[i]);
}

void accumulate_layer(LayerGrads& into, const LayerGrads& from) {
  for (std::size_t i = 0; i < into.weight.size(); ++i)
    into.weight[i] += from.weight[i];
  for (std::size_t i = 0; i < into.bias.size(); ++i)
    into.bias[i] += from.bias[i];
  for (std::size_t i = 0; i < into.nested.size(); ++i)
    accumulate_layer(into.nested[i], from.nested[i]);
}

void scale_layer(LayerGrads& g, double s) {
  for (std::size_t i = 0; i < g.weight.size(); ++i) g.weight[i] *= s;
  for (std::size_t i = 0; i < g.bias.size(); ++i) g.bias[i] *= s;
  for (LayerGrads& inner : g.nested) scale_layer(inner, s);
}

}  // namespace

NetworkGrads alloc_grads(const Network& net) {
  NetworkGrads grads(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    alloc_layer_grads(net.layers[i], grads[i]);
  return grads;
}

void accumulate_grads(NetworkGrads& into, const NetworkGrads& from) {
  if (into.size() != from.size())
    throw std::invalid_argument("accumulate_grads: layer count mismatch");
  for (std::size_t i = 0; i < into.size(); ++i)
    accumulate_layer(into[i], from[i]);
}

void scale_grads(NetworkGrads& grads, double s) {
  for (LayerGrads& g : grads) scale_layer(g, s);
}

std::size_t param_count(const Network& net) {
  std::size_t n = 0;
  for (const LayerSpec& spec : net.layers) n += layer_param_count(spec);
  return n;
}

std::uint64_t forward_call_count() {
  return g_forward_calls.load(std::memory_order_relaxed);
}

// ---- serialization -------------------------------------------------

namespace {

constexpr char kMagic[8] = {'P', 'C', 'A', 'M', 'N', 'E', 'T', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                        static_cast<unsigned char>((v >> 8) & 0xFF),
                        static_cast<unsigned char>((v >> 16) & 0xFF),
                        static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_f32(std::ostream& out, double v) {
  const float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

void put_u8(std::ostream& out, std::uint8_t v) {
  out.put(static_cast<char>(v));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw DataError("model file: truncated");
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f32(std::istream& in) {
  const std::uint32_t bits = get_u32(in);
  float f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

std::uint8_t get_u8(std::istream& in) {
  const int c = in.get();
  if (c == EOF) throw DataError("model file: truncated");
  return static_cast<std::uint8_t>(c);
}

void put_layer(std::ostream& out, const LayerSpec& spec) {
  put_u8(out, static_cast<std::uint8_t>(spec.kind));
  put_f32(out, spec.lr_factor);
  put_u8(out, spec.frozen ? 1 : 0);
  switch (spec.kind) {
    case LayerKind::Conv3x3:
      put_u32(out, static_cast<std::uint32_t>(spec.weight.shape()[0]));
      put_u32(out, static_cast<std::uint32_t>(spec.weight.shape()[1]));
      for (std::size_t i = 0; i < spec.weight.size(); ++i)
        put_f32(out, spec.weight[i]);
      for (std::size_t i = 0; i < spec.bias.size(); ++i)
        put_f32(out, spec.bias[i]);
      break;
    case LayerKind::Dense:
      put_u32(out, static_cast<std::uint32_t>(spec.weight.shape()[0]));
      put_u32(out, static_cast<std::uint32_t>(spec.weight.shape()[1]));
      for (std::size_t i = 0; i < spec.weight.size(); ++i)
        put_f32(out, spec.weight[i]);
      for (std::size_t i = 0; i < spec.bias.size(); ++i)
        put_f32(out, spec.bias[i]);
      break;
    case LayerKind::Residual:
      put_u32(out, static_cast<std::uint32_t>(spec.nested.size()));
      for (const LayerSpec& inner : spec.nested) put_layer(out, inner);
      break;
    default:
      break;
  }
}

LayerSpec get_layer(std::istream& in, int depth) {
  if (depth > 4) throw DataError("model file: residual nesting too deep");
  LayerSpec spec;
  const std::uint8_t kind = get_u8(in);
  if (kind < 1 || kind > 7)
    throw DataError("model file: unknown layer kind " + std::to_string(kind));
  spec.kind = static_cast<LayerKind>(kind);
  spec.lr_factor = get_f32(in);
  spec.frozen = get_u8(in) != 0;
  switch (spec.kind) {
    case LayerKind::Conv3x3: {
      const std::uint32_t out_ch = get_u32(in);
      const std::uint32_t in_ch = get_u32(in);
      if (out_ch == 0 || in_ch == 0 || out_ch > 65536 || in_ch > 65536)
        throw DataError("model file: bad conv dimensions");
      spec.weight = Tensor({out_ch, in_ch, 3, 3});
      spec.bias = Tensor({out_ch});
      for (std::size_t i = 0; i < spec.weight.size(); ++i)
        spec.weight[i] = get_f32(in);
      for (std::size_t i = 0; i < spec.bias.size(); ++i)
        spec.bias[i] = get_f32(in);
      break;
    }
    case LayerKind::Dense: {
      const std::uint32_t rows = get_u32(in);
      const std::uint32_t cols = get_u32(in);
      if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536)
        throw DataError("model file: bad dense dimensions");
      spec.weight = Tensor({rows, cols});
      spec.bias = Tensor({rows});
      for (std::size_t i = 0; i < spec.weight.size(); ++i)
        spec.weight[i] = get_f32(in);
      for (std::size_t i = 0; i < spec.bias.size(); ++i)
        spec.bias[i] = get_f32(in);
      break;
    }
    case LayerKind::Residual: {
      const std::uint32_t count = get_u32(in);
      if (count > 64) throw DataError("model file: bad residual size");
      for (std::uint32_t i = 0; i < count; ++i)
        spec.nested.push_back(get_layer(in, depth + 1));
      break;
    }
    default:
      break;
  }
  return spec;
}

}  // namespace

void save_network(const Network& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, 8);
  put_u32(out, 1);  // version
  put_u32(out, static_cast<std::uint32_t>(net.class_names.size()));
  for (const std::string& name : net.class_names) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  put_u32(out, static_cast<std::uint32_t>(net.in_channels));
  put_u32(out, static_cast<std::uint32_t>(net.in_height));
  put_u32(out, static_cast<std::uint32_t>(net.in_width));
  put_u32(out, static_cast<std::uint32_t>(net.layers.size()));
  for (const LayerSpec& spec : net.layers) put_layer(out, spec);
  out.flush();
  if (!out) throw DataError("write failed: " + path);
}

Network load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw DataError("model file: bad magic: " + path);
  const std::uint32_t version = get_u32(in);
  if (version != 1)
    throw DataError("model file: unsupported version " +
                    std::to_string(version));
  Network net;
  const std::uint32_t num_classes = get_u32(in);
  if (num_classes == 0 || num_classes > 4096)
    throw DataError("model file: bad class count");
  for (std::uint32_t i = 0; i < num_classes; ++i) {
    const std::uint32_t len = get_u32(in);
    if (len > 4096) throw DataError("model file: class name too long");
    std::string name(len, '\0');
    if (len > 0 && !in.read(name.data(), len))
      throw DataError("model file: truncated");
    net.class_names.push_back(std::move(name));
  }
  net.in_channels = get_u32(in);
  net.in_height = get_u32(in);
  net.in_width = get_u32(in);
  const std::uint32_t layer_count = get_u32(in);
  if (layer_count > 4096) throw DataError("model file: bad layer count");
  for (std::uint32_t i = 0; i < layer_count; ++i)
    net.layers.push_back(get_layer(in, 0));
  // Trailing bytes mean the file is not one of ours.
  if (in.peek() != EOF) throw DataError("model file: trailing bytes: " + path);
  return net;
}

}  // namespace pcam
