#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spda/rng.hpp"
#include "spda/tensor.hpp"

namespace spda {

enum class LayerKind { Conv3x3, Relu, MaxPool2, Upsample2, Dense, Softmax };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int in_ch = 0;   // Conv3x3: input channels, Dense: input features
  int out_ch = 0;  // Conv3x3: output channels, Dense: output features
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  int input_channels = 1;

  // Two-level encoder-decoder ending in a per-pixel softmax head.
  static NetworkSpec toy_fcn(int in_ch, int num_classes, int base = 8);

  void validate() const;
  std::string to_json() const;
  static NetworkSpec from_json(const std::string& text);
  size_t param_count() const;
};

const char* layer_kind_name(LayerKind k);

// Activations recorded during the forward pass for use by backward.
template <typename T>
struct ForwardCache {
  std::vector<TensorT<T>> inputs;                 // input to each layer
  std::vector<std::vector<int64_t>> pool_argmax;  // one per MaxPool2, in layer order
};

template <typename T>
class Network {
 public:
  Network() = default;
  explicit Network(NetworkSpec spec);

  const NetworkSpec& spec() const { return spec_; }
  void init_he(SeededRng& rng);

  // Per-pixel class probabilities (softmax applied when present).
  TensorT<T> forward(const TensorT<T>& input) const;
  // Stops before the trailing softmax; records activations when cache given.
  TensorT<T> forward_logits(const TensorT<T>& input, ForwardCache<T>* cache = nullptr) const;
  // Accumulates parameter gradients (buffer must be param_count() long,
  // caller-zeroed) given dLoss/dLogits; optionally returns dLoss/dInput.
  void backward(const ForwardCache<T>& cache, const TensorT<T>& grad_logits,
                std::vector<T>& param_grads, TensorT<T>* grad_input = nullptr) const;

  size_t param_count() const { return params_.size(); }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  size_t layer_offset(size_t layer) const { return offsets_[layer]; }

  template <typename U>
  Network<U> cast() const {
    Network<U> out(spec_);
    for (size_t i = 0; i < params_.size(); ++i)
      out.params()[i] = static_cast<U>(params_[i]);
    return out;
  }

 private:
  NetworkSpec spec_;
  std::vector<T> params_;
  std::vector<size_t> offsets_;  // per-layer start into params_
};

// Mean over pixels of -log p(true class); gradient with respect to logits is
// (softmax - one_hot) / pixel_count.
template <typename T>
T spatial_cross_entropy(const TensorT<T>& logits, const LabelMap& label,
                        TensorT<T>* grad_logits = nullptr);

template <typename T>
struct AdamState {
  std::vector<T> m, v;
  int64_t t = 0;
  double lr = 5e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  void init(size_t n) {
    m.assign(n, T(0));
    v.assign(n, T(0));
    t = 0;
  }
};

// Standard bias-corrected Adam update. Rejects non-finite gradients.
template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state);

// Piecewise-constant learning rate: `initial` through `boundary`, then
// `decayed` for the rest of training.
struct LrSchedule {
  double initial = 5e-4;
  double decayed = 5e-5;
  int64_t boundary = 30000;
  double at(int64_t step) const { return step <= boundary ? initial : decayed; }
};

// Container checkpoint: magic "SPDACKPT", u32 version, length-prefixed UTF-8
// spec JSON, then raw little-endian f32 buffers in the order the JSON names
// them. Save -> load round-trips are bit-exact.
struct Checkpoint {
  uint32_t version = 1;
  std::string spec_json;
  std::vector<std::string> buffer_names;
  std::vector<std::vector<float>> buffers;
  int64_t step = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint make_fcn_checkpoint(const Network<float>& net, const AdamState<float>* adam,
                               int64_t step);
Network<float> network_from_checkpoint(const Checkpoint& ckpt, AdamState<float>* adam = nullptr);

// Serial reference conv kernels for the benchmark and equality tests.
namespace ref {
void conv3x3_forward(const TensorT<float>& in, const float* w, const float* b, int out_ch,
                     TensorT<float>& out);
}  // namespace ref

void conv3x3_forward_kernel(const TensorT<float>& in, const float* w, const float* b,
                            int out_ch, TensorT<float>& out);

}  // namespace spda
