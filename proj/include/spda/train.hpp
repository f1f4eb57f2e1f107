#pragma once

#include <list>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "spda/dataset.hpp"
#include "spda/nn.hpp"
#include "spda/slic.hpp"
#include "spda/spda_transform.hpp"
#include "spda/vae.hpp"

namespace spda {

struct TrainConfig {
  int s_lo = 800;
  int s_hi = 2000;
  std::optional<double> lambda_override;
  int batch_size = 8;  // must be even: the mini-batch pairs originals with SP copies
  LrSchedule lr;
  int64_t max_steps = 1000;
  uint64_t seed = 1;
  int input_h = 192;  // training crop; 0 disables cropping
  int input_w = 192;
  bool use_spda = true;
  bool use_basic = true;
  bool basic_flips = true;
  std::vector<int> rotation_set = {0, 90, 180, 270};
  SlicParams slic;  // compactness 20 by default; s is drawn per Algorithm 1
  double val_fraction = 0.2;
  int64_t val_interval = 100;
  int64_t log_interval = 1;
  int64_t plateau_window = 0;  // 0 = off
  size_t sp_cache_capacity = 4096;

  double lambda() const {
    return lambda_override ? *lambda_override : 1.0 / (s_hi - s_lo + 1);
  }
  void validate(int64_t pixel_count) const;
};

// LRU cache of full-size SP(x, s) images keyed by (sample index, s). Caching
// only avoids recomputation; SLIC is deterministic so cache hits and misses
// yield identical tensors.
class SpCache {
 public:
  explicit SpCache(size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  const Tensor* find(int sample, int s);
  const Tensor& insert(int sample, int s, Tensor image);
  size_t size() const { return entries_.size(); }

 private:
  static int64_t key(int sample, int s) {
    return (static_cast<int64_t>(sample) << 32) | static_cast<uint32_t>(s);
  }
  size_t capacity_;
  std::list<std::pair<int64_t, Tensor>> entries_;  // front = most recent
  std::unordered_map<int64_t, std::list<std::pair<int64_t, Tensor>>::iterator> index_;
};

const Tensor& sp_cached(const Tensor& image, int sample_index, int s,
                        const SlicParams& slic_params, SpCache& cache);

// Algorithm-1 mini-batch: batch_size/2 uniformly drawn originals, each
// followed by SP(x_p, k) of the same index with k ~ U[s_lo, s_hi]. The same
// basic transform applies to both members of a pair. With use_spda off the
// batch is batch_size independent originals (the plain-DA baseline).
std::vector<Sample> build_minibatch(const std::vector<Sample>& dataset,
                                    const TrainConfig& config, SpCache& cache,
                                    SeededRng& sampling_rng, SeededRng& augment_rng);

// Exact evaluation of the full training objective
//   (1/n) sum_i [ L(f(x_i), y_i) + lambda * sum_{s=s_lo}^{s_hi} L(f(SP(x_i,s)), y_i) ]
// over full-size images. Guarded by a term cap since the s-range is
// enumerated literally.
double eq6_exact_loss(const Network<float>& net, const std::vector<Sample>& dataset,
                      const TrainConfig& config, int max_terms = 64);

struct TrainMetrics {
  int64_t step = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> val_mean_iu;
};

struct TrainResult {
  Network<float> net;
  AdamState<float> adam;
  int64_t steps_run = 0;
  bool plateau_stop = false;
  std::vector<TrainMetrics> history;
};

// Dataset-aggregated meanIU (intersections/unions summed over all samples).
double evaluate_mean_iu(const Network<float>& net, const std::vector<Sample>& samples);

TrainResult train_segmentation(const std::vector<Sample>& originals, const NetworkSpec& spec,
                               const TrainConfig& config, std::ostream* log = nullptr);

struct VaeTrainConfig {
  int64_t steps = 1500;
  int batch = 32;
  double lr = 1e-3;
  uint64_t seed = 1;
};

Vae<float> train_vae(const std::vector<std::vector<float>>& patches, const VaeSpec& spec,
                     const VaeTrainConfig& config);

// Mean ELBO estimate over patches with noise drawn from a fixed seed, so two
// models can be compared on identical noise.
double vae_mean_elbo(const Vae<float>& vae, const std::vector<std::vector<float>>& patches,
                     uint64_t seed);

// Non-overlapping patch grid; multi-channel images are averaged to gray.
std::vector<std::vector<float>> extract_patches(const Tensor& image, int patch);

// Deterministic per-image latents: encoder means averaged over the image's
// patches.
std::vector<std::vector<float>> encode_latents(const Vae<float>& vae,
                                               const std::vector<Tensor>& images);

}  // namespace spda
