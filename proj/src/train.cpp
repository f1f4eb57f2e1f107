#include "spda/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spda/parallel.hpp"

namespace spda {

void TrainConfig::validate(int64_t pixel_count) const {
  if (batch_size < 2 || batch_size % 2 != 0)
    throw std::invalid_argument("train: batch_size must be even and >= 2");
  if (s_lo < 1 || s_lo > s_hi) throw std::invalid_argument("train: require 1 <= s_lo <= s_hi");
  if (pixel_count > 0 && s_hi > pixel_count)
    throw std::invalid_argument("train: s_hi exceeds pixel count");
  if (lambda() <= 0.0) throw std::invalid_argument("train: lambda must be positive");
  if (max_steps < 1) throw std::invalid_argument("train: max_steps must be >= 1");
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw std::invalid_argument("train: val_fraction must be in [0,1)");
}

const Tensor* SpCache::find(int sample, int s) {
  auto it = index_.find(key(sample, s));
  if (it == index_.end()) return nullptr;
  entries_.splice(entries_.begin(), entries_, it->second);
  return &entries_.front().second;
}

const Tensor& SpCache::insert(int sample, int s, Tensor image) {
  int64_t k = key(sample, s);
  auto it = index_.find(k);
  if (it != index_.end()) {
    entries_.splice(entries_.begin(), entries_, it->second);
    entries_.front().second = std::move(image);
    return entries_.front().second;
  }
  entries_.emplace_front(k, std::move(image));
  index_[k] = entries_.begin();
  if (entries_.size() > capacity_) {
    index_.erase(entries_.back().first);
    entries_.pop_back();
  }
  return entries_.front().second;
}

const Tensor& sp_cached(const Tensor& image, int sample_index, int s,
                        const SlicParams& slic_params, SpCache& cache) {
  if (const Tensor* hit = cache.find(sample_index, s)) return *hit;
  return cache.insert(sample_index, s, sp_transform(image, s, slic_params));
}

std::vector<Sample> build_minibatch(const std::vector<Sample>& dataset,
                                    const TrainConfig& config, SpCache& cache,
                                    SeededRng& sampling_rng, SeededRng& augment_rng) {
  if (dataset.empty()) throw std::invalid_argument("build_minibatch: empty dataset");
  const int64_t n = static_cast<int64_t>(dataset.size());
  std::vector<Sample> batch;
  batch.reserve(config.batch_size);

  BasicAugmentConfig basic;
  basic.crop_h = config.input_h;
  basic.crop_w = config.input_w;
  basic.flip_y = config.basic_flips;
  basic.flip_x = config.basic_flips;
  basic.rotation_set = config.rotation_set;

  auto augment_pair = [&](const Sample& original, const Sample* sp_sample) {
    if (!config.use_basic) {
      batch.push_back(original);
      if (sp_sample) batch.push_back(*sp_sample);
      return;
    }
    BasicTransform t = draw_basic_transform(original.image.height(),
                                            original.image.width(), basic, augment_rng);
    batch.push_back(apply_basic_transform(original, t));
    if (sp_sample) {
      Sample aug = apply_basic_transform(*sp_sample, t);
      aug.provenance = sp_sample->provenance;
      batch.push_back(std::move(aug));
    }
  };

  if (!config.use_spda) {
    for (int m = 0; m < config.batch_size; ++m) {
      int p = static_cast<int>(sampling_rng.uniform_int(0, n - 1));
      augment_pair(dataset[static_cast<size_t>(p)], nullptr);
    }
    return batch;
  }

  for (int m = 0; m < config.batch_size / 2; ++m) {
    int p = static_cast<int>(sampling_rng.uniform_int(0, n - 1));
    int k = static_cast<int>(sampling_rng.uniform_int(config.s_lo, config.s_hi));
    const Sample& original = dataset[static_cast<size_t>(p)];
    Sample sp_sample;
    sp_sample.image = sp_cached(original.image, p, k, config.slic, cache);
    sp_sample.label = original.label;
    sp_sample.provenance = Provenance{Provenance::Kind::Spda, k, ""};
    augment_pair(original, &sp_sample);
  }
  return batch;
}

double eq6_exact_loss(const Network<float>& net, const std::vector<Sample>& dataset,
                      const TrainConfig& config, int max_terms) {
  if (dataset.empty()) throw std::invalid_argument("eq6: empty dataset");
  const int terms = config.s_hi - config.s_lo + 1;
  if (terms > max_terms)
    throw std::invalid_argument("eq6: s-range too large to enumerate (" +
                                std::to_string(terms) + " > " + std::to_string(max_terms) +
                                ")");
  const double lambda = config.lambda();
  SpCache cache(static_cast<size_t>(dataset.size()) * terms + 1);
  double total = 0.0;
  for (size_t i = 0; i < dataset.size(); ++i) {
    const Sample& sample = dataset[i];
    TensorT<float> logits = net.forward_logits(sample.image);
    double item = spatial_cross_entropy(logits, sample.label);
    double sp_sum = 0.0;
    for (int s = config.s_lo; s <= config.s_hi; ++s) {
      const Tensor& sp = sp_cached(sample.image, static_cast<int>(i), s, config.slic, cache);
      TensorT<float> sp_logits = net.forward_logits(sp);
      sp_sum += spatial_cross_entropy(sp_logits, sample.label);
    }
    total += item + lambda * sp_sum;
  }
  return total / static_cast<double>(dataset.size());
}

namespace {

void argmax_labels(const TensorT<float>& probs, LabelMap& out) {
  const int c = probs.channels();
  const int64_t npix = probs.pixel_count();
  for (int64_t p = 0; p < npix; ++p) {
    const float* v = &probs.data[p * c];
    int best = 0;
    for (int i = 1; i < c; ++i)
      if (v[i] > v[best]) best = i;
    out.data[p] = best;
  }
}

}  // namespace

double evaluate_mean_iu(const Network<float>& net, const std::vector<Sample>& samples) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  const int num_classes = samples.front().label.num_classes;
  std::vector<int64_t> inter(num_classes, 0), uni(num_classes, 0);
  for (const Sample& s : samples) {
    TensorT<float> probs = net.forward(s.image);
    LabelMap pred(s.label.shape, num_classes);
    argmax_labels(probs, pred);
    for (size_t i = 0; i < pred.data.size(); ++i) {
      int32_t p = pred.data[i], g = s.label.data[i];
      if (p == g) {
        inter[p]++;
        uni[p]++;
      } else {
        uni[p]++;
        uni[g]++;
      }
    }
  }
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (uni[c] == 0) continue;
    sum += static_cast<double>(inter[c]) / uni[c];
    n++;
  }
  return n > 0 ? sum / n : 0.0;
}

TrainResult train_segmentation(const std::vector<Sample>& originals, const NetworkSpec& spec,
                               const TrainConfig& config, std::ostream* log) {
  if (originals.empty()) throw std::invalid_argument("train: empty dataset");
  config.validate(originals.front().image.pixel_count());

  // Hold out the tail of the original list for validation; held-out samples
  // are never augmented.
  size_t n_val = static_cast<size_t>(std::lround(config.val_fraction * originals.size()));
  if (n_val >= originals.size()) n_val = originals.size() - 1;
  std::vector<Sample> train_set(originals.begin(), originals.end() - n_val);
  std::vector<Sample> val_set(originals.end() - n_val, originals.end());

  SeededRng root(config.seed);
  SeededRng init_rng = root.stream("init");
  SeededRng sampling_rng = root.stream("sampling");
  SeededRng augment_rng = root.stream("augmentation");

  TrainResult result;
  result.net = Network<float>(spec);
  result.net.init_he(init_rng);
  result.adam.init(result.net.param_count());

  SpCache cache(config.sp_cache_capacity);
  std::vector<float> grads(result.net.param_count());
  std::vector<std::vector<float>> per_image_grads(
      static_cast<size_t>(config.batch_size), std::vector<float>(result.net.param_count()));
  std::vector<double> per_image_loss(static_cast<size_t>(config.batch_size));
  std::vector<double> losses;

  char line[160];
  for (int64_t step = 1; step <= config.max_steps; ++step) {
    result.adam.lr = config.lr.at(step);
    std::vector<Sample> batch =
        build_minibatch(train_set, config, cache, sampling_rng, augment_rng);

    // Per-image passes run in parallel; each image fills its own gradient
    // buffer and the buffers are reduced in batch order afterwards, so the
    // result does not depend on the thread count.
    const float inv_batch = 1.0f / static_cast<float>(batch.size());
#pragma omp parallel for num_threads(max_threads()) schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(batch.size()); ++i) {
      const Sample& sample = batch[static_cast<size_t>(i)];
      std::vector<float>& g = per_image_grads[static_cast<size_t>(i)];
      std::fill(g.begin(), g.end(), 0.0f);
      ForwardCache<float> fwd;
      TensorT<float> logits = result.net.forward_logits(sample.image, &fwd);
      TensorT<float> grad_logits;
      per_image_loss[static_cast<size_t>(i)] =
          spatial_cross_entropy(logits, sample.label, &grad_logits);
      for (float& v : grad_logits.data) v *= inv_batch;
      result.net.backward(fwd, grad_logits, g);
    }
    std::fill(grads.begin(), grads.end(), 0.0f);
    double loss = 0.0;
    for (size_t i = 0; i < batch.size(); ++i) {
      loss += per_image_loss[i];
      const std::vector<float>& g = per_image_grads[i];
      for (size_t j = 0; j < grads.size(); ++j) grads[j] += g[j];
    }
    loss /= static_cast<double>(batch.size());
    if (!std::isfinite(loss))
      throw std::runtime_error("train: loss diverged at step " + std::to_string(step));
    adam_step(result.net.params(), grads, result.adam);
    losses.push_back(loss);

    TrainMetrics m;
    m.step = step;
    m.lr = result.adam.lr;
    m.loss = loss;
    if (!val_set.empty() &&
        (step % config.val_interval == 0 || step == config.max_steps))
      m.val_mean_iu = evaluate_mean_iu(result.net, val_set);
    result.history.push_back(m);
    result.steps_run = step;

    if (log && (step % config.log_interval == 0 || step == config.max_steps)) {
      if (m.val_mean_iu)
        std::snprintf(line, sizeof(line), "step=%lld lr=%.8f loss=%.8f val_miu=%.6f",
                      static_cast<long long>(step), m.lr, m.loss, *m.val_mean_iu);
      else
        std::snprintf(line, sizeof(line), "step=%lld lr=%.8f loss=%.8f",
                      static_cast<long long>(step), m.lr, m.loss);
      (*log) << line << "\n";
    }

    // Plateau stop: the mean loss over the last window is no lower than the
    // mean over the window before it.
    if (config.plateau_window > 0 &&
        static_cast<int64_t>(losses.size()) >= 2 * config.plateau_window) {
      double recent = 0.0, earlier = 0.0;
      for (int64_t i = 0; i < config.plateau_window; ++i) {
        recent += losses[losses.size() - 1 - i];
        earlier += losses[losses.size() - 1 - config.plateau_window - i];
      }
      if (recent >= earlier) {
        result.plateau_stop = true;
        break;
      }
    }
  }
  return result;
}

Vae<float> train_vae(const std::vector<std::vector<float>>& patches, const VaeSpec& spec,
                     const VaeTrainConfig& config) {
  if (patches.size() < 100)
    throw std::invalid_argument("train_vae: need at least 100 patches");
  for (const auto& p : patches)
    if (static_cast<int>(p.size()) != spec.input_dim())
      throw std::invalid_argument("train_vae: patch size mismatch");

  SeededRng root(config.seed);
  SeededRng init_rng = root.stream("init");
  SeededRng batch_rng = root.stream("sampling");
  SeededRng noise_rng = root.stream("noise");

  Vae<float> vae(spec);
  vae.init_he(init_rng);
  AdamState<float> adam;
  adam.init(vae.param_count());
  adam.lr = config.lr;

  std::vector<float> grads(vae.param_count());
  std::vector<float> eps(spec.latent);
  const int64_t n = static_cast<int64_t>(patches.size());
  for (int64_t step = 0; step < config.steps; ++step) {
    std::fill(grads.begin(), grads.end(), 0.0f);
    double loss = 0.0;
    for (int b = 0; b < config.batch; ++b) {
      int64_t idx = batch_rng.uniform_int(0, n - 1);
      for (int j = 0; j < spec.latent; ++j) eps[j] = static_cast<float>(noise_rng.normal());
      loss += vae.loss(patches[static_cast<size_t>(idx)].data(), eps.data(), nullptr, &grads);
    }
    loss /= config.batch;
    if (!std::isfinite(loss))
      throw std::runtime_error("train_vae: loss diverged at step " + std::to_string(step));
    for (float& g : grads) g /= static_cast<float>(config.batch);
    adam_step(vae.params(), grads, adam);
  }
  return vae;
}

double vae_mean_elbo(const Vae<float>& vae, const std::vector<std::vector<float>>& patches,
                     uint64_t seed) {
  if (patches.empty()) throw std::invalid_argument("vae_mean_elbo: no patches");
  SeededRng rng = SeededRng(seed).stream("elbo-eval");
  std::vector<float> eps(vae.spec().latent);
  double total = 0.0;
  for (const auto& p : patches) {
    for (int j = 0; j < vae.spec().latent; ++j) eps[j] = static_cast<float>(rng.normal());
    total += -static_cast<double>(vae.loss(p.data(), eps.data()));
  }
  return total / static_cast<double>(patches.size());
}

std::vector<std::vector<float>> extract_patches(const Tensor& image, int patch) {
  if (image.is_3d()) throw std::invalid_argument("extract_patches: 2D images only");
  const int h = image.height(), w = image.width(), c = image.channels();
  if (h < patch || w < patch)
    throw std::invalid_argument("extract_patches: image smaller than patch");
  std::vector<std::vector<float>> out;
  for (int y = 0; y + patch <= h; y += patch) {
    for (int x = 0; x + patch <= w; x += patch) {
      std::vector<float> p(static_cast<size_t>(patch) * patch);
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx) {
          float sum = 0.0f;
          for (int ch = 0; ch < c; ++ch) sum += image.at(y + dy, x + dx, ch);
          p[static_cast<size_t>(dy) * patch + dx] = sum / static_cast<float>(c);
        }
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<std::vector<float>> encode_latents(const Vae<float>& vae,
                                               const std::vector<Tensor>& images) {
  const int patch = vae.spec().patch;
  const int latent = vae.spec().latent;
  std::vector<std::vector<float>> out;
  out.reserve(images.size());
  for (const Tensor& img : images) {
    std::vector<std::vector<float>> patches = extract_patches(img, patch);
    if (patches.empty()) throw std::invalid_argument("encode_latents: image smaller than patch");
    std::vector<double> acc(latent, 0.0);
    for (const auto& p : patches) {
      std::vector<float> z = vae.encode_mean(p.data());
      for (int j = 0; j < latent; ++j) acc[j] += z[j];
    }
    std::vector<float> z(latent);
    for (int j = 0; j < latent; ++j)
      z[j] = static_cast<float>(acc[j] / static_cast<double>(patches.size()));
    out.push_back(std::move(z));
  }
  return out;
}

}  // namespace spda
