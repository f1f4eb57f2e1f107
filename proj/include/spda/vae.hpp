#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spda/nn.hpp"
#include "spda/rng.hpp"

namespace spda {

// Small dense VAE over flattened grayscale patches. The encoder outputs a
// diagonal Gaussian q(z|x) = N(mu, diag(exp(logvar))); training pushes the
// latents toward N(0, I).
struct VaeSpec {
  int patch = 16;
  int hidden = 64;
  int latent = 8;

  int input_dim() const { return patch * patch; }
  void validate() const;
  std::string to_json() const;
  static VaeSpec from_json(const std::string& text);
};

template <typename T>
class Vae {
 public:
  Vae() = default;
  explicit Vae(VaeSpec spec);

  const VaeSpec& spec() const { return spec_; }
  void init_he(SeededRng& rng);

  struct LossParts {
    T recon = T(0);  // sum of squared reconstruction errors
    T kl = T(0);     // KL(q(z|x) || N(0, I))
  };

  // Negative ELBO for one patch with frozen reparameterization noise eps
  // (latent-dim standard normals). When grads is non-null the analytic
  // parameter gradients are accumulated into it (caller zeroes).
  T loss(const T* x, const T* eps, LossParts* parts = nullptr,
         std::vector<T>* grads = nullptr) const;

  // Deterministic encoder means (no sampling).
  std::vector<T> encode_mean(const T* x) const;

  size_t param_count() const { return params_.size(); }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }

  template <typename U>
  Vae<U> cast() const {
    Vae<U> out(spec_);
    for (size_t i = 0; i < params_.size(); ++i)
      out.params()[i] = static_cast<U>(params_[i]);
    return out;
  }

 private:
  VaeSpec spec_;
  std::vector<T> params_;
  // offsets into params_: W1 b1 Wm bm Wv bv Wd bd Wo bo
  size_t o_w1_ = 0, o_b1_ = 0, o_wm_ = 0, o_bm_ = 0, o_wv_ = 0, o_bv_ = 0;
  size_t o_wd_ = 0, o_bd_ = 0, o_wo_ = 0, o_bo_ = 0;
};

// Closed-form KL(N(mu, sigma^2) || N(0,1)) summed over dimensions:
// 0.5 * sum(mu^2 + sigma^2 - 1 - log sigma^2).
double gaussian_prior_kl(const std::vector<double>& mu, const std::vector<double>& logvar);

Checkpoint make_vae_checkpoint(const Vae<float>& vae, int64_t step);
Vae<float> vae_from_checkpoint(const Checkpoint& ckpt);

}  // namespace spda
