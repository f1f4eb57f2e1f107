#include "spda/vae.hpp"

#include <json.hpp>

#include <cmath>
#include <stdexcept>

namespace spda {

using nlohmann::json;

void VaeSpec::validate() const {
  if (patch < 2) throw std::invalid_argument("vae: patch must be >= 2");
  if (hidden < 1) throw std::invalid_argument("vae: hidden must be >= 1");
  if (latent < 2) throw std::invalid_argument("vae: latent dim must be >= 2");
}

std::string VaeSpec::to_json() const {
  return json{{"patch", patch}, {"hidden", hidden}, {"latent", latent}}.dump();
}

VaeSpec VaeSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  VaeSpec s;
  s.patch = j.at("patch").get<int>();
  s.hidden = j.at("hidden").get<int>();
  s.latent = j.at("latent").get<int>();
  s.validate();
  return s;
}

template <typename T>
Vae<T>::Vae(VaeSpec spec) : spec_(spec) {
  spec_.validate();
  const size_t in = spec_.input_dim(), hid = spec_.hidden, lat = spec_.latent;
  size_t off = 0;
  auto take = [&off](size_t n) {
    size_t at = off;
    off += n;
    return at;
  };
  o_w1_ = take(hid * in);
  o_b1_ = take(hid);
  o_wm_ = take(lat * hid);
  o_bm_ = take(lat);
  o_wv_ = take(lat * hid);
  o_bv_ = take(lat);
  o_wd_ = take(hid * lat);
  o_bd_ = take(hid);
  o_wo_ = take(in * hid);
  o_bo_ = take(in);
  params_.assign(off, T(0));
}

template <typename T>
void Vae<T>::init_he(SeededRng& rng) {
  const size_t in = spec_.input_dim(), hid = spec_.hidden, lat = spec_.latent;
  struct Block {
    size_t off, count, fan_in;
  };
  const Block blocks[] = {{o_w1_, hid * in, in},   {o_wm_, lat * hid, hid},
                          {o_wv_, lat * hid, hid}, {o_wd_, hid * lat, lat},
                          {o_wo_, in * hid, hid}};
  for (const Block& b : blocks) {
    double limit = std::sqrt(6.0 / static_cast<double>(b.fan_in));
    for (size_t i = 0; i < b.count; ++i)
      params_[b.off + i] = static_cast<T>((2.0 * rng.uniform_real() - 1.0) * limit);
  }
}

namespace {

template <typename T>
void dense(const T* w, const T* b, const T* x, int in, int out, T* y) {
  for (int o = 0; o < out; ++o) {
    T sum = b[o];
    const T* wp = w + static_cast<size_t>(o) * in;
    for (int i = 0; i < in; ++i) sum += wp[i] * x[i];
    y[o] = sum;
  }
}

// Accumulates dL/dW, dL/db and returns dL/dx for y = W x + b given dL/dy.
template <typename T>
void dense_backward(const T* w, const T* x, const T* dy, int in, int out, T* gw, T* gb,
                    T* dx) {
  if (dx)
    for (int i = 0; i < in; ++i) dx[i] = T(0);
  for (int o = 0; o < out; ++o) {
    const T g = dy[o];
    gb[o] += g;
    T* gwp = gw + static_cast<size_t>(o) * in;
    const T* wp = w + static_cast<size_t>(o) * in;
    for (int i = 0; i < in; ++i) {
      gwp[i] += g * x[i];
      if (dx) dx[i] += g * wp[i];
    }
  }
}

}  // namespace

template <typename T>
T Vae<T>::loss(const T* x, const T* eps, LossParts* parts, std::vector<T>* grads) const {
  const int in = spec_.input_dim(), hid = spec_.hidden, lat = spec_.latent;
  const T* P = params_.data();

  std::vector<T> h_pre(hid), h(hid), mu(lat), lv(lat), z(lat), g_pre(hid), g(hid),
      o_pre(in), xhat(in);
  dense(P + o_w1_, P + o_b1_, x, in, hid, h_pre.data());
  for (int i = 0; i < hid; ++i) h[i] = h_pre[i] > T(0) ? h_pre[i] : T(0);
  dense(P + o_wm_, P + o_bm_, h.data(), hid, lat, mu.data());
  dense(P + o_wv_, P + o_bv_, h.data(), hid, lat, lv.data());
  for (int j = 0; j < lat; ++j) z[j] = mu[j] + std::exp(T(0.5) * lv[j]) * eps[j];
  dense(P + o_wd_, P + o_bd_, z.data(), lat, hid, g_pre.data());
  for (int i = 0; i < hid; ++i) g[i] = g_pre[i] > T(0) ? g_pre[i] : T(0);
  dense(P + o_wo_, P + o_bo_, g.data(), hid, in, o_pre.data());
  for (int i = 0; i < in; ++i) xhat[i] = T(1) / (T(1) + std::exp(-o_pre[i]));

  T recon = T(0);
  for (int i = 0; i < in; ++i) {
    T d = xhat[i] - x[i];
    recon += d * d;
  }
  T kl = T(0);
  for (int j = 0; j < lat; ++j)
    kl += T(0.5) * (mu[j] * mu[j] + std::exp(lv[j]) - T(1) - lv[j]);
  if (parts) {
    parts->recon = recon;
    parts->kl = kl;
  }
  T total = recon + kl;
  if (!grads) return total;

  if (grads->size() != params_.size())
    throw std::invalid_argument("vae: gradient buffer size mismatch");
  T* G = grads->data();
  std::vector<T> d_opre(in), dg(hid), d_gpre(hid), dz(lat), dmu(lat), dlv(lat), dh(hid),
      d_hpre(hid), tmp(hid);
  for (int i = 0; i < in; ++i) {
    T d = T(2) * (xhat[i] - x[i]);
    d_opre[i] = d * xhat[i] * (T(1) - xhat[i]);
  }
  dense_backward(P + o_wo_, g.data(), d_opre.data(), hid, in, G + o_wo_, G + o_bo_, dg.data());
  for (int i = 0; i < hid; ++i) d_gpre[i] = g_pre[i] > T(0) ? dg[i] : T(0);
  dense_backward(P + o_wd_, z.data(), d_gpre.data(), lat, hid, G + o_wd_, G + o_bd_, dz.data());
  for (int j = 0; j < lat; ++j) {
    dmu[j] = dz[j] + mu[j];
    dlv[j] = dz[j] * eps[j] * T(0.5) * std::exp(T(0.5) * lv[j]) +
             T(0.5) * (std::exp(lv[j]) - T(1));
  }
  dense_backward(P + o_wm_, h.data(), dmu.data(), hid, lat, G + o_wm_, G + o_bm_, dh.data());
  dense_backward(P + o_wv_, h.data(), dlv.data(), hid, lat, G + o_wv_, G + o_bv_, tmp.data());
  for (int i = 0; i < hid; ++i) dh[i] += tmp[i];
  for (int i = 0; i < hid; ++i) d_hpre[i] = h_pre[i] > T(0) ? dh[i] : T(0);
  dense_backward(P + o_w1_, x, d_hpre.data(), in, hid, G + o_w1_, G + o_b1_,
                 static_cast<T*>(nullptr));
  return total;
}

template <typename T>
std::vector<T> Vae<T>::encode_mean(const T* x) const {
  const int in = spec_.input_dim(), hid = spec_.hidden, lat = spec_.latent;
  const T* P = params_.data();
  std::vector<T> h(hid), mu(lat);
  dense(P + o_w1_, P + o_b1_, x, in, hid, h.data());
  for (int i = 0; i < hid; ++i) h[i] = h[i] > T(0) ? h[i] : T(0);
  dense(P + o_wm_, P + o_bm_, h.data(), hid, lat, mu.data());
  return mu;
}

template class Vae<float>;
template class Vae<double>;

double gaussian_prior_kl(const std::vector<double>& mu, const std::vector<double>& logvar) {
  if (mu.size() != logvar.size()) throw std::invalid_argument("kl: dimension mismatch");
  double kl = 0.0;
  for (size_t j = 0; j < mu.size(); ++j)
    kl += 0.5 * (mu[j] * mu[j] + std::exp(logvar[j]) - 1.0 - logvar[j]);
  return kl;
}

Checkpoint make_vae_checkpoint(const Vae<float>& vae, int64_t step) {
  Checkpoint ckpt;
  ckpt.spec_json = json{{"kind", "vae"}, {"vae", json::parse(vae.spec().to_json())}}.dump();
  ckpt.step = step;
  ckpt.buffer_names.push_back("params");
  ckpt.buffers.push_back(vae.params());
  return ckpt;
}

Vae<float> vae_from_checkpoint(const Checkpoint& ckpt) {
  json spec = json::parse(ckpt.spec_json);
  if (spec.at("kind").get<std::string>() != "vae")
    throw std::runtime_error("checkpoint does not hold a VAE");
  Vae<float> vae(VaeSpec::from_json(spec.at("vae").dump()));
  for (size_t i = 0; i < ckpt.buffer_names.size(); ++i) {
    if (ckpt.buffer_names[i] == "params") {
      if (ckpt.buffers[i].size() != vae.param_count())
        throw std::runtime_error("vae checkpoint parameter count mismatch");
      vae.params() = ckpt.buffers[i];
      return vae;
    }
  }
  throw std::runtime_error("vae checkpoint missing params buffer");
}

}  // namespace spda
