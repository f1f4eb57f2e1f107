#include "spda/nn.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "spda/parallel.hpp"

namespace spda {

using nlohmann::json;

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool2: return "maxpool2";
    case LayerKind::Upsample2: return "upsample2";
    case LayerKind::Dense: return "dense";
    case LayerKind::Softmax: return "softmax";
  }
  return "?";
}

namespace {

LayerKind layer_kind_from_name(const std::string& name) {
  for (LayerKind k : {LayerKind::Conv3x3, LayerKind::Relu, LayerKind::MaxPool2,
                      LayerKind::Upsample2, LayerKind::Dense, LayerKind::Softmax})
    if (name == layer_kind_name(k)) return k;
  throw std::runtime_error("unknown layer kind: " + name);
}

size_t layer_param_count(const LayerSpec& l) {
  switch (l.kind) {
    case LayerKind::Conv3x3:
      return static_cast<size_t>(9) * l.in_ch * l.out_ch + l.out_ch;
    case LayerKind::Dense:
      return static_cast<size_t>(l.in_ch) * l.out_ch + l.out_ch;
    default:
      return 0;
  }
}

}  // namespace

NetworkSpec NetworkSpec::toy_fcn(int in_ch, int num_classes, int base) {
  NetworkSpec s;
  s.input_channels = in_ch;
  s.layers = {
      {LayerKind::Conv3x3, in_ch, base},          {LayerKind::Relu, 0, 0},
      {LayerKind::MaxPool2, 0, 0},                {LayerKind::Conv3x3, base, 2 * base},
      {LayerKind::Relu, 0, 0},                    {LayerKind::MaxPool2, 0, 0},
      {LayerKind::Conv3x3, 2 * base, 2 * base},   {LayerKind::Relu, 0, 0},
      {LayerKind::Upsample2, 0, 0},               {LayerKind::Conv3x3, 2 * base, base},
      {LayerKind::Relu, 0, 0},                    {LayerKind::Upsample2, 0, 0},
      {LayerKind::Conv3x3, base, num_classes},    {LayerKind::Softmax, 0, 0},
  };
  return s;
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw std::invalid_argument("network: no layers");
  size_t params = 0;
  for (size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if ((l.kind == LayerKind::Conv3x3 || l.kind == LayerKind::Dense) &&
        (l.in_ch <= 0 || l.out_ch <= 0))
      throw std::invalid_argument("network: conv/dense layers need positive widths");
    if (l.kind == LayerKind::Softmax && i + 1 != layers.size())
      throw std::invalid_argument("network: softmax must be the last layer");
    params += layer_param_count(l);
  }
  if (params == 0) throw std::invalid_argument("network: no parameterized layer");
}

size_t NetworkSpec::param_count() const {
  size_t n = 0;
  for (const LayerSpec& l : layers) n += layer_param_count(l);
  return n;
}

std::string NetworkSpec::to_json() const {
  json layers_json = json::array();
  for (const LayerSpec& l : layers)
    layers_json.push_back(
        {{"kind", layer_kind_name(l.kind)}, {"in", l.in_ch}, {"out", l.out_ch}});
  json j = {{"input_channels", input_channels}, {"layers", std::move(layers_json)}};
  return j.dump();
}

NetworkSpec NetworkSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  NetworkSpec s;
  s.input_channels = j.at("input_channels").get<int>();
  for (const auto& l : j.at("layers"))
    s.layers.push_back({layer_kind_from_name(l.at("kind").get<std::string>()),
                        l.at("in").get<int>(), l.at("out").get<int>()});
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Kernels. Every parallel loop writes disjoint output elements with a fixed
// inner summation order, so results are identical for any thread count.
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void conv3x3_forward_t(const TensorT<T>& in, const T* w, const T* b, int out_ch,
                       TensorT<T>& out) {
  const int h = in.height(), wdt = in.width(), ic = in.channels();
  out = TensorT<T>::image2d(h, wdt, out_ch);
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wdt; ++x) {
      for (int oc = 0; oc < out_ch; ++oc) {
        T sum = b[oc];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = x + kx - 1;
            if (ix < 0 || ix >= wdt) continue;
            const T* wp = w + ((static_cast<size_t>(oc) * 3 + ky) * 3 + kx) * ic;
            const T* xp = &in.data[(static_cast<size_t>(iy) * wdt + ix) * ic];
            for (int c = 0; c < ic; ++c) sum += wp[c] * xp[c];
          }
        }
        out.data[(static_cast<size_t>(y) * wdt + x) * out_ch + oc] = sum;
      }
    }
  }
}

template <typename T>
void conv3x3_backward_t(const TensorT<T>& in, const T* w, int out_ch,
                        const TensorT<T>& gout, T* gw, T* gb, TensorT<T>* gin) {
  const int h = in.height(), wdt = in.width(), ic = in.channels();
  // dL/dW and dL/db: one thread per output channel.
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int oc = 0; oc < out_ch; ++oc) {
    T bsum = T(0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < wdt; ++x)
        bsum += gout.data[(static_cast<size_t>(y) * wdt + x) * out_ch + oc];
    gb[oc] += bsum;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* gwp = gw + ((static_cast<size_t>(oc) * 3 + ky) * 3 + kx) * ic;
        for (int y = 0; y < h; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int x = 0; x < wdt; ++x) {
            const int ix = x + kx - 1;
            if (ix < 0 || ix >= wdt) continue;
            const T g = gout.data[(static_cast<size_t>(y) * wdt + x) * out_ch + oc];
            const T* xp = &in.data[(static_cast<size_t>(iy) * wdt + ix) * ic];
            for (int c = 0; c < ic; ++c) gwp[c] += g * xp[c];
          }
        }
      }
    }
  }
  if (!gin) return;
  *gin = TensorT<T>::image2d(h, wdt, ic);
  // dL/dX as a gather over output positions.
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < wdt; ++ix) {
      T* gp = &gin->data[(static_cast<size_t>(iy) * wdt + ix) * ic];
      for (int ky = 0; ky < 3; ++ky) {
        const int y = iy - ky + 1;
        if (y < 0 || y >= h) continue;
        for (int kx = 0; kx < 3; ++kx) {
          const int x = ix - kx + 1;
          if (x < 0 || x >= wdt) continue;
          const T* gop = &gout.data[(static_cast<size_t>(y) * wdt + x) * out_ch];
          for (int oc = 0; oc < out_ch; ++oc) {
            const T* wp = w + ((static_cast<size_t>(oc) * 3 + ky) * 3 + kx) * ic;
            const T g = gop[oc];
            for (int c = 0; c < ic; ++c) gp[c] += g * wp[c];
          }
        }
      }
    }
  }
}

template <typename T>
void maxpool2_forward_t(const TensorT<T>& in, TensorT<T>& out, std::vector<int64_t>& argmax) {
  const int h = in.height(), w = in.width(), c = in.channels();
  if (h % 2 != 0 || w % 2 != 0)
    throw std::invalid_argument("maxpool2 requires even spatial extents");
  out = TensorT<T>::image2d(h / 2, w / 2, c);
  argmax.assign(out.data.size(), -1);
  for (int oy = 0; oy < h / 2; ++oy) {
    for (int ox = 0; ox < w / 2; ++ox) {
      for (int ch = 0; ch < c; ++ch) {
        T best = -std::numeric_limits<T>::infinity();
        int64_t best_idx = -1;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            int64_t idx = ((static_cast<int64_t>(oy) * 2 + dy) * w + ox * 2 + dx) * c + ch;
            if (in.data[idx] > best) {
              best = in.data[idx];
              best_idx = idx;
            }
          }
        }
        int64_t oidx = (static_cast<int64_t>(oy) * (w / 2) + ox) * c + ch;
        out.data[oidx] = best;
        argmax[oidx] = best_idx;
      }
    }
  }
}

template <typename T>
void dense_forward_t(const TensorT<T>& in, const T* w, const T* b, int out_n,
                     TensorT<T>& out) {
  const int64_t n = in.element_count();
  out = TensorT<T>::image2d(1, 1, out_n);
  for (int o = 0; o < out_n; ++o) {
    T sum = b[o];
    const T* wp = w + static_cast<size_t>(o) * n;
    for (int64_t i = 0; i < n; ++i) sum += wp[i] * in.data[i];
    out.data[o] = sum;
  }
}

template <typename T>
void softmax_channelwise_t(TensorT<T>& t) {
  const int c = t.channels();
  const int64_t npix = t.pixel_count();
  for (int64_t p = 0; p < npix; ++p) {
    T* v = &t.data[p * c];
    T mx = v[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, v[i]);
    T sum = T(0);
    for (int i = 0; i < c; ++i) {
      v[i] = std::exp(v[i] - mx);
      sum += v[i];
    }
    for (int i = 0; i < c; ++i) v[i] /= sum;
  }
}

}  // namespace

void conv3x3_forward_kernel(const TensorT<float>& in, const float* w, const float* b,
                            int out_ch, TensorT<float>& out) {
  conv3x3_forward_t(in, w, b, out_ch, out);
}

namespace ref {

void conv3x3_forward(const TensorT<float>& in, const float* w, const float* b, int out_ch,
                     TensorT<float>& out) {
  const int h = in.height(), wdt = in.width(), ic = in.channels();
  out = TensorT<float>::image2d(h, wdt, out_ch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < wdt; ++x) {
      for (int oc = 0; oc < out_ch; ++oc) {
        float sum = b[oc];
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= h) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = x + kx - 1;
            if (ix < 0 || ix >= wdt) continue;
            const float* wp = w + ((static_cast<size_t>(oc) * 3 + ky) * 3 + kx) * ic;
            const float* xp = &in.data[(static_cast<size_t>(iy) * wdt + ix) * ic];
            for (int c = 0; c < ic; ++c) sum += wp[c] * xp[c];
          }
        }
        out.data[(static_cast<size_t>(y) * wdt + x) * out_ch + oc] = sum;
      }
    }
  }
}

}  // namespace ref

// ---------------------------------------------------------------------------
// Network
// ---------------------------------------------------------------------------

template <typename T>
Network<T>::Network(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  offsets_.clear();
  size_t total = 0;
  for (const LayerSpec& l : spec_.layers) {
    offsets_.push_back(total);
    total += layer_param_count(l);
  }
  params_.assign(total, T(0));
}

template <typename T>
void Network<T>::init_he(SeededRng& rng) {
  for (size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    size_t n = layer_param_count(l);
    if (n == 0) continue;
    int fan_in = l.kind == LayerKind::Conv3x3 ? 9 * l.in_ch : l.in_ch;
    double limit = std::sqrt(6.0 / fan_in);
    size_t weights = n - static_cast<size_t>(l.out_ch);
    for (size_t k = 0; k < weights; ++k)
      params_[offsets_[i] + k] = static_cast<T>((2.0 * rng.uniform_real() - 1.0) * limit);
    for (size_t k = weights; k < n; ++k) params_[offsets_[i] + k] = T(0);
  }
}

template <typename T>
TensorT<T> Network<T>::forward_logits(const TensorT<T>& input, ForwardCache<T>* cache) const {
  if (input.channels() != spec_.input_channels)
    throw std::invalid_argument("network: input channel mismatch");
  TensorT<T> act = input;
  if (cache) {
    cache->inputs.clear();
    cache->pool_argmax.clear();
  }
  for (size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    if (l.kind == LayerKind::Softmax) break;  // logits end here
    if (cache) cache->inputs.push_back(act);
    const T* w = params_.data() + offsets_[i];
    switch (l.kind) {
      case LayerKind::Conv3x3: {
        if (act.channels() != l.in_ch)
          throw std::invalid_argument("network: conv channel mismatch");
        TensorT<T> out;
        conv3x3_forward_t(act, w, w + static_cast<size_t>(9) * l.in_ch * l.out_ch, l.out_ch,
                          out);
        act = std::move(out);
        break;
      }
      case LayerKind::Relu: {
        for (T& v : act.data) v = v > T(0) ? v : T(0);
        break;
      }
      case LayerKind::MaxPool2: {
        TensorT<T> out;
        std::vector<int64_t> argmax;
        maxpool2_forward_t(act, out, argmax);
        if (cache) cache->pool_argmax.push_back(std::move(argmax));
        act = std::move(out);
        break;
      }
      case LayerKind::Upsample2: {
        const int h = act.height(), wd = act.width(), c = act.channels();
        TensorT<T> out = TensorT<T>::image2d(h * 2, wd * 2, c);
        for (int y = 0; y < h * 2; ++y)
          for (int x = 0; x < wd * 2; ++x)
            for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = act.at(y / 2, x / 2, ch);
        act = std::move(out);
        break;
      }
      case LayerKind::Dense: {
        if (act.element_count() != l.in_ch)
          throw std::invalid_argument("network: dense input size mismatch");
        TensorT<T> out;
        dense_forward_t(act, w, w + static_cast<size_t>(l.in_ch) * l.out_ch, l.out_ch, out);
        act = std::move(out);
        break;
      }
      case LayerKind::Softmax:
        break;
    }
  }
  return act;
}

template <typename T>
TensorT<T> Network<T>::forward(const TensorT<T>& input) const {
  TensorT<T> logits = forward_logits(input, nullptr);
  if (!spec_.layers.empty() && spec_.layers.back().kind == LayerKind::Softmax)
    softmax_channelwise_t(logits);
  return logits;
}

template <typename T>
void Network<T>::backward(const ForwardCache<T>& cache, const TensorT<T>& grad_logits,
                          std::vector<T>& param_grads, TensorT<T>* grad_input) const {
  if (cache.inputs.empty())
    throw std::logic_error("network: backward called before forward");
  if (param_grads.size() != params_.size())
    throw std::invalid_argument("network: gradient buffer size mismatch");
  size_t layer_count = cache.inputs.size();
  size_t pool_cursor = cache.pool_argmax.size();
  TensorT<T> grad = grad_logits;
  for (size_t ri = layer_count; ri-- > 0;) {
    const LayerSpec& l = spec_.layers[ri];
    const TensorT<T>& in = cache.inputs[ri];
    T* gw = param_grads.data() + offsets_[ri];
    const T* w = params_.data() + offsets_[ri];
    switch (l.kind) {
      case LayerKind::Conv3x3: {
        TensorT<T> gin;
        bool need_gin = ri > 0 || grad_input != nullptr;
        conv3x3_backward_t(in, w, l.out_ch, grad,
                           gw, gw + static_cast<size_t>(9) * l.in_ch * l.out_ch,
                           need_gin ? &gin : nullptr);
        if (need_gin) grad = std::move(gin);
        break;
      }
      case LayerKind::Relu: {
        for (size_t i = 0; i < grad.data.size(); ++i)
          if (in.data[i] <= T(0)) grad.data[i] = T(0);
        break;
      }
      case LayerKind::MaxPool2: {
        const std::vector<int64_t>& argmax = cache.pool_argmax[--pool_cursor];
        TensorT<T> gin(in.shape, T(0));
        for (size_t i = 0; i < grad.data.size(); ++i) gin.data[argmax[i]] += grad.data[i];
        grad = std::move(gin);
        break;
      }
      case LayerKind::Upsample2: {
        const int h = in.height(), wd = in.width(), c = in.channels();
        TensorT<T> gin(in.shape, T(0));
        for (int y = 0; y < h * 2; ++y)
          for (int x = 0; x < wd * 2; ++x)
            for (int ch = 0; ch < c; ++ch) gin.at(y / 2, x / 2, ch) += grad.at(y, x, ch);
        grad = std::move(gin);
        break;
      }
      case LayerKind::Dense: {
        const int64_t n = in.element_count();
        T* gb = gw + static_cast<size_t>(l.in_ch) * l.out_ch;
        TensorT<T> gin(in.shape, T(0));
        for (int o = 0; o < l.out_ch; ++o) {
          const T g = grad.data[o];
          gb[o] += g;
          T* gwp = gw + static_cast<size_t>(o) * n;
          const T* wp = w + static_cast<size_t>(o) * n;
          for (int64_t i = 0; i < n; ++i) {
            gwp[i] += g * in.data[i];
            gin.data[i] += g * wp[i];
          }
        }
        grad = std::move(gin);
        break;
      }
      case LayerKind::Softmax:
        break;
    }
  }
  if (grad_input) *grad_input = std::move(grad);
}

template class Network<float>;
template class Network<double>;

template <typename T>
T spatial_cross_entropy(const TensorT<T>& logits, const LabelMap& label,
                        TensorT<T>* grad_logits) {
  if (logits.spatial_shape() != label.shape)
    throw std::invalid_argument("cross entropy: logit/label shape mismatch");
  const int c = logits.channels();
  const int64_t npix = logits.pixel_count();
  if (grad_logits) *grad_logits = TensorT<T>(logits.shape, T(0));
  double total = 0.0;
  for (int64_t p = 0; p < npix; ++p) {
    int32_t truth = label.data[p];
    if (truth < 0 || truth >= c)
      throw std::invalid_argument("cross entropy: label id out of range");
    const T* v = &logits.data[p * c];
    T mx = v[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, v[i]);
    T sum = T(0);
    for (int i = 0; i < c; ++i) sum += std::exp(v[i] - mx);
    total += -(static_cast<double>(v[truth] - mx) - std::log(static_cast<double>(sum)));
    if (grad_logits) {
      T* g = &grad_logits->data[p * c];
      for (int i = 0; i < c; ++i) {
        T soft = std::exp(v[i] - mx) / sum;
        g[i] = (soft - (i == truth ? T(1) : T(0))) / static_cast<T>(npix);
      }
    }
  }
  return static_cast<T>(total / static_cast<double>(npix));
}

template float spatial_cross_entropy<float>(const TensorT<float>&, const LabelMap&,
                                            TensorT<float>*);
template double spatial_cross_entropy<double>(const TensorT<double>&, const LabelMap&,
                                              TensorT<double>*);

template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw std::invalid_argument("adam: buffer size mismatch");
  for (T g : grads)
    if (!std::isfinite(static_cast<double>(g)))
      throw std::runtime_error("adam: non-finite gradient encountered");
  state.t += 1;
  const double b1 = state.beta1, b2 = state.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    double g = static_cast<double>(grads[i]);
    double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
    double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
    state.m[i] = static_cast<T>(m);
    state.v[i] = static_cast<T>(v);
    double mhat = m / bc1, vhat = v / bc2;
    params[i] = static_cast<T>(static_cast<double>(params[i]) -
                               state.lr * mhat / (std::sqrt(vhat) + state.eps));
  }
}

template void adam_step<float>(std::vector<float>&, const std::vector<float>&,
                               AdamState<float>&);
template void adam_step<double>(std::vector<double>&, const std::vector<double>&,
                                AdamState<double>&);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {
constexpr char kCkptMagic[8] = {'S', 'P', 'D', 'A', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("checkpoint truncated");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  json header = json::parse(ckpt.spec_json);
  json buffers = json::array();
  for (size_t i = 0; i < ckpt.buffers.size(); ++i)
    buffers.push_back({{"name", ckpt.buffer_names[i]}, {"len", ckpt.buffers[i].size()}});
  header["buffers"] = std::move(buffers);
  header["step"] = ckpt.step;
  std::string text = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot create checkpoint " + path.string());
  os.write(kCkptMagic, 8);
  put_u32(os, ckpt.version);
  put_u32(os, static_cast<uint32_t>(text.size()));
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& buf : ckpt.buffers)
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * 4));
  if (!os) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path.string());
  Checkpoint ckpt;
  ckpt.version = get_u32(is);
  uint32_t len = get_u32(is);
  std::string text(len, '\0');
  is.read(text.data(), len);
  if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
  json header = json::parse(text);
  ckpt.step = header.value("step", int64_t{0});
  for (const auto& b : header.at("buffers")) {
    ckpt.buffer_names.push_back(b.at("name").get<std::string>());
    std::vector<float> buf(b.at("len").get<size_t>());
    is.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * 4));
    if (!is) throw std::runtime_error("checkpoint truncated: " + path.string());
    ckpt.buffers.push_back(std::move(buf));
  }
  header.erase("buffers");
  header.erase("step");
  ckpt.spec_json = header.dump();
  return ckpt;
}

Checkpoint make_fcn_checkpoint(const Network<float>& net, const AdamState<float>* adam,
                               int64_t step) {
  Checkpoint ckpt;
  json spec = {{"kind", "fcn"}, {"net", json::parse(net.spec().to_json())}};
  if (adam) {
    spec["adam"] = {{"t", adam->t}, {"lr", adam->lr}};
  }
  ckpt.spec_json = spec.dump();
  ckpt.step = step;
  ckpt.buffer_names.push_back("params");
  ckpt.buffers.push_back(net.params());
  if (adam) {
    ckpt.buffer_names.push_back("adam_m");
    ckpt.buffers.push_back(adam->m);
    ckpt.buffer_names.push_back("adam_v");
    ckpt.buffers.push_back(adam->v);
  }
  return ckpt;
}

Network<float> network_from_checkpoint(const Checkpoint& ckpt, AdamState<float>* adam) {
  json spec = json::parse(ckpt.spec_json);
  if (spec.at("kind").get<std::string>() != "fcn")
    throw std::runtime_error("checkpoint does not hold an FCN");
  Network<float> net(NetworkSpec::from_json(spec.at("net").dump()));
  bool have_params = false;
  for (size_t i = 0; i < ckpt.buffer_names.size(); ++i) {
    if (ckpt.buffer_names[i] == "params") {
      if (ckpt.buffers[i].size() != net.param_count())
        throw std::runtime_error("checkpoint parameter count mismatch");
      net.params() = ckpt.buffers[i];
      have_params = true;
    } else if (adam && ckpt.buffer_names[i] == "adam_m") {
      adam->m = ckpt.buffers[i];
    } else if (adam && ckpt.buffer_names[i] == "adam_v") {
      adam->v = ckpt.buffers[i];
    }
  }
  if (!have_params) throw std::runtime_error("checkpoint missing params buffer");
  if (adam && spec.contains("adam")) {
    adam->t = spec["adam"].at("t").get<int64_t>();
    adam->lr = spec["adam"].at("lr").get<double>();
  }
  return net;
}

}  // namespace spda
