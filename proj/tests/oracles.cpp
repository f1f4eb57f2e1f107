#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

struct Grid {
  int dim;
  std::array<int, 3> ext;
  int64_t npix;
};

Grid grid_of(const std::vector<int>& spatial) {
  Grid g;
  g.dim = static_cast<int>(spatial.size());
  g.ext = {1, 1, 1};
  g.npix = 1;
  for (int a = 0; a < g.dim; ++a) {
    g.ext[a] = spatial[a];
    g.npix *= spatial[a];
  }
  return g;
}

int64_t flat(const Grid& g, const std::array<int, 3>& c) {
  int64_t p = c[0];
  for (int a = 1; a < g.dim; ++a) p = p * g.ext[a] + c[a];
  return p;
}

std::array<int, 3> unflat(const Grid& g, int64_t p) {
  std::array<int, 3> c = {0, 0, 0};
  for (int a = g.dim - 1; a >= 0; --a) {
    c[a] = static_cast<int>(p % g.ext[a]);
    p /= g.ext[a];
  }
  return c;
}

double gradient_at(const Grid& g, const std::vector<double>& feat, int fc,
                   std::array<int, 3> c) {
  double total = 0.0;
  for (int a = 0; a < g.dim; ++a) {
    std::array<int, 3> lo = c, hi = c;
    lo[a] = std::max(0, c[a] - 1);
    hi[a] = std::min(g.ext[a] - 1, c[a] + 1);
    for (int ch = 0; ch < fc; ++ch) {
      double d = feat[flat(g, hi) * fc + ch] - feat[flat(g, lo) * fc + ch];
      total += d * d;
    }
  }
  return total;
}

struct Center {
  std::array<double, 3> pos;
  std::vector<double> feat;
};

}  // namespace

spda::CellMap slic_lloyd(const spda::Tensor& image, const spda::SlicParams& params) {
  const Grid g = grid_of(image.spatial_shape());
  const int fc = image.channels();
  if (fc == 3 && !image.is_3d())
    throw std::invalid_argument("oracle: grayscale/intensity features only");

  std::vector<double> feat(image.data.size());
  for (size_t i = 0; i < feat.size(); ++i)
    feat[i] = static_cast<double>(static_cast<float>(image.data[i] * 100.0f));

  const double step = std::pow(static_cast<double>(g.npix) / params.s, 1.0 / g.dim);

  // Candidate per-axis counts: floor/ceil of extent/step; score by cell-count
  // error, then cell isotropy, then seed-feature spread, then prefer splits
  // along the fastest-varying axis.
  std::array<std::vector<int>, 3> cand;
  for (int a = 0; a < g.dim; ++a) {
    int lo = std::min(g.ext[a], std::max(1, static_cast<int>(std::floor(g.ext[a] / step))));
    int hi = std::min(g.ext[a], std::max(1, static_cast<int>(std::ceil(g.ext[a] / step))));
    cand[a].push_back(lo);
    if (hi != lo) cand[a].push_back(hi);
  }
  std::array<int, 3> counts = {1, 1, 1};
  {
    struct Score {
      double err, aniso, neg_var;
      std::array<int, 3> tie;
      bool operator<(const Score& o) const {
        if (err != o.err) return err < o.err;
        if (aniso != o.aniso) return aniso < o.aniso;
        if (neg_var != o.neg_var) return neg_var < o.neg_var;
        return tie < o.tie;
      }
    };
    bool have = false;
    Score best_score{};
    std::array<size_t, 3> pick = {0, 0, 0};
    while (true) {
      std::array<int, 3> n = {1, 1, 1};
      for (int a = 0; a < g.dim; ++a) n[a] = cand[a][pick[a]];
      int64_t product = 1;
      for (int a = 0; a < g.dim; ++a) product *= n[a];
      double mx = 0.0, mn = std::numeric_limits<double>::infinity();
      for (int a = 0; a < g.dim; ++a) {
        double sz = static_cast<double>(g.ext[a]) / n[a];
        mx = std::max(mx, sz);
        mn = std::min(mn, sz);
      }
      double var = 0.0;
      {
        std::vector<int64_t> seeds;
        std::array<int, 3> idx = {0, 0, 0};
        while (true) {
          std::array<int, 3> px = {0, 0, 0};
          for (int a = 0; a < g.dim; ++a) {
            double pos = (idx[a] + 0.5) * static_cast<double>(g.ext[a]) / n[a];
            px[a] = std::clamp(static_cast<int>(std::floor(pos)), 0, g.ext[a] - 1);
          }
          seeds.push_back(flat(g, px));
          int a = g.dim - 1;
          while (a >= 0 && ++idx[a] == n[a]) idx[a--] = 0;
          if (a < 0) break;
        }
        for (int ch = 0; ch < fc; ++ch) {
          double s1 = 0.0, s2 = 0.0;
          for (int64_t sp : seeds) {
            double v = feat[sp * fc + ch];
            s1 += v;
            s2 += v * v;
          }
          double m = s1 / seeds.size();
          var += s2 / seeds.size() - m * m;
        }
      }
      Score sc;
      sc.err = std::abs(static_cast<double>(product) - params.s);
      sc.aniso = mx / mn;
      sc.neg_var = -var;
      for (int a = 0; a < g.dim; ++a) sc.tie[a] = -n[g.dim - 1 - a];
      if (!have || sc < best_score) {
        have = true;
        best_score = sc;
        counts = n;
      }
      int a = g.dim - 1;
      while (a >= 0 && ++pick[a] == cand[a].size()) pick[a--] = 0;
      if (a < 0) break;
    }
  }

  // Seeds at grid-cell centers, nudged to the strictly lowest-gradient pixel
  // in the 3x3(x3) neighborhood.
  std::vector<Center> centers;
  {
    std::array<int, 3> idx = {0, 0, 0};
    while (true) {
      Center c;
      c.pos = {0, 0, 0};
      std::array<int, 3> seed = {0, 0, 0};
      for (int a = 0; a < g.dim; ++a) {
        c.pos[a] = (idx[a] + 0.5) * static_cast<double>(g.ext[a]) / counts[a];
        seed[a] = std::clamp(static_cast<int>(std::floor(c.pos[a])), 0, g.ext[a] - 1);
      }
      double best_grad = gradient_at(g, feat, fc, seed);
      std::array<int, 3> best = seed;
      bool moved = false;
      std::array<int, 3> off = {0, 0, 0};
      int lo2 = g.dim == 3 ? -1 : 0, hi2 = g.dim == 3 ? 1 : 0;
      for (off[0] = -1; off[0] <= 1; ++off[0])
        for (off[1] = -1; off[1] <= 1; ++off[1])
          for (off[2] = lo2; off[2] <= hi2; ++off[2]) {
            std::array<int, 3> p = seed;
            bool ok = true;
            for (int a = 0; a < g.dim; ++a) {
              p[a] += off[a];
              ok = ok && p[a] >= 0 && p[a] < g.ext[a];
            }
            if (!ok) continue;
            double grad = gradient_at(g, feat, fc, p);
            if (grad < best_grad) {
              best_grad = grad;
              best = p;
              moved = true;
            }
          }
      std::array<int, 3> fp = moved ? best : seed;
      if (moved)
        for (int a = 0; a < g.dim; ++a) c.pos[a] = best[a] + 0.5;
      c.feat.resize(fc);
      for (int ch = 0; ch < fc; ++ch) c.feat[ch] = feat[flat(g, fp) * fc + ch];
      centers.push_back(std::move(c));
      int a = g.dim - 1;
      while (a >= 0 && ++idx[a] == counts[a]) idx[a--] = 0;
      if (a < 0) break;
    }
  }

  const double spatial_weight =
      params.compactness * params.compactness / (step * step);
  const int k = static_cast<int>(centers.size());
  auto dist2 = [&](int64_t p, const std::array<int, 3>& c, int ci) {
    double dc = 0.0;
    for (int ch = 0; ch < fc; ++ch) {
      double d = feat[p * fc + ch] - centers[ci].feat[ch];
      dc += d * d;
    }
    double ds = 0.0;
    for (int a = 0; a < g.dim; ++a) {
      double d = (c[a] + 0.5) - centers[ci].pos[a];
      ds += d * d;
    }
    return dc + spatial_weight * ds;
  };

  std::vector<int32_t> labels(static_cast<size_t>(g.npix), -1);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    for (int64_t p = 0; p < g.npix; ++p) {
      std::array<int, 3> c = unflat(g, p);
      double best_d = std::numeric_limits<double>::infinity();
      int best_i = -1;
      for (int ci = 0; ci < k; ++ci) {
        bool inside = true;
        for (int a = 0; a < g.dim; ++a)
          if (std::abs(centers[ci].pos[a] - (c[a] + 0.5)) > step) {
            inside = false;
            break;
          }
        if (!inside) continue;
        double d = dist2(p, c, ci);
        if (d < best_d || (d == best_d && ci < best_i)) {
          best_d = d;
          best_i = ci;
        }
      }
      if (labels[p] >= 0) {
        double d = dist2(p, c, labels[p]);
        if (d < best_d || (d == best_d && labels[p] < best_i)) {
          best_d = d;
          best_i = labels[p];
        }
      }
      if (best_i < 0) {
        for (int ci = 0; ci < k; ++ci) {
          double d = dist2(p, c, ci);
          if (d < best_d || (d == best_d && ci < best_i)) {
            best_d = d;
            best_i = ci;
          }
        }
      }
      labels[p] = best_i;
    }
    // mean update in row-major member order
    std::vector<std::array<double, 3>> pos_sum(k, {0, 0, 0});
    std::vector<std::vector<double>> feat_sum(k, std::vector<double>(fc, 0.0));
    std::vector<int64_t> count(k, 0);
    for (int64_t p = 0; p < g.npix; ++p) {
      std::array<int, 3> c = unflat(g, p);
      int ci = labels[p];
      count[ci]++;
      for (int a = 0; a < g.dim; ++a) pos_sum[ci][a] += c[a] + 0.5;
      for (int ch = 0; ch < fc; ++ch) feat_sum[ci][ch] += feat[p * fc + ch];
    }
    for (int ci = 0; ci < k; ++ci) {
      if (count[ci] == 0) continue;
      for (int a = 0; a < g.dim; ++a) centers[ci].pos[a] = pos_sum[ci][a] / count[ci];
      for (int ch = 0; ch < fc; ++ch) centers[ci].feat[ch] = feat_sum[ci][ch] / count[ci];
    }
  }

  spda::CellMap out;
  out.shape = image.spatial_shape();
  out.cell_ids.assign(static_cast<size_t>(g.npix), -1);
  std::vector<int32_t> remap(k, -1);
  int32_t next = 0;
  for (int64_t p = 0; p < g.npix; ++p) {
    if (remap[labels[p]] < 0) remap[labels[p]] = next++;
    out.cell_ids[p] = remap[labels[p]];
  }
  out.num_cells = next;
  return out;
}

double cross_entropy_scalar(const std::vector<double>& logits, int channels,
                            const std::vector<int32_t>& labels) {
  const size_t npix = labels.size();
  double total = 0.0;
  for (size_t p = 0; p < npix; ++p) {
    double mx = logits[p * channels];
    for (int c = 1; c < channels; ++c) mx = std::max(mx, logits[p * channels + c]);
    double z = 0.0;
    for (int c = 0; c < channels; ++c) z += std::exp(logits[p * channels + c] - mx);
    total += -(logits[p * channels + labels[p]] - mx - std::log(z));
  }
  return total / static_cast<double>(npix);
}

std::vector<double> finite_difference(std::vector<double>& params,
                                      const std::function<double()>& f, double h) {
  std::vector<double> grad(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    double saved = params[i];
    params[i] = saved + h;
    double up = f();
    params[i] = saved - h;
    double down = f();
    params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& fd,
                     double scale) {
  double worst = 0.0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), scale});
    worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
  }
  return worst;
}

bool is_connected_partition(const spda::CellMap& cells) {
  const Grid g = grid_of(cells.shape);
  if (cells.num_cells < 1) return false;
  std::vector<int64_t> seen_first(cells.num_cells, -1);
  std::vector<bool> visited(static_cast<size_t>(g.npix), false);
  std::vector<int64_t> stack;
  int components = 0;
  for (int64_t p = 0; p < g.npix; ++p) {
    int32_t id = cells.cell_ids[p];
    if (id < 0 || id >= cells.num_cells) return false;
    if (visited[p]) continue;
    if (seen_first[id] >= 0) return false;  // second component of this id
    seen_first[id] = p;
    components++;
    stack.push_back(p);
    visited[p] = true;
    while (!stack.empty()) {
      int64_t q = stack.back();
      stack.pop_back();
      std::array<int, 3> c = unflat(g, q);
      for (int a = 0; a < g.dim; ++a) {
        for (int d = -1; d <= 1; d += 2) {
          std::array<int, 3> nc = c;
          nc[a] += d;
          if (nc[a] < 0 || nc[a] >= g.ext[a]) continue;
          int64_t np = flat(g, nc);
          if (!visited[np] && cells.cell_ids[np] == id) {
            visited[np] = true;
            stack.push_back(np);
          }
        }
      }
    }
  }
  return components == cells.num_cells;
}

}  // namespace oracle
