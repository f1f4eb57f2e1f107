#include "spda/slic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "spda/image_io.hpp"
#include "spda/parallel.hpp"
#include "spda/slic_detail.hpp"

namespace spda {

namespace {

double srgb_linearize(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t)
                                   : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

Tensor to_lab(const Tensor& rgb) {
  if (rgb.is_3d() || rgb.channels() != 3)
    throw std::invalid_argument("to_lab expects a 2D 3-channel image");
  Tensor lab = rgb;
  const int64_t npix = rgb.pixel_count();
  for (int64_t p = 0; p < npix; ++p) {
    double r = srgb_linearize(rgb.data[p * 3 + 0]);
    double g = srgb_linearize(rgb.data[p * 3 + 1]);
    double b = srgb_linearize(rgb.data[p * 3 + 2]);
    double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    double fx = lab_f(x / 0.95047), fy = lab_f(y), fz = lab_f(z / 1.08883);
    lab.data[p * 3 + 0] = static_cast<float>(116.0 * fy - 16.0);
    lab.data[p * 3 + 1] = static_cast<float>(500.0 * (fx - fy));
    lab.data[p * 3 + 2] = static_cast<float>(200.0 * (fy - fz));
  }
  return lab;
}

std::vector<float> slic_features(const Tensor& image, int* feature_channels) {
  const int c = image.channels();
  if (feature_channels) *feature_channels = c;
  if (!image.is_3d() && c == 3) {
    Tensor lab = to_lab(image);
    return lab.data;
  }
  // Intensity x 100 per channel keeps gray features on the L-channel scale.
  std::vector<float> f(image.data.size());
  for (size_t i = 0; i < f.size(); ++i) f[i] = image.data[i] * 100.0f;
  return f;
}

namespace detail {

SpatialGrid grid_of(const std::vector<int>& spatial) {
  if (spatial.size() != 2 && spatial.size() != 3)
    throw std::invalid_argument("spatial rank must be 2 or 3");
  SpatialGrid g;
  g.dim = static_cast<int>(spatial.size());
  g.npix = 1;
  g.ext = {1, 1, 1};
  for (int i = 0; i < g.dim; ++i) {
    g.ext[i] = spatial[i];
    g.npix *= spatial[i];
  }
  return g;
}

double pixel_gradient(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                      const int* coord) {
  // Sum of squared central differences over axes and feature channels,
  // clamped at the borders.
  double total = 0.0;
  int lo[3], hi[3];
  for (int a = 0; a < g.dim; ++a) {
    for (int b = 0; b < g.dim; ++b) lo[b] = hi[b] = coord[b];
    lo[a] = std::max(0, coord[a] - 1);
    hi[a] = std::min(g.ext[a] - 1, coord[a] + 1);
    int64_t pl = pixel_index(g, lo), ph = pixel_index(g, hi);
    for (int ch = 0; ch < fc; ++ch) {
      double d = static_cast<double>(feat[ph * fc + ch]) - feat[pl * fc + ch];
      total += d * d;
    }
  }
  return total;
}

GridChoice choose_grid_counts(const SpatialGrid& g, int s, const std::vector<float>& feat,
                              int fc) {
  const double step = std::pow(static_cast<double>(g.npix) / s, 1.0 / g.dim);
  std::array<std::vector<int>, 3> cand;
  for (int a = 0; a < g.dim; ++a) {
    int lo = std::max(1, static_cast<int>(std::floor(g.ext[a] / step)));
    int hi = std::max(1, static_cast<int>(std::ceil(g.ext[a] / step)));
    lo = std::min(lo, g.ext[a]);
    hi = std::min(hi, g.ext[a]);
    cand[a].push_back(lo);
    if (hi != lo) cand[a].push_back(hi);
  }

  GridChoice best;
  double best_err = std::numeric_limits<double>::infinity();
  double best_aniso = 0.0, best_var = 0.0;
  std::array<int, 3> best_tie = {0, 0, 0};

  std::array<int, 3> n = {1, 1, 1};
  std::array<size_t, 3> pick = {0, 0, 0};
  while (true) {
    for (int a = 0; a < g.dim; ++a) n[a] = cand[a][pick[a]];
    int64_t product = 1;
    for (int a = 0; a < g.dim; ++a) product *= n[a];

    double err = std::abs(static_cast<double>(product) - s);
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (int a = 0; a < g.dim; ++a) {
      double sz = static_cast<double>(g.ext[a]) / n[a];
      mx = std::max(mx, sz);
      mn = std::min(mn, sz);
    }
    double aniso = mx / mn;

    // Spread of the features sampled at the candidate seed pixels; a larger
    // spread means the seeds straddle more of the image structure.
    double var = 0.0;
    {
      std::vector<int64_t> seeds;
      std::array<int, 3> idx = {0, 0, 0};
      bool more = true;
      while (more) {
        int coord[3];
        for (int a = 0; a < g.dim; ++a) {
          double pos = (idx[a] + 0.5) * static_cast<double>(g.ext[a]) / n[a];
          coord[a] = std::clamp(static_cast<int>(std::floor(pos)), 0, g.ext[a] - 1);
        }
        seeds.push_back(pixel_index(g, coord));
        int a = g.dim - 1;
        while (a >= 0 && ++idx[a] == n[a]) idx[a--] = 0;
        more = a >= 0;
      }
      for (int ch = 0; ch < fc; ++ch) {
        double sum = 0.0, sum2 = 0.0;
        for (int64_t sp : seeds) {
          double v = feat[sp * fc + ch];
          sum += v;
          sum2 += v * v;
        }
        double m = sum / seeds.size();
        var += sum2 / seeds.size() - m * m;
      }
    }

    // Prefer splitting the fastest-varying axis when everything else ties.
    std::array<int, 3> tie = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) tie[a] = -n[g.dim - 1 - a];

    bool better = false;
    if (err != best_err) {
      better = err < best_err;
    } else if (aniso != best_aniso) {
      better = aniso < best_aniso;
    } else if (var != best_var) {
      better = var > best_var;
    } else {
      better = tie < best_tie;
    }
    if (better) {
      best.counts = n;
      best_err = err;
      best_aniso = aniso;
      best_var = var;
      best_tie = tie;
    }

    int a = g.dim - 1;
    while (a >= 0 && ++pick[a] == cand[a].size()) pick[a--] = 0;
    if (a < 0) break;
  }
  best.step = step;
  return best;
}

Centers init_centers(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                     const GridChoice& grid) {
  Centers c;
  c.dim = g.dim;
  c.fc = fc;
  c.k = 1;
  for (int a = 0; a < g.dim; ++a) c.k *= grid.counts[a];
  c.pos.assign(static_cast<size_t>(c.k) * 3, 0.0);
  c.feat.assign(static_cast<size_t>(c.k) * fc, 0.0);

  std::array<int, 3> idx = {0, 0, 0};
  for (int k = 0; k < c.k; ++k) {
    double pos[3];
    int seed[3];
    for (int a = 0; a < g.dim; ++a) {
      pos[a] = (idx[a] + 0.5) * static_cast<double>(g.ext[a]) / grid.counts[a];
      seed[a] = std::clamp(static_cast<int>(std::floor(pos[a])), 0, g.ext[a] - 1);
    }

    // Nudge to the strictly lowest-gradient pixel in the 3x3(x3)
    // neighborhood; scan order breaks ties toward the earlier pixel.
    double best_grad = pixel_gradient(g, feat, fc, seed);
    int best[3] = {seed[0], seed[1], seed[2]};
    bool moved = false;
    int off[3];
    for (off[0] = -1; off[0] <= 1; ++off[0]) {
      for (off[1] = -1; off[1] <= 1; ++off[1]) {
        for (off[2] = -1; off[2] <= (g.dim == 3 ? 1 : -1); ++off[2]) {
          int cand[3];
          bool ok = true;
          if (g.dim == 2) {
            cand[0] = seed[0] + off[0];
            cand[1] = seed[1] + off[1];
            cand[2] = 0;
            ok = cand[0] >= 0 && cand[0] < g.ext[0] && cand[1] >= 0 && cand[1] < g.ext[1];
          } else {
            for (int a = 0; a < 3; ++a) {
              cand[a] = seed[a] + off[a];
              ok = ok && cand[a] >= 0 && cand[a] < g.ext[a];
            }
          }
          if (!ok) continue;
          double grad = pixel_gradient(g, feat, fc, cand);
          if (grad < best_grad) {
            best_grad = grad;
            best[0] = cand[0];
            best[1] = cand[1];
            best[2] = cand[2];
            moved = true;
          }
        }
        if (g.dim == 2 && off[1] == 1 && off[0] == 1) break;
      }
    }

    int feature_pixel[3] = {0, 0, 0};
    for (int a = 0; a < g.dim; ++a) {
      feature_pixel[a] = moved ? best[a] : seed[a];
      c.pos[static_cast<size_t>(k) * 3 + a] = moved ? best[a] + 0.5 : pos[a];
    }
    int64_t fp = pixel_index(g, feature_pixel);
    for (int ch = 0; ch < fc; ++ch)
      c.feat[static_cast<size_t>(k) * fc + ch] = feat[fp * fc + ch];

    int a = g.dim - 1;
    while (a >= 0 && ++idx[a] == grid.counts[a]) idx[a--] = 0;
    (void)a;
  }
  return c;
}

double assignment_objective(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                            const Centers& c, double spatial_weight,
                            const std::vector<int32_t>& labels) {
  double total = 0.0;
  int coord[3];
  for (int64_t p = 0; p < g.npix; ++p) {
    coords_of(g, p, coord);
    total += center_distance2(c, labels[p], coord, &feat[p * fc], spatial_weight);
  }
  return total;
}

void update_centers(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                    const std::vector<int32_t>& labels, Centers& c) {
  std::vector<double> pos_sum(static_cast<size_t>(c.k) * 3, 0.0);
  std::vector<double> feat_sum(static_cast<size_t>(c.k) * fc, 0.0);
  std::vector<int64_t> count(c.k, 0);
  int coord[3];
  for (int64_t p = 0; p < g.npix; ++p) {
    coords_of(g, p, coord);
    int32_t k = labels[p];
    count[k]++;
    for (int a = 0; a < g.dim; ++a) pos_sum[static_cast<size_t>(k) * 3 + a] += coord[a] + 0.5;
    for (int ch = 0; ch < fc; ++ch)
      feat_sum[static_cast<size_t>(k) * fc + ch] += feat[p * fc + ch];
  }
  for (int k = 0; k < c.k; ++k) {
    if (count[k] == 0) continue;  // empty cells keep their previous center
    for (int a = 0; a < g.dim; ++a)
      c.pos[static_cast<size_t>(k) * 3 + a] = pos_sum[static_cast<size_t>(k) * 3 + a] / count[k];
    for (int ch = 0; ch < fc; ++ch)
      c.feat[static_cast<size_t>(k) * fc + ch] =
          feat_sum[static_cast<size_t>(k) * fc + ch] / count[k];
  }
}

}  // namespace detail

namespace {

using detail::Centers;
using detail::SpatialGrid;

// Bucket grid over center positions with cell size = step; candidates for a
// pixel live in the 3^d neighboring buckets.
struct CenterBuckets {
  std::array<int, 3> nb = {1, 1, 1};
  std::vector<std::vector<int>> cells;
  double step = 1.0;
  int dim = 2;

  void build(const SpatialGrid& g, const Centers& c, double step_) {
    step = step_;
    dim = g.dim;
    int total = 1;
    for (int a = 0; a < g.dim; ++a) {
      nb[a] = std::max(1, static_cast<int>(std::ceil(g.ext[a] / step)));
      total *= nb[a];
    }
    cells.assign(static_cast<size_t>(total), {});
    for (int k = 0; k < c.k; ++k) {
      int idx = 0;
      for (int a = 0; a < g.dim; ++a) {
        int b = std::clamp(static_cast<int>(c.pos[static_cast<size_t>(k) * 3 + a] / step), 0,
                           nb[a] - 1);
        idx = idx * nb[a] + b;
      }
      cells[static_cast<size_t>(idx)].push_back(k);
    }
  }
};

// One assignment sweep. Candidates are the centers within the 2S search
// window (Chebyshev radius = step) plus the pixel's current center; the
// lexicographic (distance, index) argmin makes the result independent of
// enumeration order, so the parallel sweep matches the serial reference
// bit for bit.
void assign_pixels(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                   const Centers& c, const CenterBuckets& buckets, double spatial_weight,
                   std::vector<int32_t>& labels) {
  const double radius = buckets.step;
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int64_t p = 0; p < g.npix; ++p) {
    int coord[3];
    detail::coords_of(g, p, coord);
    const float* f = &feat[p * fc];
    double best_d = std::numeric_limits<double>::infinity();
    int best_i = -1;

    int bidx[3];
    for (int a = 0; a < g.dim; ++a)
      bidx[a] = std::clamp(static_cast<int>((coord[a] + 0.5) / buckets.step), 0,
                           buckets.nb[a] - 1);
    int off[3] = {0, 0, 0};
    for (off[0] = -1; off[0] <= 1; ++off[0]) {
      if (bidx[0] + off[0] < 0 || bidx[0] + off[0] >= buckets.nb[0]) continue;
      for (off[1] = -1; off[1] <= 1; ++off[1]) {
        if (bidx[1] + off[1] < 0 || bidx[1] + off[1] >= buckets.nb[1]) continue;
        int lo2 = g.dim == 3 ? -1 : 0, hi2 = g.dim == 3 ? 1 : 0;
        for (off[2] = lo2; off[2] <= hi2; ++off[2]) {
          if (g.dim == 3 && (bidx[2] + off[2] < 0 || bidx[2] + off[2] >= buckets.nb[2]))
            continue;
          int cell = 0;
          for (int a = 0; a < g.dim; ++a) cell = cell * buckets.nb[a] + bidx[a] + off[a];
          for (int k : buckets.cells[static_cast<size_t>(cell)]) {
            bool in_window = true;
            for (int a = 0; a < g.dim; ++a) {
              double d = std::abs(c.pos[static_cast<size_t>(k) * 3 + a] - (coord[a] + 0.5));
              if (d > radius) {
                in_window = false;
                break;
              }
            }
            if (!in_window) continue;
            double d = detail::center_distance2(c, k, coord, f, spatial_weight);
            if (d < best_d || (d == best_d && k < best_i)) {
              best_d = d;
              best_i = k;
            }
          }
        }
      }
    }

    int32_t cur = labels[p];
    if (cur >= 0) {
      double d = detail::center_distance2(c, cur, coord, f, spatial_weight);
      if (d < best_d || (d == best_d && cur < best_i)) {
        best_d = d;
        best_i = cur;
      }
    }
    if (best_i < 0) {
      for (int k = 0; k < c.k; ++k) {
        double d = detail::center_distance2(c, k, coord, f, spatial_weight);
        if (d < best_d || (d == best_d && k < best_i)) {
          best_d = d;
          best_i = k;
        }
      }
    }
    labels[p] = best_i;
  }
}

CellMap run_slic(const Tensor& image, const SlicParams& params, SlicTrace* trace) {
  const SpatialGrid g = detail::grid_of(image.spatial_shape());
  if (params.s < 1) throw std::invalid_argument("SLIC: s must be >= 1");
  if (params.s > g.npix)
    throw std::invalid_argument("SLIC: s exceeds pixel count");
  if (params.compactness <= 0.0) throw std::invalid_argument("SLIC: compactness must be > 0");
  if (params.max_iters < 1) throw std::invalid_argument("SLIC: max_iters must be >= 1");

  int fc = 0;
  std::vector<float> feat = slic_features(image, &fc);
  detail::GridChoice grid = detail::choose_grid_counts(g, params.s, feat, fc);
  Centers centers = detail::init_centers(g, feat, fc, grid);

  const double spatial_weight =
      params.compactness * params.compactness / (grid.step * grid.step);
  std::vector<int32_t> labels(static_cast<size_t>(g.npix), -1);
  CenterBuckets buckets;
  for (int iter = 0; iter < params.max_iters; ++iter) {
    buckets.build(g, centers, grid.step);
    assign_pixels(g, feat, fc, centers, buckets, spatial_weight, labels);
    if (trace)
      trace->objective.push_back(
          detail::assignment_objective(g, feat, fc, centers, spatial_weight, labels));
    detail::update_centers(g, feat, fc, labels, centers);
    if (trace)
      trace->objective.push_back(
          detail::assignment_objective(g, feat, fc, centers, spatial_weight, labels));
  }

  CellMap raw;
  raw.shape = image.spatial_shape();
  raw.cell_ids = std::move(labels);
  raw.num_cells = centers.k;
  return enforce_connectivity(raw, params);
}

}  // namespace

CellMap slic_segment(const Tensor& image, const SlicParams& params, SeededRng*,
                     SlicTrace* trace) {
  if (image.is_3d())
    throw std::invalid_argument("slic_segment expects a 2D image; use slic_segment_3d");
  return run_slic(image, params, trace);
}

CellMap slic_segment_3d(const Tensor& volume, const SlicParams& params, SeededRng*,
                        SlicTrace* trace) {
  if (!volume.is_3d()) throw std::invalid_argument("slic_segment_3d expects a 3D volume");
  return run_slic(volume, params, trace);
}

CellMap enforce_connectivity(const CellMap& cells, const SlicParams& params) {
  const SpatialGrid g = detail::grid_of(cells.shape);
  const int64_t npix = g.npix;
  const double min_size = params.min_cell_fraction * static_cast<double>(npix) /
                          std::max(1, params.s);

  // Connected components in row-major discovery order.
  std::vector<int32_t> comp_of(static_cast<size_t>(npix), -1);
  struct Comp {
    int32_t input_id;
    int64_t first_pixel;
    int64_t size;
  };
  std::vector<Comp> comps;
  std::vector<int64_t> stack;
  int coord[3], ncoord[3];
  for (int64_t start = 0; start < npix; ++start) {
    if (comp_of[start] >= 0) continue;
    int32_t id = cells.cell_ids[start];
    int32_t ci = static_cast<int32_t>(comps.size());
    comps.push_back({id, start, 0});
    stack.clear();
    stack.push_back(start);
    comp_of[start] = ci;
    while (!stack.empty()) {
      int64_t p = stack.back();
      stack.pop_back();
      comps[ci].size++;
      detail::coords_of(g, p, coord);
      for (int a = 0; a < g.dim; ++a) {
        for (int d = -1; d <= 1; d += 2) {
          for (int b = 0; b < g.dim; ++b) ncoord[b] = coord[b];
          ncoord[a] += d;
          if (ncoord[a] < 0 || ncoord[a] >= g.ext[a]) continue;
          int64_t q = detail::pixel_index(g, ncoord);
          if (comp_of[q] < 0 && cells.cell_ids[q] == id) {
            comp_of[q] = ci;
            stack.push_back(q);
          }
        }
      }
    }
  }
  const int ncomp = static_cast<int>(comps.size());

  // Component adjacency (4-/6-neighborhood).
  std::vector<std::vector<int>> adj(ncomp);
  for (int64_t p = 0; p < npix; ++p) {
    detail::coords_of(g, p, coord);
    for (int a = 0; a < g.dim; ++a) {
      if (coord[a] + 1 >= g.ext[a]) continue;
      for (int b = 0; b < g.dim; ++b) ncoord[b] = coord[b];
      ncoord[a] += 1;
      int64_t q = detail::pixel_index(g, ncoord);
      int c1 = comp_of[p], c2 = comp_of[q];
      if (c1 != c2) {
        adj[c1].push_back(c2);
        adj[c2].push_back(c1);
      }
    }
  }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  // The largest component of each input id is primary; everything else is a
  // fragment. Fragments always merge; a primary merges only when smaller
  // than the minimum size.
  std::vector<int> primary_comp;
  {
    std::vector<int> best;
    for (int c = 0; c < ncomp; ++c) {
      int32_t id = comps[c].input_id;
      if (id >= static_cast<int32_t>(best.size())) best.resize(id + 1, -1);
      int b = best[id];
      if (b < 0 || comps[c].size > comps[b].size ||
          (comps[c].size == comps[b].size && comps[c].first_pixel < comps[b].first_pixel))
        best[id] = c;
    }
    primary_comp = std::move(best);
  }
  std::vector<bool> is_primary(ncomp, false);
  for (int b : primary_comp)
    if (b >= 0) is_primary[b] = true;

  std::vector<int> mergeable;
  for (int c = 0; c < ncomp; ++c)
    if (!is_primary[c] || static_cast<double>(comps[c].size) < min_size)
      mergeable.push_back(c);
  std::sort(mergeable.begin(), mergeable.end(), [&](int a, int b) {
    if (comps[a].size != comps[b].size) return comps[a].size < comps[b].size;
    return comps[a].first_pixel < comps[b].first_pixel;
  });

  // Union-find over components; merge each fragment group into its largest
  // adjacent group (ties toward the earlier group).
  std::vector<int> parent(ncomp);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int64_t> gsize(ncomp), gfirst(ncomp);
  std::vector<bool> has_primary(ncomp);
  std::vector<std::vector<int>> members(ncomp);
  for (int c = 0; c < ncomp; ++c) {
    gsize[c] = comps[c].size;
    gfirst[c] = comps[c].first_pixel;
    has_primary[c] = is_primary[c];
    members[c] = {c};
  }
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };

  for (int c : mergeable) {
    int r = find(c);
    if (has_primary[r] && static_cast<double>(gsize[r]) >= min_size) continue;
    int best = -1;
    for (int m : members[r]) {
      for (int n : adj[m]) {
        int nr = find(n);
        if (nr == r) continue;
        if (best < 0 || gsize[nr] > gsize[best] ||
            (gsize[nr] == gsize[best] && gfirst[nr] < gfirst[best]))
          best = nr;
      }
    }
    if (best < 0) continue;  // the group spans everything reachable
    parent[r] = best;
    gsize[best] += gsize[r];
    gfirst[best] = std::min(gfirst[best], gfirst[r]);
    has_primary[best] = has_primary[best] || has_primary[r];
    if (members[r].size() > members[best].size()) members[r].swap(members[best]);
    members[best].insert(members[best].end(), members[r].begin(), members[r].end());
    members[r].clear();
  }

  // Re-compact ids in row-major first-occurrence order.
  CellMap out;
  out.shape = cells.shape;
  out.cell_ids.assign(static_cast<size_t>(npix), -1);
  std::vector<int32_t> new_id(ncomp, -1);
  int32_t next = 0;
  for (int64_t p = 0; p < npix; ++p) {
    int r = find(comp_of[p]);
    if (new_id[r] < 0) new_id[r] = next++;
    out.cell_ids[p] = new_id[r];
  }
  out.num_cells = next;
  return out;
}

void write_cellmap(const std::filesystem::path& path, const CellMap& cells) {
  std::vector<int> shape = cells.shape;
  shape.push_back(1);
  Tensor t(shape);
  for (size_t i = 0; i < cells.cell_ids.size(); ++i)
    t.data[i] = static_cast<float>(cells.cell_ids[i]);
  write_volume(path, t);
}

CellMap read_cellmap(const std::filesystem::path& path) {
  Tensor t = read_volume(path);
  if (t.channels() != 1) throw std::runtime_error("cell map must have C=1");
  CellMap c;
  c.shape = t.spatial_shape();
  c.cell_ids.resize(t.data.size());
  int32_t mx = -1;
  for (size_t i = 0; i < t.data.size(); ++i) {
    c.cell_ids[i] = static_cast<int32_t>(std::lround(t.data[i]));
    if (c.cell_ids[i] < 0) throw std::runtime_error("negative cell id in " + path.string());
    mx = std::max(mx, c.cell_ids[i]);
  }
  c.num_cells = mx + 1;
  return c;
}

Tensor boundary_overlay(const Tensor& image, const CellMap& cells) {
  if (image.is_3d()) throw std::invalid_argument("boundary_overlay is 2D only");
  if (image.spatial_shape() != cells.shape)
    throw std::invalid_argument("boundary_overlay: shape mismatch");
  const int h = image.height(), w = image.width(), c = image.channels();
  Tensor out = Tensor::image2d(h, w, 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < 3; ++ch)
        out.at(y, x, ch) = image.at(y, x, c == 3 ? ch : 0);
      bool boundary = (x + 1 < w && cells.at(y, x) != cells.at(y, x + 1)) ||
                      (y + 1 < h && cells.at(y, x) != cells.at(y + 1, x));
      if (boundary) {
        out.at(y, x, 0) = 1.0f;
        out.at(y, x, 1) = 0.0f;
        out.at(y, x, 2) = 0.0f;
      }
    }
  }
  return out;
}

}  // namespace spda
