#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "spda/slic.hpp"
#include "spda/slic_detail.hpp"

// Serial reference path: same initialization and update as the production
// kernels, but the assignment sweep scans every center linearly instead of
// going through the bucket grid, and nothing is threaded. Kept for the
// equality tests and the benchmark.

namespace spda::ref {

namespace {

using detail::Centers;
using detail::SpatialGrid;

void assign_serial(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                   const Centers& c, double step, double spatial_weight,
                   std::vector<int32_t>& labels) {
  int coord[3];
  for (int64_t p = 0; p < g.npix; ++p) {
    detail::coords_of(g, p, coord);
    const float* f = &feat[p * fc];
    double best_d = std::numeric_limits<double>::infinity();
    int best_i = -1;
    for (int k = 0; k < c.k; ++k) {
      bool in_window = true;
      for (int a = 0; a < g.dim; ++a) {
        if (std::abs(c.pos[static_cast<size_t>(k) * 3 + a] - (coord[a] + 0.5)) > step) {
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

}  // namespace

CellMap slic_segment(const Tensor& image, const SlicParams& params) {
  const SpatialGrid g = detail::grid_of(image.spatial_shape());
  if (params.s < 1 || params.s > g.npix)
    throw std::invalid_argument("SLIC: s out of range");
  int fc = 0;
  std::vector<float> feat = slic_features(image, &fc);
  detail::GridChoice grid = detail::choose_grid_counts(g, params.s, feat, fc);
  Centers centers = detail::init_centers(g, feat, fc, grid);
  const double spatial_weight =
      params.compactness * params.compactness / (grid.step * grid.step);

  std::vector<int32_t> labels(static_cast<size_t>(g.npix), -1);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    assign_serial(g, feat, fc, centers, grid.step, spatial_weight, labels);
    detail::update_centers(g, feat, fc, labels, centers);
  }

  CellMap raw;
  raw.shape = image.spatial_shape();
  raw.cell_ids = std::move(labels);
  raw.num_cells = centers.k;
  return ref::enforce_connectivity(raw, params);
}

CellMap enforce_connectivity(const CellMap& cells, const SlicParams& params) {
  // Breadth-first relabel into components, then repeated greedy merging in
  // (size, first-pixel) order; follows the same documented rule as the
  // production version but keeps everything in flat maps.
  const SpatialGrid g = detail::grid_of(cells.shape);
  const int64_t npix = g.npix;
  const double min_size =
      params.min_cell_fraction * static_cast<double>(npix) / std::max(1, params.s);

  std::vector<int32_t> comp_of(static_cast<size_t>(npix), -1);
  std::vector<int32_t> comp_input;
  std::vector<int64_t> comp_size, comp_first;
  std::deque<int64_t> queue;
  int coord[3], ncoord[3];
  for (int64_t start = 0; start < npix; ++start) {
    if (comp_of[start] >= 0) continue;
    int32_t ci = static_cast<int32_t>(comp_input.size());
    comp_input.push_back(cells.cell_ids[start]);
    comp_size.push_back(0);
    comp_first.push_back(start);
    queue.clear();
    queue.push_back(start);
    comp_of[start] = ci;
    while (!queue.empty()) {
      int64_t p = queue.front();
      queue.pop_front();
      comp_size[ci]++;
      detail::coords_of(g, p, coord);
      for (int a = 0; a < g.dim; ++a) {
        for (int d = -1; d <= 1; d += 2) {
          for (int b = 0; b < g.dim; ++b) ncoord[b] = coord[b];
          ncoord[a] += d;
          if (ncoord[a] < 0 || ncoord[a] >= g.ext[a]) continue;
          int64_t q = detail::pixel_index(g, ncoord);
          if (comp_of[q] < 0 && cells.cell_ids[q] == cells.cell_ids[start]) {
            comp_of[q] = ci;
            queue.push_back(q);
          }
        }
      }
    }
  }
  const int ncomp = static_cast<int>(comp_input.size());

  std::vector<std::vector<int>> adj(ncomp);
  for (int64_t p = 0; p < npix; ++p) {
    detail::coords_of(g, p, coord);
    for (int a = 0; a < g.dim; ++a) {
      if (coord[a] + 1 >= g.ext[a]) continue;
      for (int b = 0; b < g.dim; ++b) ncoord[b] = coord[b];
      ncoord[a] += 1;
      int64_t q = detail::pixel_index(g, ncoord);
      if (comp_of[p] != comp_of[q]) {
        adj[comp_of[p]].push_back(comp_of[q]);
        adj[comp_of[q]].push_back(comp_of[p]);
      }
    }
  }
  for (auto& v : adj) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  std::vector<bool> is_primary(ncomp, false);
  {
    std::vector<int> best;
    for (int c = 0; c < ncomp; ++c) {
      int32_t id = comp_input[c];
      if (id >= static_cast<int32_t>(best.size())) best.resize(id + 1, -1);
      int b = best[id];
      if (b < 0 || comp_size[c] > comp_size[b] ||
          (comp_size[c] == comp_size[b] && comp_first[c] < comp_first[b]))
        best[id] = c;
    }
    for (int b : best)
      if (b >= 0) is_primary[b] = true;
  }

  std::vector<int> order;
  for (int c = 0; c < ncomp; ++c)
    if (!is_primary[c] || static_cast<double>(comp_size[c]) < min_size) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (comp_size[a] != comp_size[b]) return comp_size[a] < comp_size[b];
    return comp_first[a] < comp_first[b];
  });

  std::vector<int> group(ncomp);
  std::iota(group.begin(), group.end(), 0);
  std::vector<int64_t> gsize(comp_size), gfirst(comp_first);
  std::vector<bool> gprimary(is_primary.begin(), is_primary.end());
  auto resolve = [&](int c) {
    while (group[c] != c) c = group[c];
    return c;
  };

  for (int c : order) {
    int r = resolve(c);
    if (gprimary[r] && static_cast<double>(gsize[r]) >= min_size) continue;
    int best = -1;
    for (int m = 0; m < ncomp; ++m) {
      if (resolve(m) != r) continue;
      for (int n : adj[m]) {
        int nr = resolve(n);
        if (nr == r) continue;
        if (best < 0 || gsize[nr] > gsize[best] ||
            (gsize[nr] == gsize[best] && gfirst[nr] < gfirst[best]))
          best = nr;
      }
    }
    if (best < 0) continue;
    group[r] = best;
    gsize[best] += gsize[r];
    gfirst[best] = std::min(gfirst[best], gfirst[r]);
    gprimary[best] = gprimary[best] || gprimary[r];
  }

  CellMap out;
  out.shape = cells.shape;
  out.cell_ids.assign(static_cast<size_t>(npix), -1);
  std::vector<int32_t> new_id(ncomp, -1);
  int32_t next = 0;
  for (int64_t p = 0; p < npix; ++p) {
    int r = resolve(comp_of[p]);
    if (new_id[r] < 0) new_id[r] = next++;
    out.cell_ids[p] = new_id[r];
  }
  out.num_cells = next;
  return out;
}

}  // namespace spda::ref
