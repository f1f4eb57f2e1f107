#pragma once

// Internal SLIC machinery shared by the production kernels and the serial
// reference twin: grid initialization, center state and the update step.
// The independent Lloyd oracle used by the tests lives in test code and does
// not include this header.

#include <array>
#include <cstdint>
#include <vector>

namespace spda::detail {

struct SpatialGrid {
  int dim = 2;                    // 2 or 3
  std::array<int, 3> ext = {1, 1, 1};  // (y,x) or (z,y,x)
  int64_t npix = 0;
};

SpatialGrid grid_of(const std::vector<int>& spatial);

inline int64_t pixel_index(const SpatialGrid& g, const int* coord) {
  int64_t p = coord[0];
  for (int a = 1; a < g.dim; ++a) p = p * g.ext[a] + coord[a];
  return p;
}

inline void coords_of(const SpatialGrid& g, int64_t p, int* coord) {
  if (g.dim == 2) {
    coord[0] = static_cast<int>(p / g.ext[1]);
    coord[1] = static_cast<int>(p % g.ext[1]);
  } else {
    int64_t hw = static_cast<int64_t>(g.ext[1]) * g.ext[2];
    coord[0] = static_cast<int>(p / hw);
    int64_t r = p % hw;
    coord[1] = static_cast<int>(r / g.ext[2]);
    coord[2] = static_cast<int>(r % g.ext[2]);
  }
}

// Per-axis seed counts chosen for a desired cell count, plus the grid step
// S = (N/s)^(1/dim) used for both the search window and the spatial weight.
struct GridChoice {
  std::array<int, 3> counts = {1, 1, 1};
  double step = 1.0;
};

GridChoice choose_grid_counts(const SpatialGrid& g, int s, const std::vector<float>& feat,
                              int fc);

struct Centers {
  int dim = 2;
  int fc = 1;
  int k = 0;
  std::vector<double> pos;   // k x 3, pixel-center coordinates
  std::vector<double> feat;  // k x fc
};

Centers init_centers(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                     const GridChoice& grid);

double pixel_gradient(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                      const int* coord);

// Squared SLIC distance d_c^2 + (m/S)^2 d_s^2 for pixel (coord, f) against
// center k. All math in double so every code path produces identical bits.
inline double center_distance2(const Centers& c, int k, const int* coord, const float* f,
                               double spatial_weight) {
  double dc = 0.0;
  for (int ch = 0; ch < c.fc; ++ch) {
    double d = static_cast<double>(f[ch]) - c.feat[static_cast<size_t>(k) * c.fc + ch];
    dc += d * d;
  }
  double ds = 0.0;
  for (int a = 0; a < c.dim; ++a) {
    double d = (coord[a] + 0.5) - c.pos[static_cast<size_t>(k) * 3 + a];
    ds += d * d;
  }
  return dc + spatial_weight * ds;
}

void update_centers(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                    const std::vector<int32_t>& labels, Centers& c);

double assignment_objective(const SpatialGrid& g, const std::vector<float>& feat, int fc,
                            const Centers& c, double spatial_weight,
                            const std::vector<int32_t>& labels);

}  // namespace spda::detail
