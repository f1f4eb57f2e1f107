#pragma once

#include <filesystem>
#include <vector>

#include "spda/rng.hpp"
#include "spda/tensor.hpp"

namespace spda {

struct SlicParams {
  int s = 1000;                    // desired cell count
  double compactness = 20.0;       // m; weight of the spatial term
  int max_iters = 10;
  double min_cell_fraction = 0.25; // fragments below this fraction of N/s merge
};

// Partition of an image/volume into cells. Ids are exactly {0..num_cells-1};
// after connectivity enforcement every id is one 4-connected (2D) or
// 6-connected (3D) component.
struct CellMap {
  std::vector<int> shape;  // H x W or D x H x W
  std::vector<int32_t> cell_ids;
  int num_cells = 0;

  bool is_3d() const { return shape.size() == 3; }
  int depth() const { return is_3d() ? shape[0] : 1; }
  int height() const { return shape[is_3d() ? 1 : 0]; }
  int width() const { return shape[is_3d() ? 2 : 1]; }
  int64_t pixel_count() const { return static_cast<int64_t>(cell_ids.size()); }
  int32_t at(int y, int x) const { return cell_ids[static_cast<size_t>(y) * width() + x]; }
  int32_t at(int z, int y, int x) const {
    return cell_ids[(static_cast<size_t>(z) * height() + y) * width() + x];
  }
};

// sRGB (D65) to CIELAB. Input must be a 3-channel image in [0,1]; output
// channels are L in [0,100] and a,b roughly in [-128,127].
Tensor to_lab(const Tensor& rgb);

// Feature planes used for clustering: CIELAB for 2D RGB images, intensity
// scaled by 100 per channel otherwise (so gray values are commensurate with
// the L channel).
std::vector<float> slic_features(const Tensor& image, int* feature_channels);

// Objective values recorded after every assignment and update half-step;
// the total distance objective sum_p D^2(p, center(p)) is non-increasing.
struct SlicTrace {
  std::vector<double> objective;
};

// Localized k-means over (feature, position) with grid initialization,
// windowed assignment (2S search window), lowest-index tie-breaking and
// connectivity enforcement. Deterministic; the rng parameter is accepted for
// interface uniformity but the algorithm draws nothing from it.
CellMap slic_segment(const Tensor& image, const SlicParams& params,
                     SeededRng* rng = nullptr, SlicTrace* trace = nullptr);
CellMap slic_segment_3d(const Tensor& volume, const SlicParams& params,
                        SeededRng* rng = nullptr, SlicTrace* trace = nullptr);

// Splits disconnected ids, keeps the largest component of each id, and merges
// every other fragment (and any surviving component smaller than
// min_cell_fraction * N / s) into its largest adjacent cell. Total function;
// ids are re-compacted to {0..num_cells-1} in row-major first-occurrence
// order. Output cell count never exceeds the input distinct-id count.
CellMap enforce_connectivity(const CellMap& cells, const SlicParams& params);

// CellMap serialization: the raw volume format with C=1, ids stored as
// floats. Boundary overlay paints cell borders red for visual inspection.
void write_cellmap(const std::filesystem::path& path, const CellMap& cells);
CellMap read_cellmap(const std::filesystem::path& path);
Tensor boundary_overlay(const Tensor& image, const CellMap& cells);

// Serial reference implementations used by tests and the benchmark. They
// follow the same documented algorithm but assign by scanning every center
// (no bucket grid, no threads); results are bit-identical to the production
// kernels.
namespace ref {
CellMap slic_segment(const Tensor& image, const SlicParams& params);
CellMap enforce_connectivity(const CellMap& cells, const SlicParams& params);
}  // namespace ref

}  // namespace spda
