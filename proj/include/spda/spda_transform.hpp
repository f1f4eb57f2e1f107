#pragma once

#include <string>
#include <vector>

#include "spda/dataset.hpp"
#include "spda/rng.hpp"
#include "spda/slic.hpp"
#include "spda/tensor.hpp"

namespace spda {

struct SpdaParams {
  int s_lo = 800;
  int s_hi = 2000;
  std::vector<int> offline_s_values;  // explicit list; must lie inside [s_lo, s_hi]

  void validate(int64_t pixel_count) const;
  // Evenly spaced s values across [s_lo, s_hi] for offline augmentation.
  std::vector<int> spaced_values(int count) const;
};

struct BasicAugmentConfig {
  int crop_h = 0;  // 0 = full size
  int crop_w = 0;
  int crop_d = 0;  // 3D volumes only
  bool flip_y = true;
  bool flip_x = true;
  bool flip_z = false;
  std::vector<int> rotation_set = {0, 90, 180, 270};  // multiples of 90, in the XY plane
};

// One drawn geometric transform, applied identically to image and label.
struct BasicTransform {
  int crop_z = 0, crop_y = 0, crop_x = 0;
  int crop_d = 0, crop_h = 0, crop_w = 0;  // crop_d stays 0 for 2D samples
  bool flip_z = false, flip_y = false, flip_x = false;
  int rot_quarter = 0;  // counter-clockwise quarter turns in the XY plane

  std::string descriptor() const;
};

// Replaces every pixel of each cell with the cell's per-channel mean.
Tensor superpixelize(const Tensor& image, const CellMap& cells);

// SP(x, s): SLIC segmentation followed by per-cell mean replacement. The
// paired label is untouched by construction.
Tensor sp_transform(const Tensor& image, int s, const SlicParams& slic_params,
                    SeededRng* rng = nullptr);

// One superpixelized sample per requested s (the offline list if present,
// otherwise `count` evenly spaced values). Labels are shared bit-for-bit
// with the source sample.
std::vector<Sample> generate_augmented_set(const Sample& sample, const SpdaParams& params,
                                           const SlicParams& slic_params, SeededRng& rng,
                                           int count = 5);

BasicTransform draw_basic_transform(int height, int width, const BasicAugmentConfig& config,
                                    SeededRng& rng, int depth = 0);
Sample apply_basic_transform(const Sample& sample, const BasicTransform& t);
Sample basic_augment(const Sample& sample, const BasicAugmentConfig& config, SeededRng& rng);

namespace ref {
// Straight serial version of the per-cell mean kernel.
Tensor superpixelize(const Tensor& image, const CellMap& cells);
}  // namespace ref

}  // namespace spda
