#include "spda/spda_transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spda/parallel.hpp"

namespace spda {

void SpdaParams::validate(int64_t pixel_count) const {
  if (s_lo < 1 || s_lo > s_hi)
    throw std::invalid_argument("SPDA: require 1 <= s_lo <= s_hi");
  if (s_hi > pixel_count)
    throw std::invalid_argument("SPDA: s_hi exceeds pixel count");
  for (int s : offline_s_values)
    if (s < s_lo || s > s_hi)
      throw std::invalid_argument("SPDA: offline s value outside [s_lo, s_hi]");
}

std::vector<int> SpdaParams::spaced_values(int count) const {
  if (count < 1) throw std::invalid_argument("SPDA: count must be >= 1");
  std::vector<int> out;
  if (count == 1 || s_lo == s_hi) {
    out.push_back(s_lo);
    return out;
  }
  for (int i = 0; i < count; ++i) {
    double t = static_cast<double>(i) / (count - 1);
    int s = static_cast<int>(std::lround(s_lo + t * (s_hi - s_lo)));
    if (out.empty() || out.back() != s) out.push_back(s);
  }
  return out;
}

namespace {

// Per-cell member lists in row-major pixel order. Built once so the parallel
// per-cell accumulation adds members in exactly the same sequence as the
// serial single-pass reference.
struct CellIndex {
  std::vector<int64_t> offsets;  // num_cells + 1
  std::vector<int64_t> members;  // pixel indices grouped by cell
};

CellIndex build_cell_index(const CellMap& cells) {
  const int64_t npix = cells.pixel_count();
  CellIndex idx;
  idx.offsets.assign(static_cast<size_t>(cells.num_cells) + 1, 0);
  for (int64_t p = 0; p < npix; ++p) idx.offsets[cells.cell_ids[p] + 1]++;
  for (size_t i = 1; i < idx.offsets.size(); ++i) idx.offsets[i] += idx.offsets[i - 1];
  idx.members.resize(static_cast<size_t>(npix));
  std::vector<int64_t> cursor(idx.offsets.begin(), idx.offsets.end() - 1);
  for (int64_t p = 0; p < npix; ++p) idx.members[cursor[cells.cell_ids[p]]++] = p;
  return idx;
}

void check_congruent(const Tensor& image, const CellMap& cells) {
  if (image.spatial_shape() != cells.shape)
    throw std::invalid_argument("superpixelize: image/cell shape mismatch");
  if (cells.num_cells < 1) throw std::invalid_argument("superpixelize: empty cell map");
}

}  // namespace

Tensor superpixelize(const Tensor& image, const CellMap& cells) {
  check_congruent(image, cells);
  const int ch = image.channels();
  const CellIndex idx = build_cell_index(cells);
  Tensor out = image;
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int c = 0; c < cells.num_cells; ++c) {
    const int64_t begin = idx.offsets[c], end = idx.offsets[c + 1];
    if (begin == end) continue;
    for (int k = 0; k < ch; ++k) {
      double sum = 0.0;
      for (int64_t i = begin; i < end; ++i) sum += image.data[idx.members[i] * ch + k];
      float mean = static_cast<float>(sum / static_cast<double>(end - begin));
      for (int64_t i = begin; i < end; ++i) out.data[idx.members[i] * ch + k] = mean;
    }
  }
  return out;
}

namespace ref {

Tensor superpixelize(const Tensor& image, const CellMap& cells) {
  check_congruent(image, cells);
  const int ch = image.channels();
  const int64_t npix = image.pixel_count();
  std::vector<double> sum(static_cast<size_t>(cells.num_cells) * ch, 0.0);
  std::vector<int64_t> count(cells.num_cells, 0);
  for (int64_t p = 0; p < npix; ++p) {
    int32_t c = cells.cell_ids[p];
    count[c]++;
    for (int k = 0; k < ch; ++k) sum[static_cast<size_t>(c) * ch + k] += image.data[p * ch + k];
  }
  Tensor out = image;
  for (int64_t p = 0; p < npix; ++p) {
    int32_t c = cells.cell_ids[p];
    for (int k = 0; k < ch; ++k)
      out.data[p * ch + k] =
          static_cast<float>(sum[static_cast<size_t>(c) * ch + k] / count[c]);
  }
  return out;
}

}  // namespace ref

Tensor sp_transform(const Tensor& image, int s, const SlicParams& slic_params,
                    SeededRng* rng) {
  SlicParams p = slic_params;
  p.s = s;
  CellMap cells = image.is_3d() ? slic_segment_3d(image, p, rng) : slic_segment(image, p, rng);
  return superpixelize(image, cells);
}

std::vector<Sample> generate_augmented_set(const Sample& sample, const SpdaParams& params,
                                           const SlicParams& slic_params, SeededRng& rng,
                                           int count) {
  params.validate(sample.image.pixel_count());
  std::vector<int> values =
      params.offline_s_values.empty() ? params.spaced_values(count) : params.offline_s_values;
  if (values.empty()) throw std::invalid_argument("SPDA: empty s list");
  std::vector<Sample> out;
  out.reserve(values.size());
  for (int s : values) {
    Sample aug;
    aug.image = sp_transform(sample.image, s, slic_params, &rng);
    aug.label = sample.label;  // label-preserving by definition
    aug.provenance = Provenance{Provenance::Kind::Spda, s, ""};
    out.push_back(std::move(aug));
  }
  return out;
}

std::string BasicTransform::descriptor() const {
  std::string d = "crop=";
  if (crop_d > 0) d += std::to_string(crop_z) + ",";
  d += std::to_string(crop_y) + "," + std::to_string(crop_x) + ",";
  if (crop_d > 0) d += std::to_string(crop_d) + "x";
  d += std::to_string(crop_h) + "x" + std::to_string(crop_w);
  d += ";flip=";
  if (flip_z) d += "z";
  if (flip_y) d += "y";
  if (flip_x) d += "x";
  if (!flip_z && !flip_y && !flip_x) d += "none";
  d += ";rot=" + std::to_string(rot_quarter * 90);
  return d;
}

BasicTransform draw_basic_transform(int height, int width, const BasicAugmentConfig& config,
                                    SeededRng& rng, int depth) {
  BasicTransform t;
  t.crop_h = config.crop_h > 0 ? config.crop_h : height;
  t.crop_w = config.crop_w > 0 ? config.crop_w : width;
  if (t.crop_h > height || t.crop_w > width)
    throw std::invalid_argument("basic augment: crop larger than image");
  if (depth > 0) {
    t.crop_d = config.crop_d > 0 ? config.crop_d : depth;
    if (t.crop_d > depth) throw std::invalid_argument("basic augment: crop larger than volume");
    t.crop_z = t.crop_d < depth ? static_cast<int>(rng.uniform_int(0, depth - t.crop_d)) : 0;
  }
  t.crop_y = t.crop_h < height ? static_cast<int>(rng.uniform_int(0, height - t.crop_h)) : 0;
  t.crop_x = t.crop_w < width ? static_cast<int>(rng.uniform_int(0, width - t.crop_w)) : 0;
  t.flip_z = depth > 0 && config.flip_z && rng.uniform_int(0, 1) == 1;
  t.flip_y = config.flip_y && rng.uniform_int(0, 1) == 1;
  t.flip_x = config.flip_x && rng.uniform_int(0, 1) == 1;
  if (config.rotation_set.empty()) {
    t.rot_quarter = 0;
  } else {
    int deg = config.rotation_set[static_cast<size_t>(
        rng.uniform_int(0, static_cast<int64_t>(config.rotation_set.size()) - 1))];
    if (deg % 90 != 0) throw std::invalid_argument("basic augment: rotations must be multiples of 90");
    t.rot_quarter = ((deg / 90) % 4 + 4) % 4;
  }
  if (t.rot_quarter % 2 == 1 && t.crop_h != t.crop_w)
    throw std::invalid_argument("basic augment: 90/270 rotation requires a square crop");
  return t;
}

namespace {

// Index map for crop -> flip -> rotate, shared by image and label so the two
// stay congruent by construction. Returns source (y,x) for output (y,x).
inline void source_pixel(const BasicTransform& t, int oy, int ox, int* sy, int* sx) {
  int y = oy, x = ox;
  // invert the counter-clockwise rotation: out[i][j] = in[j][W-1-i]
  switch (t.rot_quarter) {
    case 0:
      break;
    case 1:  // out[i][j] = in[j][W-1-i]
      y = ox;
      x = t.crop_w - 1 - oy;
      break;
    case 2:
      y = t.crop_h - 1 - oy;
      x = t.crop_w - 1 - ox;
      break;
    case 3:  // out[i][j] = in[H-1-j][i]
      y = t.crop_h - 1 - ox;
      x = oy;
      break;
  }
  if (t.flip_y) y = t.crop_h - 1 - y;
  if (t.flip_x) x = t.crop_w - 1 - x;
  *sy = t.crop_y + y;
  *sx = t.crop_x + x;
}

}  // namespace

Sample apply_basic_transform(const Sample& sample, const BasicTransform& t) {
  const int ch = sample.image.channels();
  const int oh = t.rot_quarter % 2 == 1 ? t.crop_w : t.crop_h;
  const int ow = t.rot_quarter % 2 == 1 ? t.crop_h : t.crop_w;
  Sample out;
  out.provenance = Provenance{Provenance::Kind::Basic, 0, t.descriptor()};
  if (!sample.image.is_3d()) {
    out.image = Tensor::image2d(oh, ow, ch);
    out.label = LabelMap({oh, ow}, sample.label.num_classes);
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        int sy, sx;
        source_pixel(t, y, x, &sy, &sx);
        for (int c = 0; c < ch; ++c) out.image.at(y, x, c) = sample.image.at(sy, sx, c);
        out.label.at(y, x) = sample.label.at(sy, sx);
      }
    }
    return out;
  }
  // volumes: crop + per-axis flips + XY-plane rotation
  const int od = t.crop_d;
  out.image = Tensor::volume3d(od, oh, ow, ch);
  out.label = LabelMap({od, oh, ow}, sample.label.num_classes);
  for (int z = 0; z < od; ++z) {
    int sz = t.flip_z ? t.crop_d - 1 - z : z;
    sz += t.crop_z;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        int sy, sx;
        source_pixel(t, y, x, &sy, &sx);
        for (int c = 0; c < ch; ++c)
          out.image.at(z, y, x, c) = sample.image.at(sz, sy, sx, c);
        out.label.at(z, y, x) = sample.label.at(sz, sy, sx);
      }
    }
  }
  return out;
}

Sample basic_augment(const Sample& sample, const BasicAugmentConfig& config, SeededRng& rng) {
  BasicTransform t =
      draw_basic_transform(sample.image.height(), sample.image.width(), config, rng,
                           sample.image.is_3d() ? sample.image.depth() : 0);
  return apply_basic_transform(sample, t);
}

}  // namespace spda
