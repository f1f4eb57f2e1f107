#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spda {

// Dense row-major grid of scalars. 2D images are H x W x C, 3D volumes are
// D x H x W x C; the channel extent is always last. Values are nominally in
// [0,1] for image data.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> shape_, T fill = T(0))
      : shape(std::move(shape_)) {
    data.assign(static_cast<size_t>(element_count_of(shape)), fill);
  }

  static TensorT image2d(int h, int w, int c, T fill = T(0)) {
    return TensorT({h, w, c}, fill);
  }
  static TensorT volume3d(int d, int h, int w, int c, T fill = T(0)) {
    return TensorT({d, h, w, c}, fill);
  }

  static int64_t element_count_of(const std::vector<int>& s) {
    if (s.size() != 3 && s.size() != 4)
      throw std::invalid_argument("tensor rank must be 3 (HxWxC) or 4 (DxHxWxC)");
    int64_t n = 1;
    for (int e : s) {
      if (e <= 0) throw std::invalid_argument("tensor extent must be positive");
      n *= e;
    }
    return n;
  }

  bool is_3d() const { return shape.size() == 4; }
  int depth() const { return is_3d() ? shape[0] : 1; }
  int height() const { return shape[is_3d() ? 1 : 0]; }
  int width() const { return shape[is_3d() ? 2 : 1]; }
  int channels() const { return shape.back(); }
  int64_t element_count() const { return static_cast<int64_t>(data.size()); }
  int64_t pixel_count() const { return element_count() / channels(); }

  // Spatial extents without the channel axis.
  std::vector<int> spatial_shape() const {
    return std::vector<int>(shape.begin(), shape.end() - 1);
  }

  T& at(int y, int x, int c) {
    return data[(static_cast<size_t>(y) * width() + x) * channels() + c];
  }
  const T& at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width() + x) * channels() + c];
  }
  T& at(int z, int y, int x, int c) {
    return data[((static_cast<size_t>(z) * height() + y) * width() + x) * channels() + c];
  }
  const T& at(int z, int y, int x, int c) const {
    return data[((static_cast<size_t>(z) * height() + y) * width() + x) * channels() + c];
  }

  bool all_finite() const {
    for (T v : data)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

// Integer class ids per pixel/voxel. Shape is H x W or D x H x W.
struct LabelMap {
  std::vector<int> shape;
  std::vector<int32_t> data;
  int num_classes = 0;

  LabelMap() = default;
  LabelMap(std::vector<int> shape_, int num_classes_, int32_t fill = 0)
      : shape(std::move(shape_)), num_classes(num_classes_) {
    if (shape.size() != 2 && shape.size() != 3)
      throw std::invalid_argument("label map rank must be 2 or 3");
    int64_t n = 1;
    for (int e : shape) {
      if (e <= 0) throw std::invalid_argument("label extent must be positive");
      n *= e;
    }
    data.assign(static_cast<size_t>(n), fill);
  }

  bool is_3d() const { return shape.size() == 3; }
  int depth() const { return is_3d() ? shape[0] : 1; }
  int height() const { return shape[is_3d() ? 1 : 0]; }
  int width() const { return shape[is_3d() ? 2 : 1]; }
  int64_t pixel_count() const { return static_cast<int64_t>(data.size()); }

  int32_t& at(int y, int x) { return data[static_cast<size_t>(y) * width() + x]; }
  int32_t at(int y, int x) const { return data[static_cast<size_t>(y) * width() + x]; }
  int32_t& at(int z, int y, int x) {
    return data[(static_cast<size_t>(z) * height() + y) * width() + x];
  }
  int32_t at(int z, int y, int x) const {
    return data[(static_cast<size_t>(z) * height() + y) * width() + x];
  }

  void validate_ids() const {
    for (int32_t v : data)
      if (v < 0 || v >= num_classes)
        throw std::runtime_error("label id " + std::to_string(v) +
                                 " out of range for num_classes=" + std::to_string(num_classes));
  }
};

// True when the tensor's spatial extents equal the label map's extents.
inline bool spatially_congruent(const Tensor& t, const LabelMap& l) {
  return t.spatial_shape() == l.shape;
}

}  // namespace spda
