#include "spda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "spda/parallel.hpp"

namespace spda {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_congruent(const LabelMap& a, const LabelMap& b) {
  if (a.shape != b.shape) throw std::invalid_argument("metrics: shape mismatch");
}

template <typename GetId>
BoundarySet boundary_of(const std::vector<int>& shape, GetId id) {
  BoundarySet out;
  out.dim = static_cast<int>(shape.size());
  const int d = out.dim == 3 ? shape[0] : 1;
  const int h = shape[out.dim == 3 ? 1 : 0];
  const int w = shape[out.dim == 3 ? 2 : 1];
  auto differs = [&](int z, int y, int x, int32_t v) {
    if (z > 0 && id(z - 1, y, x) != v) return true;
    if (z + 1 < d && id(z + 1, y, x) != v) return true;
    if (y > 0 && id(z, y - 1, x) != v) return true;
    if (y + 1 < h && id(z, y + 1, x) != v) return true;
    if (x > 0 && id(z, y, x - 1) != v) return true;
    if (x + 1 < w && id(z, y, x + 1) != v) return true;
    return false;
  };
  for (int z = 0; z < d; ++z)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int32_t v = id(z, y, x);
        if (v < 0) continue;  // mask sentinel
        if (differs(z, y, x, v))
          out.points.push_back(out.dim == 3 ? std::array<int, 3>{z, y, x}
                                            : std::array<int, 3>{y, x, 0});
      }
  return out;
}

}  // namespace

BoundarySet extract_boundary(const LabelMap& label, int class_id) {
  // Boundary of the binary mask of one class; pixels outside the class are
  // ignored (sentinel -1).
  auto id = [&](int z, int y, int x) -> int32_t {
    int32_t v = label.is_3d() ? label.at(z, y, x) : label.at(y, x);
    return v == class_id ? 1 : 0;
  };
  BoundarySet all = boundary_of(label.shape, id);
  BoundarySet out;
  out.dim = all.dim;
  for (const auto& p : all.points) {
    int32_t v = label.is_3d() ? label.at(p[0], p[1], p[2]) : label.at(p[0], p[1]);
    if (v == class_id) out.points.push_back(p);
  }
  return out;
}

BoundarySet extract_boundary_all(const LabelMap& label) {
  auto id = [&](int z, int y, int x) -> int32_t {
    return label.is_3d() ? label.at(z, y, x) : label.at(y, x);
  };
  return boundary_of(label.shape, id);
}

BoundarySet extract_cell_boundary(const CellMap& cells) {
  auto id = [&](int z, int y, int x) -> int32_t {
    return cells.is_3d() ? cells.at(z, y, x) : cells.at(y, x);
  };
  return boundary_of(cells.shape, id);
}

double dice(const LabelMap& pred, const LabelMap& gt, int class_id) {
  check_congruent(pred, gt);
  int64_t a = 0, b = 0, inter = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    bool pa = pred.data[i] == class_id, pb = gt.data[i] == class_id;
    a += pa;
    b += pb;
    inter += pa && pb;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

IouReport mean_iu(const LabelMap& pred, const LabelMap& gt, int num_classes) {
  check_congruent(pred, gt);
  std::vector<int64_t> inter(num_classes, 0), uni(num_classes, 0);
  for (size_t i = 0; i < pred.data.size(); ++i) {
    int32_t p = pred.data[i], g = gt.data[i];
    if (p == g) {
      inter[p]++;
      uni[p]++;
    } else {
      if (p >= 0 && p < num_classes) uni[p]++;
      if (g >= 0 && g < num_classes) uni[g]++;
    }
  }
  IouReport r;
  r.per_class.resize(num_classes);
  r.valid.resize(num_classes);
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < num_classes; ++c) {
    r.valid[c] = uni[c] > 0;
    r.per_class[c] = r.valid[c] ? static_cast<double>(inter[c]) / uni[c]
                                : std::numeric_limits<double>::quiet_NaN();
    if (r.valid[c]) {
      sum += r.per_class[c];
      n++;
    }
  }
  r.mean = n > 0 ? sum / n : 0.0;
  return r;
}

namespace {

double sq_dist(const std::array<int, 3>& a, const std::array<int, 3>& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Directed distances min over b for each a; pairwise pass parallelized over
// the source points.
void directed_min_dists(const BoundarySet& a, const BoundarySet& b, std::vector<double>& out) {
  out.resize(a.points.size());
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(a.points.size()); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b.points) best = std::min(best, sq_dist(a.points[i], q));
    out[i] = std::sqrt(best);
  }
}

void check_nonempty(const BoundarySet& a, const BoundarySet& b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("boundary metric undefined for empty boundary sets");
}

}  // namespace

double hausdorff_symmetric(const BoundarySet& a, const BoundarySet& b) {
  check_nonempty(a, b);
  std::vector<double> da, db;
  directed_min_dists(a, b, da);
  directed_min_dists(b, a, db);
  return std::max(*std::max_element(da.begin(), da.end()),
                  *std::max_element(db.begin(), db.end()));
}

double adb(const BoundarySet& a, const BoundarySet& b) {
  check_nonempty(a, b);
  std::vector<double> da, db;
  directed_min_dists(a, b, da);
  directed_min_dists(b, a, db);
  double ma = 0.0, mb = 0.0;
  for (double v : da) ma += v;
  for (double v : db) mb += v;
  ma /= static_cast<double>(da.size());
  mb /= static_cast<double>(db.size());
  return 0.5 * (ma + mb);
}

double combined_score_s(const std::vector<ClassBoundaryMetrics>& per_class) {
  if (per_class.empty()) throw std::invalid_argument("combined score: no classes");
  double s = 0.0;
  for (const auto& m : per_class)
    s += m.dice / 2.0 - m.adb / 4.0 - m.hausdorff / 30.0;
  return s;
}

double boundary_recall(const CellMap& cells, const LabelMap& gt, int tol_pixels) {
  if (cells.shape != gt.shape) throw std::invalid_argument("boundary recall: shape mismatch");
  BoundarySet gtb = extract_boundary_all(gt);
  if (gtb.empty()) throw std::invalid_argument("boundary recall: ground truth has no boundary");
  BoundarySet spb = extract_cell_boundary(cells);
  if (spb.empty()) return 0.0;

  // Rasterize the superpixel boundary for Chebyshev-window lookups.
  const int d = cells.depth(), h = cells.height(), w = cells.width();
  std::vector<uint8_t> mask(static_cast<size_t>(d) * h * w, 0);
  auto at = [&](int z, int y, int x) -> uint8_t& {
    return mask[(static_cast<size_t>(z) * h + y) * w + x];
  };
  for (const auto& p : spb.points) {
    if (spb.dim == 3)
      at(p[0], p[1], p[2]) = 1;
    else
      at(0, p[0], p[1]) = 1;
  }
  int64_t hit = 0;
  for (const auto& p : gtb.points) {
    int pz = gtb.dim == 3 ? p[0] : 0;
    int py = gtb.dim == 3 ? p[1] : p[0];
    int px = gtb.dim == 3 ? p[2] : p[1];
    bool found = false;
    for (int z = std::max(0, pz - (gtb.dim == 3 ? tol_pixels : 0));
         !found && z <= std::min(d - 1, pz + (gtb.dim == 3 ? tol_pixels : 0)); ++z)
      for (int y = std::max(0, py - tol_pixels); !found && y <= std::min(h - 1, py + tol_pixels);
           ++y)
        for (int x = std::max(0, px - tol_pixels);
             !found && x <= std::min(w - 1, px + tol_pixels); ++x)
          found = at(z, y, x) != 0;
    hit += found;
  }
  return static_cast<double>(hit) / static_cast<double>(gtb.points.size());
}

double compactness(const CellMap& cells) {
  const int d = cells.depth(), h = cells.height(), w = cells.width();
  const bool vol = cells.is_3d();
  std::vector<int64_t> area(cells.num_cells, 0), perim(cells.num_cells, 0);
  auto id = [&](int z, int y, int x) -> int32_t {
    return vol ? cells.at(z, y, x) : cells.at(y, x);
  };
  for (int z = 0; z < d; ++z) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        int32_t v = id(z, y, x);
        area[v]++;
        int exposed = 0;
        if (vol) {
          exposed += (z == 0 || id(z - 1, y, x) != v) + (z + 1 >= d || id(z + 1, y, x) != v);
        }
        exposed += (y == 0 || id(z, y - 1, x) != v) + (y + 1 >= h || id(z, y + 1, x) != v);
        exposed += (x == 0 || id(z, y, x - 1) != v) + (x + 1 >= w || id(z, y, x + 1) != v);
        perim[v] += exposed;
      }
    }
  }
  double total = 0.0;
  int64_t npix = cells.pixel_count();
  for (int c = 0; c < cells.num_cells; ++c) {
    if (area[c] == 0) continue;
    double a = static_cast<double>(area[c]);
    double p = static_cast<double>(perim[c]);
    double q = vol ? 36.0 * kPi * a * a / (p * p * p) : 4.0 * kPi * a / (p * p);
    q = std::min(q, 1.0);
    total += q * a / static_cast<double>(npix);
  }
  return total;
}

}  // namespace spda
