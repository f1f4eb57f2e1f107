#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spda/metrics.hpp"
#include "spda/rng.hpp"
#include "spda/slic.hpp"

using namespace spda;

namespace {

LabelMap map_from(const std::vector<int32_t>& v, int h, int w, int classes) {
  LabelMap l({h, w}, classes);
  l.data = v;
  return l;
}

LabelMap random_mask(int h, int w, uint64_t seed) {
  LabelMap l({h, w}, 2);
  SeededRng rng(seed);
  for (int32_t& v : l.data) v = static_cast<int32_t>(rng.uniform_int(0, 1));
  return l;
}

constexpr double kPi = 3.14159265358979323846;

}  // namespace

TEST_CASE("dice basics") {
  LabelMap a = map_from({1, 1, 0, 0}, 2, 2, 2);
  LabelMap b = map_from({1, 1, 0, 0}, 2, 2, 2);
  CHECK(dice(a, b, 1) == 1.0);
  LabelMap c = map_from({0, 0, 1, 1}, 2, 2, 2);
  CHECK(dice(a, c, 1) == 0.0);
  // |A|=|B|=2, overlap 1 -> 0.5
  LabelMap d = map_from({0, 1, 1, 0}, 2, 2, 2);
  CHECK(dice(a, d, 1) == 0.5);
  // both masks empty -> 1.0
  CHECK(dice(a, b, 1) == 1.0);
  LabelMap e = map_from({0, 0, 0, 0}, 2, 2, 2);
  CHECK(dice(e, e, 1) == 1.0);
  LabelMap wrong({3, 3}, 2);
  CHECK_THROWS(dice(a, wrong, 1));
}

TEST_CASE("iou hand case and mean") {
  // A={(0,0),(0,1)}, B={(0,1),(1,1)} -> IoU = 1/3
  LabelMap a = map_from({1, 1, 0, 0}, 2, 2, 2);
  LabelMap b = map_from({0, 1, 0, 1}, 2, 2, 2);
  IouReport r = mean_iu(a, b, 2);
  CHECK(r.per_class[1] == doctest::Approx(1.0 / 3.0));
  CHECK(r.mean == doctest::Approx((r.per_class[0] + r.per_class[1]) / 2.0));
  LabelMap same = map_from({1, 0, 1, 0}, 2, 2, 2);
  IouReport perfect = mean_iu(same, same, 2);
  CHECK(perfect.per_class[0] == 1.0);
  CHECK(perfect.per_class[1] == 1.0);
  CHECK(perfect.mean == 1.0);
}

TEST_CASE("classes with empty union are excluded from the mean") {
  LabelMap a = map_from({0, 0, 1, 1}, 2, 2, 3);
  LabelMap b = map_from({0, 0, 1, 0}, 2, 2, 3);
  IouReport r = mean_iu(a, b, 3);
  CHECK_FALSE(r.valid[2]);
  CHECK(r.mean == doctest::Approx((r.per_class[0] + r.per_class[1]) / 2.0));
}

TEST_CASE("dice equals 2 IoU / (1 + IoU) on random masks") {
  for (uint64_t seed = 0; seed < 12; ++seed) {
    LabelMap a = random_mask(9, 9, seed);
    LabelMap b = random_mask(9, 9, seed + 100);
    IouReport r = mean_iu(a, b, 2);
    for (int c = 0; c < 2; ++c) {
      if (!r.valid[c]) continue;
      double iou = r.per_class[c];
      CHECK(dice(a, b, c) == doctest::Approx(2.0 * iou / (1.0 + iou)).epsilon(1e-12));
    }
    // symmetry
    CHECK(dice(a, b, 1) == dice(b, a, 1));
  }
}

TEST_CASE("hausdorff and adb on singletons and identical sets") {
  BoundarySet a, b;
  a.dim = b.dim = 2;
  a.points.push_back({3, 4, 0});
  b.points.push_back({3, 7, 0});  // 3 pixels apart
  CHECK(hausdorff_symmetric(a, b) == doctest::Approx(3.0));
  CHECK(adb(a, b) == doctest::Approx(3.0));
  CHECK(hausdorff_symmetric(a, a) == 0.0);
  CHECK(adb(a, a) == 0.0);
  // symmetry under argument swap
  BoundarySet c;
  c.dim = 2;
  c.points = {{0, 0, 0}, {5, 5, 0}, {1, 9, 0}};
  CHECK(hausdorff_symmetric(a, c) == hausdorff_symmetric(c, a));
  CHECK(adb(a, c) == adb(c, a));
  BoundarySet empty;
  CHECK_THROWS(hausdorff_symmetric(a, empty));
  CHECK_THROWS(adb(empty, a));
}

TEST_CASE("hausdorff dominates adb on random boundary sets") {
  SeededRng rng(9);
  for (int trial = 0; trial < 8; ++trial) {
    BoundarySet a, b;
    a.dim = b.dim = 2;
    for (int i = 0; i < 12; ++i) {
      a.points.push_back({static_cast<int>(rng.uniform_int(0, 20)),
                          static_cast<int>(rng.uniform_int(0, 20)), 0});
      b.points.push_back({static_cast<int>(rng.uniform_int(0, 20)),
                          static_cast<int>(rng.uniform_int(0, 20)), 0});
    }
    double h = hausdorff_symmetric(a, b);
    double d = adb(a, b);
    CHECK(h >= d);
    CHECK(d >= 0.0);
  }
}

TEST_CASE("combined score reproduces the published overall scores") {
  // DenseVoxNet + basic + SPDA row
  std::vector<ClassBoundaryMetrics> spda_row = {{0.817, 0.723, 3.639}, {0.938, 0.778, 5.548}};
  CHECK(std::abs(combined_score_s(spda_row) - 0.196) <= 0.001);
  // DenseVoxNet + basic baseline row
  std::vector<ClassBoundaryMetrics> base_row = {{0.821, 0.964, 7.294}, {0.931, 0.938, 9.533}};
  CHECK(std::abs(combined_score_s(base_row) - (-0.161)) <= 0.001);
  // perfect two-class segmentation
  std::vector<ClassBoundaryMetrics> perfect = {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
  CHECK(combined_score_s(perfect) == doctest::Approx(1.0));
  CHECK_THROWS(combined_score_s({}));
}

TEST_CASE("boundary recall at the two extremes") {
  LabelMap gt({8, 8}, 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) gt.at(y, x) = x < 4 ? 0 : 1;

  CellMap singletons;
  singletons.shape = {8, 8};
  singletons.cell_ids.resize(64);
  for (int i = 0; i < 64; ++i) singletons.cell_ids[i] = i;
  singletons.num_cells = 64;
  CHECK(boundary_recall(singletons, gt) == 1.0);

  CellMap whole;
  whole.shape = {8, 8};
  whole.cell_ids.assign(64, 0);
  whole.num_cells = 1;
  CHECK(boundary_recall(whole, gt) == 0.0);

  LabelMap flat({8, 8}, 2);
  CHECK_THROWS(boundary_recall(singletons, flat));
}

TEST_CASE("two-half SLIC cells cover the two-half boundary exactly") {
  Tensor img = Tensor::image2d(8, 8, 1);
  LabelMap gt({8, 8}, 2);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      img.at(y, x, 0) = x < 4 ? 0.0f : 1.0f;
      gt.at(y, x) = x < 4 ? 0 : 1;
    }
  SlicParams params;
  params.s = 2;
  CellMap cells = slic_segment(img, params);
  CHECK(boundary_recall(cells, gt) == 1.0);
}

TEST_CASE("compactness prefers squares over strips and is translation invariant") {
  // one full-image square cell: 4*pi*A/P^2 with edge-count perimeter = pi/4
  CellMap square;
  square.shape = {16, 16};
  square.cell_ids.assign(256, 0);
  square.num_cells = 1;
  CHECK(compactness(square) == doctest::Approx(kPi / 4.0));

  // two layouts of equal cell area: 4x4 squares vs 1x16 strips
  CellMap squares, strips;
  squares.shape = strips.shape = {16, 16};
  squares.cell_ids.resize(256);
  strips.cell_ids.resize(256);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      squares.cell_ids[static_cast<size_t>(y) * 16 + x] = (y / 4) * 4 + x / 4;
      strips.cell_ids[static_cast<size_t>(y) * 16 + x] = y;
    }
  squares.num_cells = 16;
  strips.num_cells = 16;
  CHECK(compactness(squares) > compactness(strips));

  // translation of the partition pattern leaves the value unchanged
  CellMap shifted;
  shifted.shape = {16, 16};
  shifted.cell_ids.resize(256);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      shifted.cell_ids[static_cast<size_t>(y) * 16 + x] =
          (((y + 4) % 16) / 4) * 4 + ((x + 4) % 16) / 4;
  shifted.num_cells = 16;
  CHECK(compactness(shifted) == doctest::Approx(compactness(squares)));
}

TEST_CASE("boundary extraction marks pixels with differing neighbors") {
  LabelMap l({4, 4}, 2);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) l.at(y, x) = x < 2 ? 0 : 1;
  BoundarySet all = extract_boundary_all(l);
  CHECK(all.points.size() == 8);  // the two columns astride the split
  BoundarySet cls = extract_boundary(l, 1);
  CHECK(cls.points.size() == 4);
  for (const auto& p : cls.points) CHECK(p[1] == 2);
}
