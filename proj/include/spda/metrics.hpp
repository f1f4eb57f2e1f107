#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "spda/slic.hpp"
#include "spda/tensor.hpp"

namespace spda {

// Pixels/voxels lying on class boundaries: any position with at least one
// differing 4-neighbor (2D) or 6-neighbor (3D).
struct BoundarySet {
  int dim = 2;
  std::vector<std::array<int, 3>> points;  // (y,x,0) or (z,y,x)

  bool empty() const { return points.empty(); }
};

BoundarySet extract_boundary(const LabelMap& label, int class_id);
BoundarySet extract_boundary_all(const LabelMap& label);
BoundarySet extract_cell_boundary(const CellMap& cells);

// 2|A∩B| / (|A|+|B|); 1.0 when both masks are empty.
double dice(const LabelMap& pred, const LabelMap& gt, int class_id);

struct IouReport {
  std::vector<double> per_class;        // NaN for classes with empty union
  std::vector<bool> valid;
  double mean = 0.0;                    // over valid classes
};
IouReport mean_iu(const LabelMap& pred, const LabelMap& gt, int num_classes);

// Euclidean distances between boundary point sets; both throw on empty input
// (an absent boundary is undefined, not zero).
double hausdorff_symmetric(const BoundarySet& a, const BoundarySet& b);
double adb(const BoundarySet& a, const BoundarySet& b);  // mean of the two directed means

struct ClassBoundaryMetrics {
  double dice = 0.0;
  double adb = 0.0;
  double hausdorff = 0.0;
};

// S = sum over classes of (Dice/2 - ADB/4 - Hausdorff/30).
double combined_score_s(const std::vector<ClassBoundaryMetrics>& per_class);

// Fraction of ground-truth boundary pixels with a superpixel boundary pixel
// within tol (Chebyshev). Throws when the ground truth has no boundary.
double boundary_recall(const CellMap& cells, const LabelMap& gt, int tol_pixels = 2);

// Area-weighted mean isoperimetric quotient, 4*pi*area/perimeter^2 per cell
// (36*pi*vol^2/surface^3 in 3D), each cell clamped to 1. Perimeter/surface is
// the count of exposed unit faces, image borders included.
double compactness(const CellMap& cells);

}  // namespace spda
