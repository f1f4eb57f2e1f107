#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spda/tensor.hpp"
#include "spda/train.hpp"

namespace spda {

// Diagonal Gaussian with per-dimension mean and variance (floored at 1e-8).
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> var;

  size_t dim() const { return mean.size(); }
};

constexpr double kVarianceFloor = 1e-8;

// Per-dimension sample mean and unbiased variance over >= 2 vectors.
DiagGaussian fit_diag_gaussian(const std::vector<std::vector<float>>& latents);

// KL(p || q) = sum_d [ ln(sq/sp) + (sp^2 + (mp-mq)^2) / (2 sq^2) - 1/2 ].
double kl_diag_gaussian(const DiagGaussian& p, const DiagGaussian& q);

struct PcaModel {
  std::vector<double> mean;
  std::vector<std::vector<double>> components;  // orthonormal rows, variance order
  std::vector<double> explained_variance;       // non-increasing
};

// Top eigenvectors of the sample covariance via the Gram matrix; the number
// of returned components is capped by the numerical rank of the data. Signs
// are fixed so each component's largest-magnitude entry is positive.
PcaModel pca_fit(const std::vector<std::vector<double>>& data, int n_components);
std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& v);
std::vector<double> pca_reconstruct(const PcaModel& model, const std::vector<double>& coords);

// Bilinear resize to size x size and channel-averaged flattening, the common
// vector space for image distances.
std::vector<double> flatten_image(const Tensor& image, int analysis_size);

struct NeighborhoodReport {
  struct Item {
    size_t augmented_index = 0;
    size_t source = 0;
    double d_self = 0.0;           // distance to its own original
    double d_nearest_other = 0.0;  // min distance between the original and other originals
    bool satisfied = false;
  };
  std::vector<Item> items;
  double fraction = 0.0;
};

// Footnote-style closeness: an augmented vector satisfies the property when
// its Euclidean distance to its source original is strictly smaller than the
// distance from that original to every other original. With pca_components
// > 0 the test runs on PCA projections fitted over all vectors.
NeighborhoodReport neighborhood_check(
    const std::vector<std::vector<double>>& originals,
    const std::vector<std::pair<size_t, std::vector<double>>>& augmented,
    int pca_components = 0);

struct DistributionComparison {
  // D_KL(P(z_test) || P(z_train)) and the reverse, for the original-only
  // model (A) and the augmented-data model (B).
  double kl_test_train_a = 0.0;
  double kl_test_train_b = 0.0;
  double kl_train_test_a = 0.0;
  double kl_train_test_b = 0.0;
  std::string summary;
};

// Trains VAE-A on the originals and VAE-B on the augmented set with identical
// settings, encodes each model's own training set plus the shared test set,
// fits diagonal Gaussians over the latents and reports the four divergences.
DistributionComparison distribution_comparison(const std::vector<Tensor>& train_ori,
                                               const std::vector<Tensor>& train_aug,
                                               const std::vector<Tensor>& test,
                                               const VaeSpec& vae_spec,
                                               const VaeTrainConfig& vae_config);

}  // namespace spda
