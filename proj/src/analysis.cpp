#include "spda/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "spda/parallel.hpp"

namespace spda {

DiagGaussian fit_diag_gaussian(const std::vector<std::vector<float>>& latents) {
  if (latents.size() < 2)
    throw std::invalid_argument("fit_diag_gaussian: need at least 2 samples");
  const size_t dim = latents.front().size();
  for (const auto& z : latents)
    if (z.size() != dim) throw std::invalid_argument("fit_diag_gaussian: ragged input");
  DiagGaussian g;
  g.mean.assign(dim, 0.0);
  g.var.assign(dim, 0.0);
  for (const auto& z : latents)
    for (size_t d = 0; d < dim; ++d) g.mean[d] += z[d];
  for (size_t d = 0; d < dim; ++d) g.mean[d] /= static_cast<double>(latents.size());
  for (const auto& z : latents)
    for (size_t d = 0; d < dim; ++d) {
      double diff = z[d] - g.mean[d];
      g.var[d] += diff * diff;
    }
  for (size_t d = 0; d < dim; ++d) {
    g.var[d] /= static_cast<double>(latents.size() - 1);  // unbiased
    g.var[d] = std::max(g.var[d], kVarianceFloor);
  }
  return g;
}

double kl_diag_gaussian(const DiagGaussian& p, const DiagGaussian& q) {
  if (p.dim() != q.dim()) throw std::invalid_argument("kl: dimension mismatch");
  double kl = 0.0;
  for (size_t d = 0; d < p.dim(); ++d) {
    double vp = p.var[d], vq = q.var[d];
    double dm = p.mean[d] - q.mean[d];
    kl += 0.5 * std::log(vq / vp) + (vp + dm * dm) / (2.0 * vq) - 0.5;
  }
  return kl;
}

PcaModel pca_fit(const std::vector<std::vector<double>>& data, int n_components) {
  const int n = static_cast<int>(data.size());
  if (n < 2) throw std::invalid_argument("pca: need at least 2 vectors");
  const int dim = static_cast<int>(data.front().size());
  for (const auto& v : data)
    if (static_cast<int>(v.size()) != dim) throw std::invalid_argument("pca: ragged input");
  if (n_components < 1 || n_components > dim)
    throw std::invalid_argument("pca: n_components out of range");

  PcaModel model;
  model.mean.assign(dim, 0.0);
  for (const auto& v : data)
    for (int d = 0; d < dim; ++d) model.mean[d] += v[d];
  for (int d = 0; d < dim; ++d) model.mean[d] /= n;

  Eigen::MatrixXd x(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) x(i, d) = data[i][d] - model.mean[d];

  // Eigendecomposition of the small Gram matrix X X^T; eigenvectors of the
  // covariance X^T X / (n-1) follow by projection.
  Eigen::MatrixXd gram = x * x.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca: eigensolver failed");
  Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  Eigen::MatrixXd evecs = solver.eigenvectors();

  const double max_eval = std::max(evals(n - 1), 0.0);
  if (max_eval <= 1e-12)
    throw std::invalid_argument("pca: degenerate input (all vectors identical)");
  const double rank_tol = max_eval * 1e-10;

  for (int rank_idx = n - 1; rank_idx >= 0; --rank_idx) {
    if (static_cast<int>(model.components.size()) >= n_components) break;
    double lambda = evals(rank_idx);
    if (lambda <= rank_tol) break;  // numerical rank reached
    Eigen::VectorXd comp = x.transpose() * evecs.col(rank_idx);
    comp.normalize();
    // Deterministic sign: largest-magnitude entry positive.
    int arg = 0;
    for (int d = 1; d < dim; ++d)
      if (std::abs(comp(d)) > std::abs(comp(arg))) arg = d;
    if (comp(arg) < 0.0) comp = -comp;
    model.components.emplace_back(comp.data(), comp.data() + dim);
    model.explained_variance.push_back(lambda / (n - 1));
  }
  return model;
}

std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& v) {
  if (v.size() != model.mean.size()) throw std::invalid_argument("pca: dimension mismatch");
  std::vector<double> out(model.components.size(), 0.0);
  for (size_t c = 0; c < model.components.size(); ++c) {
    double dot = 0.0;
    for (size_t d = 0; d < v.size(); ++d)
      dot += (v[d] - model.mean[d]) * model.components[c][d];
    out[c] = dot;
  }
  return out;
}

std::vector<double> pca_reconstruct(const PcaModel& model, const std::vector<double>& coords) {
  if (coords.size() != model.components.size())
    throw std::invalid_argument("pca: coordinate count mismatch");
  std::vector<double> out = model.mean;
  for (size_t c = 0; c < coords.size(); ++c)
    for (size_t d = 0; d < out.size(); ++d) out[d] += coords[c] * model.components[c][d];
  return out;
}

std::vector<double> flatten_image(const Tensor& image, int analysis_size) {
  if (image.is_3d()) throw std::invalid_argument("flatten_image: 2D images only");
  const int h = image.height(), w = image.width(), c = image.channels();
  const int n = analysis_size;
  std::vector<double> out(static_cast<size_t>(n) * n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      // Bilinear sample at the pixel-center mapping.
      double sy = (y + 0.5) * h / n - 0.5;
      double sx = (x + 0.5) * w / n - 0.5;
      int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, h - 1);
      int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, w - 1);
      int y1 = std::min(y0 + 1, h - 1);
      int x1 = std::min(x0 + 1, w - 1);
      double fy = std::clamp(sy - y0, 0.0, 1.0);
      double fx = std::clamp(sx - x0, 0.0, 1.0);
      double acc = 0.0;
      for (int ch = 0; ch < c; ++ch) {
        double v00 = image.at(y0, x0, ch), v01 = image.at(y0, x1, ch);
        double v10 = image.at(y1, x0, ch), v11 = image.at(y1, x1, ch);
        acc += (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
      }
      out[static_cast<size_t>(y) * n + x] = acc / c;
    }
  }
  return out;
}

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

NeighborhoodReport neighborhood_check(
    const std::vector<std::vector<double>>& originals,
    const std::vector<std::pair<size_t, std::vector<double>>>& augmented,
    int pca_components) {
  if (originals.size() < 2)
    throw std::invalid_argument("neighborhood_check: need at least 2 originals");
  for (const auto& [src, vec] : augmented)
    if (src >= originals.size())
      throw std::invalid_argument("neighborhood_check: augmented image has no source");

  std::vector<std::vector<double>> ori = originals;
  std::vector<std::pair<size_t, std::vector<double>>> aug = augmented;
  if (pca_components > 0) {
    std::vector<std::vector<double>> all = originals;
    for (const auto& [src, vec] : augmented) all.push_back(vec);
    PcaModel model = pca_fit(all, pca_components);
    for (auto& v : ori) v = pca_project(model, v);
    for (auto& [src, vec] : aug) vec = pca_project(model, vec);
  }

  // Nearest other original per source image.
  std::vector<double> nearest_other(ori.size(),
                                    std::numeric_limits<double>::infinity());
#pragma omp parallel for num_threads(max_threads()) schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(ori.size()); ++i)
    for (size_t j = 0; j < ori.size(); ++j)
      if (j != static_cast<size_t>(i))
        nearest_other[i] = std::min(nearest_other[i], euclidean(ori[i], ori[j]));

  NeighborhoodReport report;
  int64_t satisfied = 0;
  for (size_t a = 0; a < aug.size(); ++a) {
    NeighborhoodReport::Item item;
    item.augmented_index = a;
    item.source = aug[a].first;
    item.d_self = euclidean(aug[a].second, ori[item.source]);
    item.d_nearest_other = nearest_other[item.source];
    item.satisfied = item.d_self < item.d_nearest_other;
    satisfied += item.satisfied;
    report.items.push_back(std::move(item));
  }
  report.fraction =
      aug.empty() ? 0.0 : static_cast<double>(satisfied) / static_cast<double>(aug.size());
  return report;
}

DistributionComparison distribution_comparison(const std::vector<Tensor>& train_ori,
                                               const std::vector<Tensor>& train_aug,
                                               const std::vector<Tensor>& test,
                                               const VaeSpec& vae_spec,
                                               const VaeTrainConfig& vae_config) {
  if (train_ori.empty() || train_aug.empty() || test.empty())
    throw std::invalid_argument("distribution_comparison: empty image set");

  auto patches_of = [&](const std::vector<Tensor>& images) {
    std::vector<std::vector<float>> all;
    for (const Tensor& img : images) {
      auto p = extract_patches(img, vae_spec.patch);
      all.insert(all.end(), p.begin(), p.end());
    }
    return all;
  };

  // Identical settings for both models; the training data is the only
  // difference.
  Vae<float> vae_a = train_vae(patches_of(train_ori), vae_spec, vae_config);
  Vae<float> vae_b = train_vae(patches_of(train_aug), vae_spec, vae_config);

  DiagGaussian z_ori_a = fit_diag_gaussian(encode_latents(vae_a, train_ori));
  DiagGaussian z_test_a = fit_diag_gaussian(encode_latents(vae_a, test));
  DiagGaussian z_aug_b = fit_diag_gaussian(encode_latents(vae_b, train_aug));
  DiagGaussian z_test_b = fit_diag_gaussian(encode_latents(vae_b, test));

  DistributionComparison out;
  out.kl_test_train_a = kl_diag_gaussian(z_test_a, z_ori_a);
  out.kl_test_train_b = kl_diag_gaussian(z_test_b, z_aug_b);
  out.kl_train_test_a = kl_diag_gaussian(z_ori_a, z_test_a);
  out.kl_train_test_b = kl_diag_gaussian(z_aug_b, z_test_b);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "KL(test||train): augmented %.4f %s original %.4f; "
                "KL(train||test): augmented %.4f %s original %.4f",
                out.kl_test_train_b, out.kl_test_train_b < out.kl_test_train_a ? "<" : ">=",
                out.kl_test_train_a, out.kl_train_test_b,
                out.kl_train_test_b < out.kl_train_test_a ? "<" : ">=", out.kl_train_test_a);
  out.summary = buf;
  return out;
}

}  // namespace spda
