#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spda/analysis.hpp"
#include "spda/dataset.hpp"

using namespace spda;

TEST_CASE("pca on x-axis data recovers the axis and all the variance") {
  std::vector<std::vector<double>> data;
  for (double t : {-2.0, -1.0, 0.5, 3.0}) data.push_back({t, 0.0, 0.0});
  PcaModel m = pca_fit(data, 3);
  REQUIRE(m.components.size() == 1);  // rank 1
  CHECK(std::abs(m.components[0][0]) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.components[0][0] > 0.0);  // sign fixed positive
  CHECK(std::abs(m.components[0][1]) < 1e-9);
  double total_var = 0.0;
  for (const auto& v : data) {
    double d = v[0] - 0.125;
    total_var += d * d;
  }
  total_var /= 3.0;  // unbiased over n-1
  CHECK(m.explained_variance[0] == doctest::Approx(total_var).epsilon(1e-9));
}

TEST_CASE("two points give a single component along their difference") {
  std::vector<std::vector<double>> data = {{1.0, 2.0, 3.0}, {2.0, 4.0, 5.0}};
  PcaModel m = pca_fit(data, 2);
  REQUIRE(m.components.size() == 1);
  // difference (1,2,2)/3
  CHECK(m.components[0][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(m.components[0][1] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(m.components[0][2] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("full-rank projection reconstructs the data") {
  SeededRng rng(5);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 9; ++i) {
    std::vector<double> v(4);
    for (double& x : v) x = rng.normal();
    data.push_back(std::move(v));
  }
  PcaModel m = pca_fit(data, 4);
  for (const auto& v : data) {
    std::vector<double> back = pca_reconstruct(m, pca_project(m, v));
    for (size_t d = 0; d < v.size(); ++d) CHECK(std::abs(back[d] - v[d]) < 1e-5);
  }
}

TEST_CASE("pca components are orthonormal with non-increasing variances") {
  SeededRng rng(6);
  std::vector<std::vector<double>> data;
  for (int i = 0; i < 20; ++i) {
    std::vector<double> v(6);
    for (size_t d = 0; d < v.size(); ++d) v[d] = rng.normal() * (d + 1);
    data.push_back(std::move(v));
  }
  PcaModel m = pca_fit(data, 5);
  for (size_t a = 0; a < m.components.size(); ++a) {
    for (size_t b = 0; b <= a; ++b) {
      double dot = 0.0;
      for (size_t d = 0; d < m.components[a].size(); ++d)
        dot += m.components[a][d] * m.components[b][d];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-6);
    }
    if (a > 0) CHECK(m.explained_variance[a] <= m.explained_variance[a - 1] + 1e-12);
  }
  // reconstruction error is monotonically non-increasing in component count
  double prev_err = 1e100;
  for (int k = 1; k <= 5; ++k) {
    PcaModel mk = pca_fit(data, k);
    double err = 0.0;
    for (const auto& v : data) {
      std::vector<double> back = pca_reconstruct(mk, pca_project(mk, v));
      for (size_t d = 0; d < v.size(); ++d) err += (back[d] - v[d]) * (back[d] - v[d]);
    }
    CHECK(err <= prev_err + 1e-9);
    prev_err = err;
  }
}

TEST_CASE("degenerate pca input is rejected") {
  std::vector<std::vector<double>> same(5, std::vector<double>{1.0, 2.0});
  CHECK_THROWS(pca_fit(same, 1));
  std::vector<std::vector<double>> one = {{1.0, 2.0}};
  CHECK_THROWS(pca_fit(one, 1));
}

TEST_CASE("diag gaussian fit: floor, hand case, shape") {
  std::vector<std::vector<float>> same(4, std::vector<float>{0.5f, -1.0f});
  DiagGaussian g = fit_diag_gaussian(same);
  CHECK(g.mean[0] == doctest::Approx(0.5));
  CHECK(g.mean[1] == doctest::Approx(-1.0));
  CHECK(g.var[0] == kVarianceFloor);
  CHECK(g.var[1] == kVarianceFloor);

  std::vector<std::vector<float>> pm = {{-1.0f, 1.0f}, {1.0f, -1.0f}};
  DiagGaussian g2 = fit_diag_gaussian(pm);
  CHECK(g2.mean[0] == doctest::Approx(0.0));
  CHECK(g2.var[0] == doctest::Approx(2.0));  // unbiased: ((1)^2 + (1)^2) / (2-1)
  CHECK(g2.dim() == 2);

  std::vector<std::vector<float>> single = {{1.0f}};
  CHECK_THROWS(fit_diag_gaussian(single));
}

TEST_CASE("kl divergence closed forms and asymmetry") {
  DiagGaussian p{{0.0}, {1.0}};
  CHECK(kl_diag_gaussian(p, p) == 0.0);

  DiagGaussian q{{1.0}, {1.0}};
  CHECK(std::abs(kl_diag_gaussian(p, q) - 0.5) < 1e-10);

  DiagGaussian wide{{0.0}, {4.0}};
  double pq = kl_diag_gaussian(p, wide);  // ln 2 + 1/8 - 1/2
  double qp = kl_diag_gaussian(wide, p);  // -ln 2 + 2 - 1/2
  CHECK(pq == doctest::Approx(std::log(2.0) + 0.125 - 0.5).epsilon(1e-12));
  CHECK(qp == doctest::Approx(-std::log(2.0) + 2.0 - 0.5).epsilon(1e-12));
  CHECK(pq != qp);
  CHECK(pq >= 0.0);
  CHECK(qp >= 0.0);

  DiagGaussian bad{{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS(kl_diag_gaussian(p, bad));
}

TEST_CASE("neighborhood check on far-apart constant images") {
  std::vector<std::vector<double>> originals = {std::vector<double>(16, 0.0),
                                                std::vector<double>(16, 1.0)};
  std::vector<std::pair<size_t, std::vector<double>>> augmented = {
      {0, std::vector<double>(16, 0.0)}, {1, std::vector<double>(16, 1.0)}};
  NeighborhoodReport r = neighborhood_check(originals, augmented);
  CHECK(r.fraction == 1.0);
  CHECK(r.items[0].d_self == 0.0);
}

TEST_CASE("an SP image placed exactly on another original fails the strict test") {
  std::vector<std::vector<double>> originals = {std::vector<double>(8, 0.0),
                                                std::vector<double>(8, 1.0)};
  std::vector<std::pair<size_t, std::vector<double>>> augmented = {
      {0, std::vector<double>(8, 1.0)}};  // sits on original 1
  NeighborhoodReport r = neighborhood_check(originals, augmented);
  CHECK(r.fraction == 0.0);
  CHECK_FALSE(r.items[0].satisfied);
}

TEST_CASE("neighborhood check is invariant under a global translation") {
  SeededRng rng(8);
  std::vector<std::vector<double>> originals;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v(12);
    for (double& x : v) x = rng.normal();
    originals.push_back(std::move(v));
  }
  std::vector<std::pair<size_t, std::vector<double>>> augmented;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v = originals[static_cast<size_t>(i)];
    for (double& x : v) x += 0.05 * rng.normal();
    augmented.emplace_back(static_cast<size_t>(i), std::move(v));
  }
  NeighborhoodReport base = neighborhood_check(originals, augmented);

  auto shifted_o = originals;
  auto shifted_a = augmented;
  for (auto& v : shifted_o)
    for (double& x : v) x += 17.5;
  for (auto& [src, v] : shifted_a)
    for (double& x : v) x += 17.5;
  NeighborhoodReport shifted = neighborhood_check(shifted_o, shifted_a);
  CHECK(shifted.fraction == base.fraction);
  for (size_t i = 0; i < base.items.size(); ++i)
    CHECK(shifted.items[i].satisfied == base.items[i].satisfied);
}

TEST_CASE("unmatched augmented images are rejected") {
  std::vector<std::vector<double>> originals = {std::vector<double>(4, 0.0),
                                                std::vector<double>(4, 1.0)};
  std::vector<std::pair<size_t, std::vector<double>>> augmented = {
      {7, std::vector<double>(4, 0.5)}};
  CHECK_THROWS(neighborhood_check(originals, augmented));
}

TEST_CASE("flatten_image resizes and averages channels") {
  Tensor img = Tensor::image2d(8, 8, 3);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = (y < 4 ? 0.0f : 0.9f) + 0.05f * c;
  std::vector<double> flat = flatten_image(img, 4);
  REQUIRE(flat.size() == 16);
  CHECK(flat[0] == doctest::Approx(0.05).epsilon(1e-6));    // top rows
  CHECK(flat[15] == doctest::Approx(0.95).epsilon(1e-6));   // bottom rows
}

TEST_CASE("identical training sets give identical VAE pairs in the comparison") {
  SyntheticConfig cfg;
  cfg.size = 64;
  cfg.num_samples = 10;
  SeededRng rng(9);
  auto samples = synthesize_samples(cfg, rng);
  std::vector<Tensor> train, test;
  for (int i = 0; i < 7; ++i) train.push_back(samples[static_cast<size_t>(i)].image);
  for (int i = 7; i < 10; ++i) test.push_back(samples[static_cast<size_t>(i)].image);

  VaeSpec spec;
  spec.hidden = 24;
  VaeTrainConfig vae_cfg;
  vae_cfg.steps = 120;
  DistributionComparison r = distribution_comparison(train, train, test, spec, vae_cfg);
  CHECK(r.kl_test_train_a == r.kl_test_train_b);
  CHECK(r.kl_train_test_a == r.kl_train_test_b);
  CHECK(std::isfinite(r.kl_test_train_a));
  CHECK(r.kl_test_train_a >= 0.0);
  CHECK(r.kl_train_test_a >= 0.0);
  CHECK(!r.summary.empty());
}
