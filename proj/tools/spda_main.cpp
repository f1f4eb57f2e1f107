// spda: superpixel-based data augmentation toolkit.
//
// Subcommands cover the full pipeline: synth -> slic/superpixelize/augment ->
// train -> eval/metrics -> analyze. Every stage is a thin shell over the
// library; all randomness is routed through --seed and results are
// reproducible bit for bit. SPDA_THREADS caps kernel parallelism.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "spda/analysis.hpp"
#include "spda/dataset.hpp"
#include "spda/image_io.hpp"
#include "spda/metrics.hpp"
#include "spda/nn.hpp"
#include "spda/parallel.hpp"
#include "spda/slic.hpp"
#include "spda/spda_transform.hpp"
#include "spda/train.hpp"

namespace fs = std::filesystem;
using namespace spda;

namespace {

struct SlicCli {
  std::string input, output, overlay;
  SlicParams params;
};

int run_slic(const SlicCli& cli) {
  Tensor image = read_image_any(cli.input);
  CellMap cells = image.is_3d() ? slic_segment_3d(image, cli.params)
                                : slic_segment(image, cli.params);
  write_cellmap(cli.output, cells);
  if (!cli.overlay.empty()) {
    if (image.is_3d()) throw std::runtime_error("overlay output is 2D only");
    write_png(cli.overlay, boundary_overlay(image, cells));
  }
  std::printf("cells=%d requested=%d\n", cells.num_cells, cli.params.s);
  return 0;
}

struct SuperpixelizeCli {
  std::string input, cells, output;
  int s = 0;
  double compactness = 20.0;
};

int run_superpixelize(const SuperpixelizeCli& cli) {
  Tensor image = read_image_any(cli.input);
  Tensor out;
  if (!cli.cells.empty()) {
    out = superpixelize(image, read_cellmap(cli.cells));
  } else if (cli.s > 0) {
    SlicParams params;
    params.s = cli.s;
    params.compactness = cli.compactness;
    out = sp_transform(image, cli.s, params);
  } else {
    throw std::runtime_error("superpixelize needs --cells or --s");
  }
  write_image_any(cli.output, out);
  return 0;
}

struct SynthCli {
  std::string out_dir;
  SyntheticConfig config;
  uint64_t seed = 1;
};

int run_synth(const SynthCli& cli) {
  SeededRng rng(cli.seed);
  DatasetManifest m = generate_synthetic(cli.config, rng, cli.out_dir);
  std::printf("wrote %d samples to %s\n", m.n, cli.out_dir.c_str());
  return 0;
}

struct AugmentCli {
  std::string manifest, out_dir;
  SpdaParams params;
  int count = 5;
  double compactness = 20.0;
  std::vector<int> explicit_s;
  uint64_t seed = 1;
};

int run_augment(const AugmentCli& cli) {
  DatasetManifest manifest = load_manifest(cli.manifest);
  fs::create_directories(cli.out_dir);
  SpdaParams params = cli.params;
  params.offline_s_values = cli.explicit_s;
  SlicParams slic;
  slic.compactness = cli.compactness;

  std::vector<ManifestEntry> originals;
  for (const auto& e : manifest.entries)
    if (e.is_original()) originals.push_back(e);

  DatasetManifest out;
  out.root = cli.out_dir;
  out.n = static_cast<int>(originals.size());
  out.num_classes = manifest.num_classes;

  // Copy the originals into the output tree so the new manifest stands alone.
  for (const ManifestEntry& e : originals) {
    Sample s = load_sample(manifest, e);
    write_image_any(fs::path(cli.out_dir) / (e.id + fs::path(e.image_path).extension().string()),
                    s.image);
    write_label_any(fs::path(cli.out_dir) /
                        (e.id + "_label" + fs::path(e.label_path).extension().string()),
                    s.label);
  }

  SeededRng root(cli.seed);
  std::vector<std::vector<ManifestEntry>> generated(originals.size());
#pragma omp parallel for num_threads(max_threads()) schedule(dynamic)
  for (int64_t i = 0; i < static_cast<int64_t>(originals.size()); ++i) {
    const ManifestEntry& e = originals[static_cast<size_t>(i)];
    Sample s = load_sample(manifest, e);
    SeededRng rng = root.stream("augment", static_cast<uint64_t>(i));
    std::vector<Sample> augmented = generate_augmented_set(s, params, slic, rng, cli.count);
    std::vector<ManifestEntry> local;
    for (const Sample& aug : augmented) {
      std::string ext = fs::path(e.image_path).extension().string();
      std::string name = e.id + "_sp" + std::to_string(aug.provenance.s) + ext;
      write_image_any(fs::path(cli.out_dir) / name, aug.image);
      ManifestEntry entry;
      entry.id = e.id + "_sp" + std::to_string(aug.provenance.s);
      entry.image_path = name;
      entry.label_path = e.id + "_label" + fs::path(e.label_path).extension().string();
      entry.provenance = aug.provenance;
      entry.source_id = e.id;
      local.push_back(std::move(entry));
    }
    generated[static_cast<size_t>(i)] = std::move(local);
  }

  for (size_t i = 0; i < originals.size(); ++i) {
    const ManifestEntry& e = originals[i];
    ManifestEntry base;
    base.id = e.id;
    base.image_path = e.id + fs::path(e.image_path).extension().string();
    base.label_path = e.id + "_label" + fs::path(e.label_path).extension().string();
    base.provenance = Provenance{};
    out.entries.push_back(std::move(base));
    for (auto& g : generated[i]) out.entries.push_back(std::move(g));
  }
  save_manifest(out, fs::path(cli.out_dir) / "manifest.json");
  std::printf("wrote %zu entries (%d originals) to %s\n", out.entries.size(), out.n,
              cli.out_dir.c_str());
  return 0;
}

struct TrainCli {
  std::string manifest, out_dir;
  TrainConfig config;
  int base_channels = 8;
  int input_size = 0;
};

int run_train(const TrainCli& cli) {
  DatasetManifest manifest = load_manifest(cli.manifest);
  std::vector<Sample> originals = load_all(manifest, /*originals_only=*/true);
  if (originals.front().image.is_3d())
    throw std::runtime_error("train: the trainer is 2D only");
  fs::create_directories(cli.out_dir);

  TrainConfig config = cli.config;
  if (cli.input_size > 0) {
    config.input_h = cli.input_size;
    config.input_w = cli.input_size;
  }
  int h = originals.front().image.height();
  int w = originals.front().image.width();
  if (config.input_h <= 0 || config.input_h > h) config.input_h = h;
  if (config.input_w <= 0 || config.input_w > w) config.input_w = w;
  if (config.input_h % 4 != 0 || config.input_w % 4 != 0)
    throw std::runtime_error("train: input size must be divisible by 4");

  NetworkSpec spec = NetworkSpec::toy_fcn(originals.front().image.channels(),
                                          manifest.num_classes, cli.base_channels);
  std::ofstream log(fs::path(cli.out_dir) / "metrics.log");
  TrainResult result = train_segmentation(originals, spec, config, &log);
  save_checkpoint(fs::path(cli.out_dir) / "final.ckpt",
                  make_fcn_checkpoint(result.net, &result.adam, result.steps_run));
  std::printf("trained %lld steps, final loss=%.6f%s\n",
              static_cast<long long>(result.steps_run), result.history.back().loss,
              result.plateau_stop ? " (plateau stop)" : "");
  return 0;
}

struct EvalCli {
  std::string manifest, checkpoint;
  int sp_s = 0;
  double compactness = 20.0;
};

int run_eval(const EvalCli& cli) {
  DatasetManifest manifest = load_manifest(cli.manifest);
  std::vector<Sample> samples = load_all(manifest, /*originals_only=*/true);
  Network<float> net = network_from_checkpoint(load_checkpoint(cli.checkpoint));
  if (cli.sp_s > 0) {
    SlicParams slic;
    slic.compactness = cli.compactness;
    for (Sample& s : samples) s.image = sp_transform(s.image, cli.sp_s, slic);
  }
  double miu = evaluate_mean_iu(net, samples);
  if (cli.sp_s > 0)
    std::printf("samples=%zu sp=%d mean_iu=%.6f\n", samples.size(), cli.sp_s, miu);
  else
    std::printf("samples=%zu mean_iu=%.6f\n", samples.size(), miu);
  return 0;
}

struct MetricsCli {
  std::string pred, gt, cells;
  int num_classes = 2;
};

int run_metrics(const MetricsCli& cli) {
  LabelMap pred = read_label_any(cli.pred, cli.num_classes);
  LabelMap gt = read_label_any(cli.gt, cli.num_classes);
  IouReport iou = mean_iu(pred, gt, cli.num_classes);
  std::vector<ClassBoundaryMetrics> per_class;
  bool boundaries_ok = true;
  for (int c = 0; c < cli.num_classes; ++c) {
    double d = dice(pred, gt, c);
    if (iou.valid[c])
      std::printf("class %d: dice=%.6f iou=%.6f\n", c, d, iou.per_class[c]);
    else
      std::printf("class %d: dice=%.6f iou=n/a\n", c, d);
    BoundarySet pb = extract_boundary(pred, c);
    BoundarySet gb = extract_boundary(gt, c);
    if (pb.empty() || gb.empty()) {
      std::printf("class %d: boundary metrics undefined (empty boundary)\n", c);
      boundaries_ok = false;
      continue;
    }
    ClassBoundaryMetrics m{d, adb(pb, gb), hausdorff_symmetric(pb, gb)};
    std::printf("class %d: adb=%.6f hausdorff=%.6f\n", c, m.adb, m.hausdorff);
    per_class.push_back(m);
  }
  std::printf("mean_iu=%.6f\n", iou.mean);
  if (boundaries_ok && !per_class.empty())
    std::printf("combined_score_s=%.6f\n", combined_score_s(per_class));
  if (!cli.cells.empty()) {
    CellMap cells = read_cellmap(cli.cells);
    std::printf("boundary_recall=%.6f\n", boundary_recall(cells, gt));
    std::printf("compactness=%.6f\n", compactness(cells));
  }
  return 0;
}

struct AnalyzeCommon {
  std::string manifest;
  int analysis_size = 64;
};

int run_analyze_pca(const AnalyzeCommon& cli, int components, const std::string& out_path) {
  DatasetManifest m = load_manifest(cli.manifest);
  std::vector<std::vector<double>> vectors;
  std::vector<std::string> tags, ids;
  for (const auto& e : m.entries) {
    vectors.push_back(flatten_image(load_sample(m, e).image, cli.analysis_size));
    tags.push_back(e.is_original() ? "original" : "spda");
    ids.push_back(e.id);
  }
  PcaModel model = pca_fit(vectors, components);
  std::ofstream os(out_path);
  if (!os) throw std::runtime_error("cannot create " + out_path);
  for (size_t i = 0; i < vectors.size(); ++i) {
    std::vector<double> p = pca_project(model, vectors[i]);
    for (size_t c = 0; c < p.size(); ++c) os << p[c] << (c + 1 < p.size() ? "\t" : "");
    os << "\t" << tags[i] << "\t" << ids[i] << "\n";
  }
  std::printf("components=%zu explained_variance:", model.components.size());
  for (double v : model.explained_variance) std::printf(" %.5g", v);
  std::printf("\nwrote %s\n", out_path.c_str());
  return 0;
}

int run_analyze_nn_check(const AnalyzeCommon& cli, int pca_components) {
  DatasetManifest m = load_manifest(cli.manifest);
  std::vector<std::string> original_ids;
  std::vector<std::vector<double>> ori;
  for (const auto& e : m.entries)
    if (e.is_original()) {
      original_ids.push_back(e.id);
      ori.push_back(flatten_image(load_sample(m, e).image, cli.analysis_size));
    }
  std::vector<std::pair<size_t, std::vector<double>>> aug;
  for (const auto& e : m.entries) {
    if (e.provenance.kind != Provenance::Kind::Spda) continue;
    auto it = std::find(original_ids.begin(), original_ids.end(), e.source_id);
    if (it == original_ids.end())
      throw std::runtime_error("augmented entry " + e.id + " has no source in the manifest");
    aug.emplace_back(static_cast<size_t>(it - original_ids.begin()),
                     flatten_image(load_sample(m, e).image, cli.analysis_size));
  }
  NeighborhoodReport r = neighborhood_check(ori, aug, pca_components);
  for (const auto& item : r.items)
    std::printf("sp=%zu source=%s d_self=%.4f d_nearest_other=%.4f %s\n",
                item.augmented_index, original_ids[item.source].c_str(), item.d_self,
                item.d_nearest_other, item.satisfied ? "ok" : "VIOLATED");
  std::printf("fraction=%.4f over %zu augmented images\n", r.fraction, r.items.size());
  return 0;
}

struct KlCli {
  std::string train_ori, train_aug, test;
  VaeSpec spec;
  VaeTrainConfig config;
};

int run_analyze_kl(const KlCli& cli) {
  auto images_of = [](const std::string& path) {
    DatasetManifest m = load_manifest(path);
    std::vector<Tensor> out;
    for (const auto& e : m.entries) out.push_back(load_sample(m, e).image);
    return out;
  };
  DistributionComparison r =
      distribution_comparison(images_of(cli.train_ori), images_of(cli.train_aug),
                              images_of(cli.test), cli.spec, cli.config);
  std::printf("KL(test||train)   original:  %.6f\n", r.kl_test_train_a);
  std::printf("KL(test||train)   augmented: %.6f\n", r.kl_test_train_b);
  std::printf("KL(train||test)   original:  %.6f\n", r.kl_train_test_a);
  std::printf("KL(train||test)   augmented: %.6f\n", r.kl_train_test_b);
  std::printf("%s\n", r.summary.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"superpixel-based data augmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  uint64_t seed = 1;
  app.add_option("--seed", seed, "global random seed")->capture_default_str();

  SlicCli slic_cli;
  CLI::App* slic_cmd = app.add_subcommand("slic", "segment an image/volume into superpixels");
  slic_cmd->add_option("--in", slic_cli.input, "input image (.png) or volume (.vol)")
      ->required();
  slic_cmd->add_option("--s", slic_cli.params.s, "desired cell count")->required();
  slic_cmd->add_option("--compactness", slic_cli.params.compactness,
                       "SLIC compactness m (paper default 20)")
      ->capture_default_str();
  slic_cmd->add_option("--iters", slic_cli.params.max_iters, "assignment/update iterations")
      ->capture_default_str();
  slic_cmd->add_option("--min-cell-fraction", slic_cli.params.min_cell_fraction,
                       "fragment merge threshold as a fraction of N/s")
      ->capture_default_str();
  slic_cmd->add_option("--out", slic_cli.output, "output cell map (.vol)")->required();
  slic_cmd->add_option("--overlay", slic_cli.overlay, "optional boundary overlay PNG");

  SuperpixelizeCli sp_cli;
  CLI::App* sp_cmd = app.add_subcommand("superpixelize", "replace each cell by its mean");
  sp_cmd->add_option("--in", sp_cli.input, "input image")->required();
  sp_cmd->add_option("--cells", sp_cli.cells, "existing cell map (.vol)");
  sp_cmd->add_option("--s", sp_cli.s, "segment first with this cell count");
  sp_cmd->add_option("--compactness", sp_cli.compactness, "SLIC compactness")
      ->capture_default_str();
  sp_cmd->add_option("--out", sp_cli.output, "output image")->required();

  SynthCli synth_cli;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
  synth_cmd->add_option("--out", synth_cli.out_dir, "output directory")->required();
  synth_cmd->add_option("--size", synth_cli.config.size, "image side length (>=32)")
      ->capture_default_str();
  synth_cmd->add_option("--classes", synth_cli.config.num_classes, "class count in [2,4]")
      ->capture_default_str();
  synth_cmd->add_option("--count", synth_cli.config.num_samples, "sample count")
      ->capture_default_str();
  synth_cmd->add_option("--noise", synth_cli.config.noise_sigma, "Gaussian pixel noise sigma")
      ->capture_default_str();
  synth_cmd->add_option("--texture", synth_cli.config.texture_amplitude,
                        "per-class texture amplitude")
      ->capture_default_str();
  synth_cmd->add_option("--channels", synth_cli.config.channels, "1 gray or 3 RGB")
      ->capture_default_str();

  AugmentCli aug_cli;
  CLI::App* aug_cmd = app.add_subcommand("augment", "write SP copies plus a new manifest");
  aug_cmd->add_option("--manifest", aug_cli.manifest, "input manifest")->required();
  aug_cmd->add_option("--out", aug_cli.out_dir, "output directory")->required();
  aug_cmd->add_option("--s-lo", aug_cli.params.s_lo, "lower s bound (paper 2D: 800)")
      ->capture_default_str();
  aug_cmd->add_option("--s-hi", aug_cli.params.s_hi, "upper s bound (paper 2D: 2000)")
      ->capture_default_str();
  aug_cmd->add_option("--count", aug_cli.count, "evenly spaced s values per sample")
      ->capture_default_str();
  aug_cmd->add_option("--s", aug_cli.explicit_s, "explicit s values (overrides --count)");
  aug_cmd->add_option("--compactness", aug_cli.compactness, "SLIC compactness")
      ->capture_default_str();

  TrainCli train_cli;
  CLI::App* train_cmd = app.add_subcommand("train", "train the toy FCN with Algorithm-1 batches");
  train_cmd->add_option("--manifest", train_cli.manifest, "training manifest")->required();
  train_cmd->add_option("--out", train_cli.out_dir, "output directory")->required();
  train_cmd->add_option("--batch", train_cli.config.batch_size, "mini-batch size (paper: 8)")
      ->capture_default_str();
  train_cmd->add_option("--steps", train_cli.config.max_steps, "max training steps")
      ->capture_default_str();
  train_cmd->add_option("--s-lo", train_cli.config.s_lo, "lower s bound")->capture_default_str();
  train_cmd->add_option("--s-hi", train_cli.config.s_hi, "upper s bound")->capture_default_str();
  double lambda_flag = -1.0;
  train_cmd->add_option("--lambda", lambda_flag,
                        "override lambda (default 1/(s_hi-s_lo+1))");
  train_cmd->add_option("--lr0", train_cli.config.lr.initial, "initial learning rate")
      ->capture_default_str();
  train_cmd->add_option("--lr1", train_cli.config.lr.decayed, "decayed learning rate")
      ->capture_default_str();
  train_cmd->add_option("--lr-boundary", train_cli.config.lr.boundary,
                        "step after which the rate decays (paper: 30000)")
      ->capture_default_str();
  train_cmd->add_option("--input-size", train_cli.input_size,
                        "training crop (paper 2D: 192); 0 = full image");
  train_cmd->add_option("--base-channels", train_cli.base_channels, "FCN width")
      ->capture_default_str();
  train_cmd->add_option("--compactness", train_cli.config.slic.compactness, "SLIC compactness")
      ->capture_default_str();
  bool no_spda = false, no_basic = false;
  train_cmd->add_flag("--no-spda", no_spda, "disable SPDA (plain-DA baseline)");
  train_cmd->add_flag("--no-basic", no_basic, "disable basic crop/flip/rotation");
  train_cmd->add_option("--val-fraction", train_cli.config.val_fraction,
                        "originals held out for validation")
      ->capture_default_str();
  train_cmd->add_option("--val-interval", train_cli.config.val_interval,
                        "steps between validations")
      ->capture_default_str();
  train_cmd->add_option("--log-interval", train_cli.config.log_interval,
                        "steps between log lines")
      ->capture_default_str();
  train_cmd->add_option("--plateau-window", train_cli.config.plateau_window,
                        "plateau stop window (0 = off)")
      ->capture_default_str();

  EvalCli eval_cli;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
  eval_cmd->add_option("--manifest", eval_cli.manifest, "evaluation manifest")->required();
  eval_cmd->add_option("--checkpoint", eval_cli.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--sp", eval_cli.sp_s, "superpixelize inputs with this s first");
  eval_cmd->add_option("--compactness", eval_cli.compactness, "SLIC compactness")
      ->capture_default_str();

  MetricsCli metrics_cli;
  CLI::App* metrics_cmd = app.add_subcommand("metrics", "compare prediction and ground truth");
  metrics_cmd->add_option("--pred", metrics_cli.pred, "predicted label map")->required();
  metrics_cmd->add_option("--gt", metrics_cli.gt, "ground-truth label map")->required();
  metrics_cmd->add_option("--classes", metrics_cli.num_classes, "class count")->required();
  metrics_cmd->add_option("--cells", metrics_cli.cells,
                          "cell map for boundary recall / compactness");

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "appendix-style analyses");
  analyze_cmd->require_subcommand(1);

  AnalyzeCommon pca_common;
  int pca_components = 2;
  std::string pca_out = "pca.tsv";
  CLI::App* pca_cmd = analyze_cmd->add_subcommand("pca", "project a manifest with PCA");
  pca_cmd->add_option("--manifest", pca_common.manifest, "manifest")->required();
  pca_cmd->add_option("--components", pca_components, "projection dimensions")
      ->capture_default_str();
  pca_cmd->add_option("--size", pca_common.analysis_size, "analysis resize")
      ->capture_default_str();
  pca_cmd->add_option("--out", pca_out, "output TSV of coordinates with group tags")
      ->capture_default_str();

  AnalyzeCommon nn_common;
  int nn_pca = 0;
  CLI::App* nn_cmd =
      analyze_cmd->add_subcommand("nn-check", "nearest-original closeness check");
  nn_cmd->add_option("--manifest", nn_common.manifest, "manifest with SP provenance")
      ->required();
  nn_cmd->add_option("--pca", nn_pca, "run on PCA projections with this many components");
  nn_cmd->add_option("--size", nn_common.analysis_size, "analysis resize")
      ->capture_default_str();

  KlCli kl_cli;
  CLI::App* kl_cmd = analyze_cmd->add_subcommand("kl", "VAE latent distribution comparison");
  kl_cmd->add_option("--train-ori", kl_cli.train_ori, "originals manifest")->required();
  kl_cmd->add_option("--train-aug", kl_cli.train_aug, "augmented manifest")->required();
  kl_cmd->add_option("--test", kl_cli.test, "test manifest")->required();
  kl_cmd->add_option("--latent", kl_cli.spec.latent, "latent dimension")->capture_default_str();
  kl_cmd->add_option("--hidden", kl_cli.spec.hidden, "hidden width")->capture_default_str();
  kl_cmd->add_option("--patch", kl_cli.spec.patch, "patch side length")->capture_default_str();
  kl_cmd->add_option("--steps", kl_cli.config.steps, "VAE training steps")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*slic_cmd) return run_slic(slic_cli);
    if (*sp_cmd) return run_superpixelize(sp_cli);
    if (*synth_cmd) {
      synth_cli.seed = seed;
      return run_synth(synth_cli);
    }
    if (*aug_cmd) {
      aug_cli.seed = seed;
      return run_augment(aug_cli);
    }
    if (*train_cmd) {
      train_cli.config.seed = seed;
      train_cli.config.use_spda = !no_spda;
      train_cli.config.use_basic = !no_basic;
      if (lambda_flag >= 0.0) train_cli.config.lambda_override = lambda_flag;
      return run_train(train_cli);
    }
    if (*eval_cmd) return run_eval(eval_cli);
    if (*metrics_cmd) return run_metrics(metrics_cli);
    if (*analyze_cmd) {
      if (*pca_cmd) return run_analyze_pca(pca_common, pca_components, pca_out);
      if (*nn_cmd) return run_analyze_nn_check(nn_common, nn_pca);
      if (*kl_cmd) {
        kl_cli.config.seed = seed;
        return run_analyze_kl(kl_cli);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}
