#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spda/rng.hpp"
#include "spda/tensor.hpp"

namespace spda {

// Where a sample came from: an original capture, a superpixelized copy
// (recording the cell count s used), or a basic geometric transform.
struct Provenance {
  enum class Kind { Original, Spda, Basic };
  Kind kind = Kind::Original;
  int s = 0;              // Kind::Spda
  std::string transform;  // Kind::Basic descriptor, e.g. "crop=3,5;flip=x;rot=90"

  std::string to_string() const;
  static Provenance parse(const std::string& text);
  bool operator==(const Provenance&) const = default;
};

struct Sample {
  Tensor image;
  LabelMap label;
  Provenance provenance;
};

struct ManifestEntry {
  std::string id;
  std::string image_path;  // relative to the manifest file
  std::string label_path;
  Provenance provenance;
  std::string source_id;  // original this entry was derived from; empty for originals

  bool is_original() const { return provenance.kind == Provenance::Kind::Original; }
};

// Ordered sample listing with augmentation provenance. n counts originals.
struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  int n = 0;
  int num_classes = 0;
  std::filesystem::path root;  // directory the relative paths resolve against
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);

// Loads one image/label pair, validating congruence and label range.
Sample load_sample(const std::filesystem::path& image_path,
                   const std::filesystem::path& label_path, int num_classes,
                   const Provenance& provenance = {});
Sample load_sample(const DatasetManifest& m, const ManifestEntry& entry);
std::vector<Sample> load_all(const DatasetManifest& m, bool originals_only = false);

// Synthetic dataset: textured ellipse/rectangle blobs on a background, one
// class per blob kind, labels equal to the exact region masks. A pure
// function of (config, seed).
struct SyntheticConfig {
  int size = 64;
  int num_classes = 3;
  int num_samples = 20;
  float noise_sigma = 0.05f;
  float texture_amplitude = 0.15f;
  int channels = 1;  // 1 = grayscale, 3 = class-tinted RGB
};

std::vector<Sample> synthesize_samples(const SyntheticConfig& cfg, const SeededRng& rng);
DatasetManifest generate_synthetic(const SyntheticConfig& cfg, const SeededRng& rng,
                                   const std::filesystem::path& out_dir);

}  // namespace spda
