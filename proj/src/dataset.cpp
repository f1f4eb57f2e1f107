#include "spda/dataset.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "spda/image_io.hpp"

namespace spda {

using nlohmann::json;

std::string Provenance::to_string() const {
  switch (kind) {
    case Kind::Original:
      return "original";
    case Kind::Spda:
      return "spda(" + std::to_string(s) + ")";
    case Kind::Basic:
      return "basic(" + transform + ")";
  }
  return "original";
}

Provenance Provenance::parse(const std::string& text) {
  Provenance p;
  if (text == "original") return p;
  if (text.rfind("spda(", 0) == 0 && text.back() == ')') {
    p.kind = Kind::Spda;
    p.s = std::stoi(text.substr(5, text.size() - 6));
    return p;
  }
  if (text.rfind("basic(", 0) == 0 && text.back() == ')') {
    p.kind = Kind::Basic;
    p.transform = text.substr(6, text.size() - 7);
    return p;
  }
  throw std::runtime_error("unknown provenance: " + text);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open manifest " + path.string());
  json j = json::parse(is);
  DatasetManifest m;
  m.root = path.parent_path();
  m.num_classes = j.at("num_classes").get<int>();
  m.n = j.at("n").get<int>();
  if (m.n < 1) throw std::runtime_error("manifest must list at least one original sample");
  std::vector<std::string> seen;
  for (const auto& e : j.at("samples")) {
    ManifestEntry entry;
    entry.id = e.at("id").get<std::string>();
    entry.image_path = e.at("image").get<std::string>();
    entry.label_path = e.at("label").get<std::string>();
    entry.provenance = Provenance::parse(e.at("provenance").get<std::string>());
    if (e.contains("source")) entry.source_id = e.at("source").get<std::string>();
    if (std::find(seen.begin(), seen.end(), entry.id) != seen.end())
      throw std::runtime_error("duplicate sample id in manifest: " + entry.id);
    seen.push_back(entry.id);
    m.entries.push_back(std::move(entry));
  }
  int originals = 0;
  for (const auto& e : m.entries) originals += e.is_original() ? 1 : 0;
  if (originals != m.n)
    throw std::runtime_error("manifest n=" + std::to_string(m.n) + " but " +
                             std::to_string(originals) + " original entries found");
  return m;
}

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  json samples = json::array();
  for (const auto& e : m.entries) {
    json s = {{"id", e.id},
              {"image", e.image_path},
              {"label", e.label_path},
              {"provenance", e.provenance.to_string()}};
    if (!e.source_id.empty()) s["source"] = e.source_id;
    samples.push_back(std::move(s));
  }
  json j = {{"n", m.n}, {"num_classes", m.num_classes}, {"samples", std::move(samples)}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot create manifest " + path.string());
  os << j.dump(2) << "\n";
}

Sample load_sample(const std::filesystem::path& image_path,
                   const std::filesystem::path& label_path, int num_classes,
                   const Provenance& provenance) {
  Sample s;
  s.image = read_image_any(image_path);
  s.label = read_label_any(label_path, num_classes);
  s.provenance = provenance;
  if (!spatially_congruent(s.image, s.label))
    throw std::runtime_error("image/label shape mismatch: " + image_path.string());
  if (!s.image.all_finite())
    throw std::runtime_error("non-finite values in " + image_path.string());
  return s;
}

Sample load_sample(const DatasetManifest& m, const ManifestEntry& entry) {
  return load_sample(m.root / entry.image_path, m.root / entry.label_path, m.num_classes,
                     entry.provenance);
}

std::vector<Sample> load_all(const DatasetManifest& m, bool originals_only) {
  std::vector<Sample> out;
  for (const auto& e : m.entries) {
    if (originals_only && !e.is_original()) continue;
    out.push_back(load_sample(m, e));
  }
  return out;
}

namespace {

struct Blob {
  bool ellipse;
  double cy, cx;    // center
  double ry, rx;    // radii / half-extents
  double angle;     // radians
  int class_id;
};

bool inside(const Blob& b, double y, double x) {
  double dy = y - b.cy, dx = x - b.cx;
  double ca = std::cos(b.angle), sa = std::sin(b.angle);
  double u = ca * dx + sa * dy;
  double v = -sa * dx + ca * dy;
  if (b.ellipse) return (u * u) / (b.rx * b.rx) + (v * v) / (b.ry * b.ry) <= 1.0;
  return std::abs(u) <= b.rx && std::abs(v) <= b.ry;
}

// Per-class base intensity and sinusoidal texture. Classes are separated in
// mean value and carry distinct texture frequencies so that superpixel
// averaging smooths texture while region boundaries stay intact.
struct ClassAppearance {
  double base;
  double freq_y, freq_x, phase;
  double tint[3];
};

ClassAppearance appearance(int class_id, int num_classes, SeededRng& rng) {
  ClassAppearance a;
  a.base = 0.2 + 0.6 * static_cast<double>(class_id) / (num_classes - 1);
  double angle = rng.uniform_real() * 3.14159265358979323846;
  // High-frequency texture: periods stay below typical superpixel cell
  // sizes, so per-cell averaging flattens texture to the class base value.
  double period = 2.2 + 0.8 * class_id + rng.uniform_real() * 0.6;
  a.freq_y = std::sin(angle) * 2.0 * 3.14159265358979323846 / period;
  a.freq_x = std::cos(angle) * 2.0 * 3.14159265358979323846 / period;
  a.phase = rng.uniform_real() * 2.0 * 3.14159265358979323846;
  for (int c = 0; c < 3; ++c) a.tint[c] = 0.85 + 0.15 * rng.uniform_real();
  return a;
}

}  // namespace

std::vector<Sample> synthesize_samples(const SyntheticConfig& cfg, const SeededRng& rng) {
  if (cfg.size < 32) throw std::invalid_argument("synthetic size must be >= 32");
  if (cfg.num_classes < 2 || cfg.num_classes > 4)
    throw std::invalid_argument("synthetic num_classes must be in [2,4]");
  if (cfg.num_samples < 1) throw std::invalid_argument("synthetic num_samples must be >= 1");
  if (cfg.channels != 1 && cfg.channels != 3)
    throw std::invalid_argument("synthetic channels must be 1 or 3");

  const int n = cfg.size;
  std::vector<Sample> out;
  out.reserve(cfg.num_samples);
  for (int si = 0; si < cfg.num_samples; ++si) {
    SeededRng r = rng.stream("synthetic", static_cast<uint64_t>(si));
    std::vector<ClassAppearance> looks;
    for (int c = 0; c < cfg.num_classes; ++c)
      looks.push_back(appearance(c, cfg.num_classes, r));

    // One to three blobs per foreground class; retry until each class keeps
    // visible area after occlusion by later blobs.
    std::vector<Blob> blobs;
    LabelMap label({n, n}, cfg.num_classes, 0);
    for (int attempt = 0; attempt < 20; ++attempt) {
      blobs.clear();
      for (int c = 1; c < cfg.num_classes; ++c) {
        int count = static_cast<int>(r.uniform_int(1, 3));
        for (int k = 0; k < count; ++k) {
          Blob b;
          b.ellipse = r.uniform_int(0, 1) == 0;
          b.class_id = c;
          b.cy = n * (0.15 + 0.7 * r.uniform_real());
          b.cx = n * (0.15 + 0.7 * r.uniform_real());
          b.ry = n * (0.08 + 0.14 * r.uniform_real());
          b.rx = n * (0.08 + 0.14 * r.uniform_real());
          b.angle = r.uniform_real() * 3.14159265358979323846;
          blobs.push_back(b);
        }
      }
      std::fill(label.data.begin(), label.data.end(), 0);
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          for (const Blob& b : blobs)
            if (inside(b, y + 0.5, x + 0.5)) label.at(y, x) = b.class_id;
      std::vector<int64_t> area(cfg.num_classes, 0);
      for (int32_t v : label.data) area[v]++;
      bool ok = true;
      for (int c = 0; c < cfg.num_classes; ++c)
        if (area[c] < n * n / 100) ok = false;
      if (ok) break;
    }

    Tensor image = Tensor::image2d(n, n, cfg.channels);
    SeededRng noise = r.stream("noise");
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const ClassAppearance& a = looks[label.at(y, x)];
        double v = a.base + cfg.texture_amplitude *
                                std::sin(a.freq_y * y + a.freq_x * x + a.phase);
        for (int c = 0; c < cfg.channels; ++c) {
          double value = cfg.channels == 3 ? v * a.tint[c] : v;
          if (cfg.noise_sigma > 0.0f) value += cfg.noise_sigma * noise.normal();
          value = std::clamp(value, 0.0, 1.0);
          image.at(y, x, c) = static_cast<float>(value);
        }
      }
    }
    out.push_back(Sample{std::move(image), std::move(label), Provenance{}});
  }
  return out;
}

DatasetManifest generate_synthetic(const SyntheticConfig& cfg, const SeededRng& rng,
                                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<Sample> samples = synthesize_samples(cfg, rng);
  DatasetManifest m;
  m.root = out_dir;
  m.num_classes = cfg.num_classes;
  m.n = static_cast<int>(samples.size());
  for (size_t i = 0; i < samples.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "img%04zu", i);
    ManifestEntry e;
    e.id = id;
    e.image_path = std::string(id) + ".png";
    e.label_path = std::string(id) + "_label.png";
    e.provenance = Provenance{};
    write_png(out_dir / e.image_path, samples[i].image);
    write_label_png(out_dir / e.label_path, samples[i].label);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

}  // namespace spda
