#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "spda/dataset.hpp"
#include "spda/image_io.hpp"
#include "spda/slic.hpp"

using namespace spda;
namespace fs = std::filesystem;

#ifndef SPDA_CLI_PATH
#error "SPDA_CLI_PATH must be defined"
#endif

namespace {

const fs::path kWork = fs::temp_directory_path() / "spda_cli_test";

int run(const std::string& args) {
  std::string cmd = std::string(SPDA_CLI_PATH) + " " + args + " > " +
                    (kWork / "stdout.txt").string() + " 2> " + (kWork / "stderr.txt").string();
  return std::system(cmd.c_str());
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("cli pipeline: synth, slic, superpixelize, augment, metrics, analyze") {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  fs::path data = kWork / "data";

  REQUIRE(run("synth --out " + data.string() + " --size 64 --classes 3 --count 6 --seed 5") == 0);
  DatasetManifest m = load_manifest(data / "manifest.json");
  CHECK(m.n == 6);

  fs::path cells = kWork / "cells.vol";
  fs::path overlay = kWork / "overlay.png";
  REQUIRE(run("slic --in " + (data / "img0000.png").string() + " --s 100 --compactness 20 --out " +
              cells.string() + " --overlay " + overlay.string()) == 0);
  CHECK(fs::exists(cells));
  CHECK(fs::exists(overlay));
  CellMap cmap = read_cellmap(cells);
  CHECK(std::abs(cmap.num_cells - 100) <= 20);

  fs::path sp = kWork / "sp.png";
  REQUIRE(run("superpixelize --in " + (data / "img0000.png").string() + " --cells " +
              cells.string() + " --out " + sp.string()) == 0);
  CHECK(fs::exists(sp));

  fs::path aug = kWork / "aug";
  REQUIRE(run("augment --manifest " + (data / "manifest.json").string() + " --out " +
              aug.string() + " --s-lo 50 --s-hi 400 --count 3 --seed 5") == 0);
  DatasetManifest am = load_manifest(aug / "manifest.json");
  CHECK(am.n == 6);
  CHECK(am.entries.size() == 6u * 4u);  // original + 3 SP copies each
  int sp_count = 0;
  for (const auto& e : am.entries)
    if (e.provenance.kind == Provenance::Kind::Spda) {
      sp_count++;
      CHECK(!e.source_id.empty());
    }
  CHECK(sp_count == 18);

  // labels of SP entries resolve to the original's label file
  Sample orig = load_sample(am, am.entries[0]);
  Sample spda_sample = load_sample(am, am.entries[1]);
  CHECK(spda_sample.label.data == orig.label.data);

  REQUIRE(run("metrics --pred " + (data / "img0000_label.png").string() + " --gt " +
              (data / "img0000_label.png").string() + " --classes 3 --cells " +
              cells.string()) == 0);
  std::string out = read_file(kWork / "stdout.txt");
  CHECK(out.find("mean_iu=1.000000") != std::string::npos);
  CHECK(out.find("boundary_recall=") != std::string::npos);

  fs::path tsv = kWork / "pca.tsv";
  REQUIRE(run("analyze pca --manifest " + (aug / "manifest.json").string() +
              " --components 2 --out " + tsv.string()) == 0);
  CHECK(fs::exists(tsv));
  std::string tsv_text = read_file(tsv);
  CHECK(tsv_text.find("original") != std::string::npos);
  CHECK(tsv_text.find("spda") != std::string::npos);

  REQUIRE(run("analyze nn-check --manifest " + (aug / "manifest.json").string()) == 0);
  std::string nn_out = read_file(kWork / "stdout.txt");
  CHECK(nn_out.find("fraction=") != std::string::npos);
}

TEST_CASE("cli train and eval round-trip") {
  fs::path data = kWork / "data";
  REQUIRE(fs::exists(data / "manifest.json"));  // produced by the pipeline case

  fs::path run_dir = kWork / "run";
  REQUIRE(run("train --manifest " + (data / "manifest.json").string() + " --out " +
              run_dir.string() +
              " --steps 5 --batch 4 --s-lo 20 --s-hi 80 --input-size 48 --base-channels 4 "
              "--val-fraction 0 --seed 9") == 0);
  CHECK(fs::exists(run_dir / "final.ckpt"));
  CHECK(fs::exists(run_dir / "metrics.log"));
  std::string log = read_file(run_dir / "metrics.log");
  CHECK(log.find("step=1 ") != std::string::npos);
  CHECK(log.find("lr=0.00050000") != std::string::npos);

  REQUIRE(run("eval --manifest " + (data / "manifest.json").string() + " --checkpoint " +
              (run_dir / "final.ckpt").string()) == 0);
  CHECK(read_file(kWork / "stdout.txt").find("mean_iu=") != std::string::npos);

  REQUIRE(run("eval --manifest " + (data / "manifest.json").string() + " --checkpoint " +
              (run_dir / "final.ckpt").string() + " --sp 60") == 0);
  CHECK(read_file(kWork / "stdout.txt").find("sp=60") != std::string::npos);
}

TEST_CASE("cli reports one-line diagnostics with non-zero exit") {
  CHECK(run("slic --in /nonexistent.png --s 10 --out " + (kWork / "x.vol").string()) != 0);
  std::string err = read_file(kWork / "stderr.txt");
  CHECK(err.rfind("error:", 0) == 0);
  CHECK(run("definitely-not-a-subcommand") != 0);
}
