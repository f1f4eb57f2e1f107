// Benchmark of the OpenMP kernels against their serial reference twins.
// Each pair is also checked for bit-identical output before timing.

#include <chrono>
#include <cstdio>
#include <functional>

#include "spda/dataset.hpp"
#include "spda/nn.hpp"
#include "spda/parallel.hpp"
#include "spda/slic.hpp"
#include "spda/spda_transform.hpp"

using namespace spda;
namespace chrono = std::chrono;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
  auto t0 = chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  auto t1 = chrono::steady_clock::now();
  return chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
  std::printf("%-28s serial %9.2f ms   omp %9.2f ms   speedup %.2fx   %s\n", name, serial_ms,
              parallel_ms, serial_ms / parallel_ms, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
  std::printf("threads: %d\n", max_threads());

  SyntheticConfig cfg;
  cfg.size = 256;
  cfg.num_samples = 1;
  SeededRng rng(1);
  Tensor image = synthesize_samples(cfg, rng)[0].image;

  {
    SlicParams params;
    params.s = 1000;
    CellMap fast = slic_segment(image, params);
    CellMap slow = ref::slic_segment(image, params);
    bool same = fast.cell_ids == slow.cell_ids;
    double s = time_ms([&] { ref::slic_segment(image, params); }, 3);
    double p = time_ms([&] { slic_segment(image, params); }, 3);
    report("slic 256x256 s=1000", s, p, same);
  }

  {
    SyntheticConfig big;
    big.size = 512;
    big.num_samples = 1;
    big.channels = 3;
    SeededRng brng(3);
    Tensor rgb = synthesize_samples(big, brng)[0].image;
    SlicParams params;
    params.s = 2000;
    CellMap cells = slic_segment(rgb, params);
    Tensor fast = superpixelize(rgb, cells);
    Tensor slow = ref::superpixelize(rgb, cells);
    bool same = fast.data == slow.data;
    double s = time_ms([&] { ref::superpixelize(rgb, cells); }, 10);
    double p = time_ms([&] { superpixelize(rgb, cells); }, 10);
    report("superpixelize 512x512x3", s, p, same);
  }

  {
    SeededRng wrng(2);
    TensorT<float> in = TensorT<float>::image2d(128, 128, 16);
    for (float& v : in.data) v = static_cast<float>(wrng.uniform_real());
    std::vector<float> w(9 * 16 * 16), b(16);
    for (float& v : w) v = static_cast<float>(wrng.normal() * 0.05);
    for (float& v : b) v = static_cast<float>(wrng.normal() * 0.05);
    TensorT<float> fast, slow;
    conv3x3_forward_kernel(in, w.data(), b.data(), 16, fast);
    ref::conv3x3_forward(in, w.data(), b.data(), 16, slow);
    bool same = fast.data == slow.data;
    TensorT<float> out;
    double s = time_ms([&] { ref::conv3x3_forward(in, w.data(), b.data(), 16, out); }, 10);
    double p = time_ms([&] { conv3x3_forward_kernel(in, w.data(), b.data(), 16, out); }, 10);
    report("conv3x3 128x128x16->16", s, p, same);
  }

  return 0;
}
