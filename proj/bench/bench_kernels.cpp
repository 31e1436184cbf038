// Times the OpenMP kernels against the serial reference on preset-like
// shapes and checks the two agree bit for bit. Build with the project,
// run: pcam_bench [reps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "pcam/kernels.hpp"
#include "pcam/rng.hpp"
#include "pcam/serial_ref.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

std::vector<double> random_vec(std::size_t n, pcam::RngState& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * pcam::rng_uniform(rng) - 1.0;
  return v;
}

double time_ms(int reps, const std::function<void()>& fn) {
  fn();  // warm-up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto t1 = Clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

int g_failures = 0;

void report(const char* name, double serial_ms, double parallel_ms,
            bool equal) {
  std::printf("%-24s serial %8.3f ms   parallel %8.3f ms   speedup %5.2fx   %s\n",
              name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0,
              equal ? "bit-equal" : "MISMATCH");
  if (!equal) ++g_failures;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
#ifdef _OPENMP
  std::printf("threads: %d, reps: %d\n", omp_get_max_threads(), reps);
#else
  std::printf("threads: 1 (no OpenMP), reps: %d\n", reps);
#endif

  pcam::RngState rng(7);

  {  // conv3x3 forward + backward, first fine-tune layer shape
    const std::size_t ci = 8, co = 16, h = 64, w = 64;
    const auto in = random_vec(ci * h * w, rng);
    const auto k = random_vec(co * ci * 9, rng);
    const auto b = random_vec(co, rng);
    std::vector<double> o1(co * h * w), o2(co * h * w);
    const double ts = time_ms(reps, [&] {
      pcam::serialref::conv3x3_forward(in.data(), ci, h, w, k.data(), b.data(),
                                       co, o1.data());
    });
    const double tp = time_ms(reps, [&] {
      pcam::kernels::conv3x3_forward(in.data(), ci, h, w, k.data(), b.data(),
                                     co, o2.data());
    });
    report("conv3x3 forward", ts, tp, bit_equal(o1, o2));

    const auto go = random_vec(co * h * w, rng);
    std::vector<double> gi1(ci * h * w), gi2(ci * h * w);
    const double ts2 = time_ms(reps, [&] {
      pcam::serialref::conv3x3_backward_input(go.data(), co, h, w, k.data(),
                                              ci, gi1.data());
    });
    const double tp2 = time_ms(reps, [&] {
      pcam::kernels::conv3x3_backward_input(go.data(), co, h, w, k.data(), ci,
                                            gi2.data());
    });
    report("conv3x3 grad input", ts2, tp2, bit_equal(gi1, gi2));

    std::vector<double> gk1(co * ci * 9), gk2(co * ci * 9), gb1(co), gb2(co);
    const double ts3 = time_ms(reps, [&] {
      pcam::serialref::conv3x3_backward_params(in.data(), ci, h, w, go.data(),
                                               co, gk1.data(), gb1.data());
    });
    const double tp3 = time_ms(reps, [&] {
      pcam::kernels::conv3x3_backward_params(in.data(), ci, h, w, go.data(),
                                             co, gk2.data(), gb2.data());
    });
    report("conv3x3 grad params", ts3, tp3,
           bit_equal(gk1, gk2) && bit_equal(gb1, gb2));
  }

  {  // max-pool on a wide map
    const std::size_t c = 16, h = 128, w = 128;
    const auto in = random_vec(c * h * w, rng);
    std::vector<double> o1(c * (h / 2) * (w / 2)), o2(o1.size());
    std::vector<std::uint32_t> a1(o1.size()), a2(o1.size());
    const double ts = time_ms(reps, [&] {
      pcam::serialref::maxpool2x2_forward(in.data(), c, h, w, o1.data(),
                                          a1.data());
    });
    const double tp = time_ms(reps, [&] {
      pcam::kernels::maxpool2x2_forward(in.data(), c, h, w, o2.data(),
                                        a2.data());
    });
    report("maxpool2x2 forward", ts, tp,
           bit_equal(o1, o2) && a1 == a2);
  }

  {  // dense, CAM-head shape at full-image scale
    const std::size_t rows = 4, cols = 4096;
    const auto in = random_vec(cols, rng);
    const auto wgt = random_vec(rows * cols, rng);
    const auto b = random_vec(rows, rng);
    std::vector<double> o1(rows), o2(rows);
    const double ts = time_ms(reps, [&] {
      pcam::serialref::dense_forward(in.data(), wgt.data(), b.data(), rows,
                                     cols, o1.data());
    });
    const double tp = time_ms(reps, [&] {
      pcam::kernels::dense_forward(in.data(), wgt.data(), b.data(), rows,
                                   cols, o2.data());
    });
    report("dense forward", ts, tp, bit_equal(o1, o2));
  }

  {  // CAM accumulation over a full-image feature map
    const std::size_t c = 32, h = 32, w = 32;
    const auto f = random_vec(c * h * w, rng);
    const auto wrow = random_vec(c, rng);
    std::vector<double> h1(h * w), h2(h * w);
    const double ts = time_ms(reps, [&] {
      pcam::serialref::cam_accumulate(f.data(), c, h, w, wrow.data(),
                                      h1.data());
    });
    const double tp = time_ms(reps, [&] {
      pcam::kernels::cam_accumulate(f.data(), c, h, w, wrow.data(),
                                    h2.data());
    });
    report("cam accumulate", ts, tp, bit_equal(h1, h2));
  }

  if (g_failures > 0) {
    std::printf("%d kernel(s) disagree with the serial reference\n",
                g_failures);
    return 1;
  }
  return 0;
}
