#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <vector>

#include <pcam/kernels.hpp>
#include <pcam/rng.hpp>
#include <pcam/serial_ref.hpp>

using namespace pcam;

namespace {

std::vector<double> random_buf(std::size_t n, std::uint64_t seed,
                               double lo = -1.0, double hi = 1.0) {
  RngState rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = lo + (hi - lo) * rng_uniform(rng);
  return v;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("conv3x3 identity kernel passes input through") {
    const std::size_t c = 2, h = 5, w = 7;
    const std::vector<double> in = random_buf(c * h * w, 10);
    // One output channel per input channel, delta at the center tap.
    std::vector<double> kernel(c * c * 9, 0.0);
    for (std::size_t oc = 0; oc < c; ++oc)
      kernel[(oc * c + oc) * 9 + 4] = 1.0;
    const std::vector<double> bias(c, 0.0);
    std::vector<double> out(c * h * w, -1.0);
    kernels::conv3x3_forward(in.data(), c, h, w, kernel.data(), bias.data(),
                             c, out.data());
    CHECK(bit_equal(out, in));
  }

  TEST_CASE("conv3x3 zero input yields the bias everywhere") {
    const std::size_t h = 4, w = 4;
    const std::vector<double> in(2 * h * w, 0.0);
    const std::vector<double> kernel = random_buf(3 * 2 * 9, 11);
    const std::vector<double> bias = {0.25, -1.5, 3.0};
    std::vector<double> out(3 * h * w);
    kernels::conv3x3_forward(in.data(), 2, h, w, kernel.data(), bias.data(),
                             3, out.data());
    for (std::size_t oc = 0; oc < 3; ++oc)
      for (std::size_t i = 0; i < h * w; ++i)
        CHECK(out[oc * h * w + i] == bias[oc]);
  }

  TEST_CASE("conv3x3 all-ones kernel, hand-worked border sums") {
    // 3x3 ramp 1..9, all-ones kernel, zero padding: each output is the
    // sum of the in-bounds 3x3 neighborhood.
    const std::vector<double> in = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const std::vector<double> kernel(9, 1.0);
    const std::vector<double> bias = {0.0};
    std::vector<double> out(9);
    kernels::conv3x3_forward(in.data(), 1, 3, 3, kernel.data(), bias.data(),
                             1, out.data());
    const std::vector<double> expect = {12, 21, 16, 27, 45, 33, 24, 39, 28};
    CHECK(bit_equal(out, expect));
  }

  TEST_CASE("conv3x3 matches the serial reference bit for bit") {
    const std::size_t c_in = 3, c_out = 5, h = 17, w = 13;
    const std::vector<double> in = random_buf(c_in * h * w, 20);
    const std::vector<double> kernel = random_buf(c_out * c_in * 9, 21);
    const std::vector<double> bias = random_buf(c_out, 22);
    std::vector<double> a(c_out * h * w), b(c_out * h * w);
    kernels::conv3x3_forward(in.data(), c_in, h, w, kernel.data(),
                             bias.data(), c_out, a.data());
    serialref::conv3x3_forward(in.data(), c_in, h, w, kernel.data(),
                               bias.data(), c_out, b.data());
    CHECK(bit_equal(a, b));

    const std::vector<double> gout = random_buf(c_out * h * w, 23);
    std::vector<double> gin_a(c_in * h * w), gin_b(c_in * h * w);
    kernels::conv3x3_backward_input(gout.data(), c_out, h, w, kernel.data(),
                                    c_in, gin_a.data());
    serialref::conv3x3_backward_input(gout.data(), c_out, h, w, kernel.data(),
                                      c_in, gin_b.data());
    CHECK(bit_equal(gin_a, gin_b));

    std::vector<double> gk_a(c_out * c_in * 9), gk_b(c_out * c_in * 9);
    std::vector<double> gb_a(c_out), gb_b(c_out);
    kernels::conv3x3_backward_params(in.data(), c_in, h, w, gout.data(),
                                     c_out, gk_a.data(), gb_a.data());
    serialref::conv3x3_backward_params(in.data(), c_in, h, w, gout.data(),
                                       c_out, gk_b.data(), gb_b.data());
    CHECK(bit_equal(gk_a, gk_b));
    CHECK(bit_equal(gb_a, gb_b));
  }

  TEST_CASE("relu forward and gate") {
    const std::vector<double> in = {-2.0, -0.0, 0.0, 0.5, 3.0};
    std::vector<double> out(5);
    kernels::relu_forward(in.data(), 5, out.data());
    CHECK(out == std::vector<double>{0.0, 0.0, 0.0, 0.5, 3.0});

    const std::vector<double> gout = {10, 10, 10, 10, 10};
    std::vector<double> gin(5);
    kernels::relu_backward(in.data(), gout.data(), 5, gin.data());
    // Gate is strictly in > 0, so zero input blocks gradient.
    CHECK(gin == std::vector<double>{0.0, 0.0, 0.0, 10.0, 10.0});
  }

  TEST_CASE("maxpool picks maxima and ties go first in row-major order") {
    // 4x4, one channel. Second window is a 4-way tie.
    const std::vector<double> in = {
        1, 2, 7, 7,
        3, 4, 7, 7,
        -1, -2, 9, 8,
        -3, -4, 6, 5,
    };
    std::vector<double> out(4);
    std::vector<std::uint32_t> arg(4);
    kernels::maxpool2x2_forward(in.data(), 1, 4, 4, out.data(), arg.data());
    CHECK(out == std::vector<double>{4, 7, -1, 9});
    CHECK(arg == std::vector<std::uint32_t>{5, 2, 8, 10});

    std::vector<double> gin(16, -1.0);
    const std::vector<double> gout = {10, 20, 30, 40};
    kernels::maxpool2x2_backward(gout.data(), 1, 4, 4, arg.data(),
                                 gin.data());
    std::vector<double> expect(16, 0.0);
    expect[5] = 10;
    expect[2] = 20;
    expect[8] = 30;
    expect[10] = 40;
    CHECK(bit_equal(gin, expect));
  }

  TEST_CASE("maxpool drops odd trailing row and column") {
    const std::size_t c = 2, h = 5, w = 7;
    std::vector<double> in = random_buf(c * h * w, 30);
    // Spike the dropped strip; it must never be selected.
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t x = 0; x < w; ++x) in[(ch * h + 4) * w + x] = 100.0;
      for (std::size_t y = 0; y < h; ++y) in[(ch * h + y) * w + 6] = 100.0;
    }
    std::vector<double> out(c * 2 * 3);
    std::vector<std::uint32_t> arg(c * 2 * 3);
    kernels::maxpool2x2_forward(in.data(), c, h, w, out.data(), arg.data());
    for (double v : out) CHECK(v < 100.0);
  }

  TEST_CASE("maxpool matches the serial reference bit for bit") {
    const std::size_t c = 4, h = 17, w = 13;
    const std::vector<double> in = random_buf(c * h * w, 31);
    const std::size_t oh = h / 2, ow = w / 2;
    std::vector<double> a(c * oh * ow), b(c * oh * ow);
    std::vector<std::uint32_t> aa(c * oh * ow), ab(c * oh * ow);
    kernels::maxpool2x2_forward(in.data(), c, h, w, a.data(), aa.data());
    serialref::maxpool2x2_forward(in.data(), c, h, w, b.data(), ab.data());
    CHECK(bit_equal(a, b));
    CHECK(aa == ab);

    const std::vector<double> gout = random_buf(c * oh * ow, 32);
    std::vector<double> ga(c * h * w), gb(c * h * w);
    kernels::maxpool2x2_backward(gout.data(), c, h, w, aa.data(), ga.data());
    serialref::maxpool2x2_backward(gout.data(), c, h, w, ab.data(),
                                   gb.data());
    CHECK(bit_equal(ga, gb));
  }

  TEST_CASE("gap is the per-channel mean") {
    const std::vector<double> in = {1, 2, 3, 4, 10, 20, 30, 40};
    std::vector<double> out(2);
    kernels::gap_forward(in.data(), 2, 2, 2, out.data());
    CHECK(out[0] == 2.5);
    CHECK(out[1] == 25.0);

    const std::vector<double> gout = {8.0, 4.0};
    std::vector<double> gin(8);
    kernels::gap_backward(gout.data(), 2, 2, 2, gin.data());
    CHECK(gin == std::vector<double>{2, 2, 2, 2, 1, 1, 1, 1});
  }

  TEST_CASE("gap matches the serial reference bit for bit") {
    const std::size_t c = 8, h = 9, w = 11;
    const std::vector<double> in = random_buf(c * h * w, 33);
    std::vector<double> a(c), b(c);
    kernels::gap_forward(in.data(), c, h, w, a.data());
    serialref::gap_forward(in.data(), c, h, w, b.data());
    CHECK(bit_equal(a, b));
  }

  TEST_CASE("dense hand case") {
    const std::vector<double> in = {5, 6};
    const std::vector<double> weight = {1, 2, 3, 4};  // [[1,2],[3,4]]
    const std::vector<double> bias = {0.5, -0.5};
    std::vector<double> out(2);
    kernels::dense_forward(in.data(), weight.data(), bias.data(), 2, 2,
                           out.data());
    CHECK(out[0] == 17.5);
    CHECK(out[1] == 38.5);

    const std::vector<double> gout = {1.0, -1.0};
    std::vector<double> gin(2), gw(4), gb(2);
    kernels::dense_backward(in.data(), weight.data(), gout.data(), 2, 2,
                            gin.data(), gw.data(), gb.data());
    // grad_in = W^T gout; grad_W = gout in^T; grad_b = gout.
    CHECK(gin == std::vector<double>{-2.0, -2.0});
    CHECK(gw == std::vector<double>{5, 6, -5, -6});
    CHECK(gb == std::vector<double>{1.0, -1.0});
  }

  TEST_CASE("dense matches the serial reference bit for bit") {
    const std::size_t rows = 7, cols = 33;
    const std::vector<double> in = random_buf(cols, 40);
    const std::vector<double> weight = random_buf(rows * cols, 41);
    const std::vector<double> bias = random_buf(rows, 42);
    std::vector<double> a(rows), b(rows);
    kernels::dense_forward(in.data(), weight.data(), bias.data(), rows, cols,
                           a.data());
    serialref::dense_forward(in.data(), weight.data(), bias.data(), rows,
                             cols, b.data());
    CHECK(bit_equal(a, b));

    const std::vector<double> gout = random_buf(rows, 43);
    std::vector<double> gin_a(cols), gin_b(cols), gw_a(rows * cols),
        gw_b(rows * cols), gb_a(rows), gb_b(rows);
    kernels::dense_backward(in.data(), weight.data(), gout.data(), rows,
                            cols, gin_a.data(), gw_a.data(), gb_a.data());
    serialref::dense_backward(in.data(), weight.data(), gout.data(), rows,
                              cols, gin_b.data(), gw_b.data(), gb_b.data());
    CHECK(bit_equal(gin_a, gin_b));
    CHECK(bit_equal(gw_a, gw_b));
    CHECK(bit_equal(gb_a, gb_b));
  }

  TEST_CASE("cam_accumulate is the weighted channel sum") {
    const std::vector<double> features = {1, 2, 3, 4, 10, 20, 30, 40};
    const std::vector<double> wrow = {2.0, -1.0};
    std::vector<double> heat(4);
    kernels::cam_accumulate(features.data(), 2, 2, 2, wrow.data(),
                            heat.data());
    CHECK(heat == std::vector<double>{-8, -16, -24, -32});
  }

  TEST_CASE("cam_accumulate matches the serial reference bit for bit") {
    const std::size_t c = 16, h = 12, w = 10;
    const std::vector<double> f = random_buf(c * h * w, 50);
    const std::vector<double> wrow = random_buf(c, 51);
    std::vector<double> a(h * w), b(h * w);
    kernels::cam_accumulate(f.data(), c, h, w, wrow.data(), a.data());
    serialref::cam_accumulate(f.data(), c, h, w, wrow.data(), b.data());
    CHECK(bit_equal(a, b));
  }
}
