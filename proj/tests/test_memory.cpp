#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "pide/memory.hpp"

#include <cmath>

using namespace pide;

TEST_CASE("weights are kernel samples at the lags") {
  MemoryWeights w([](double t) { return std::exp(-2.0 * t); }, 0.25);
  const auto v = w.weights_for_step(4);
  REQUIRE(v.size() == 4);
  for (int i = 1; i <= 4; ++i) CHECK(v[i - 1] == doctest::Approx(std::exp(-2.0 * 0.25 * (4 - i))));
  CHECK(v.back() == 1.0);
  CHECK(w.bound_K1() == 1.0);
}

TEST_CASE("kernel vanishing at zero is rejected") {
  CHECK_THROWS_AS(MemoryWeights([](double t) { return t; }, 0.1), MemoryError);
}

TEST_CASE("convolution quadrature converges at first order") {
  double prev = 0.0;
  for (int k = 3; k <= 9; ++k) {
    const int n = 1 << k;
    const double dt = 1.0 / n;
    MemoryWeights w([](double t) { return std::exp(-t); }, dt);
    const auto om = w.weights_for_step(n);
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += dt * om[i - 1] * std::cos(i * dt);
    const double err = std::abs(s - oracle::convolution_exact(1.0));
    if (k > 3) CHECK(std::log2(prev / err) >= 0.9);
    prev = err;
  }
}

TEST_CASE("history is append-only, one-based and tracks storage") {
  MemoryHistory h(HistoryMode::fine_history, Grid::fine);
  CHECK(h.empty());
  h.append(Vector::Constant(4, 1.0));
  h.append(Vector::Constant(4, 2.0));
  CHECK(h.size() == 2);
  CHECK(h.entry(2)[0] == 2.0);
  CHECK_THROWS_AS((void)h.entry(0), MemoryError);
  CHECK_THROWS_AS((void)h.entry(3), MemoryError);
  CHECK(h.bytes() == 8 * sizeof(double));
  CHECK(h.peak_entries() == 2);

  const std::vector<double> w = {0.5, 2.0};
  const Vector m = accumulate_memory(h, w, 2, 0.1, 4);
  CHECK(m[3] == doctest::Approx(0.1 * (0.5 + 4.0)));
  CHECK(accumulate_memory(h, w, 0, 0.1, 4).norm() == 0.0);
}

TEST_CASE("coarse-only mode refuses fine entries") {
  MemoryHistory fine(HistoryMode::coarse_only, Grid::fine);
  CHECK_THROWS_AS(fine.append(Vector::Zero(3)), MemoryError);
  CHECK(fine.bytes() == 0);
  MemoryHistory coarse(HistoryMode::coarse_only, Grid::coarse);
  coarse.append(Vector::Zero(3));
  CHECK(coarse.size() == 1);
}
