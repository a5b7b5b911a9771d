#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "pulsekit/errors.hpp"
#include "pulsekit/rng.hpp"
#include "pulsekit/signal.hpp"

using namespace pulsekit;

namespace {

// Plateau-aware local minima of a sampled waveform, ties resolved to the last
// sample of a flat run. A run touching the start of the signal counts (first
// trough may be cut by the window edge); one touching the end does not.
std::vector<int64_t> scan_minima(const std::vector<double>& p) {
  std::vector<int64_t> out;
  size_t i = 0;
  while (i < p.size()) {
    size_t j = i;
    while (j + 1 < p.size() && p[j + 1] == p[i]) ++j;
    bool left_ok = (i == 0) || p[i - 1] > p[i];
    bool right_ok = (j + 1 < p.size()) && p[j + 1] > p[i];
    if (left_ok && right_ok && !(i == 0 && j + 1 == p.size())) {
      out.push_back(static_cast<int64_t>(j));
    }
    i = j + 1;
  }
  return out;
}

}  // namespace

TEST_CASE("first difference of a short ramp") {
  std::vector<double> x{1, 4, 9, 16};
  CHECK(first_difference(x) == std::vector<double>{3, 5, 7});
  CHECK_THROWS_AS(first_difference({1.0}), SequenceTooShort);
}

TEST_CASE("second difference matches direct three-point stencil") {
  std::vector<double> x{1, 4, 9, 16};
  CHECK(second_difference(x) == std::vector<double>{2, 2});
  CHECK_THROWS_AS(second_difference({1.0, 2.0}), SequenceTooShort);

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 3 + (rng.next_u64() % 200);
    std::vector<double> sig(n);
    for (double& v : sig) v = rng.uniform(-5.0, 5.0);
    auto sd = second_difference(sig);
    REQUIRE(sd.size() == n - 2);
    for (size_t i = 0; i < sd.size(); ++i) {
      double direct = sig[i + 2] - 2.0 * sig[i + 1] + sig[i];
      CHECK(sd[i] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("differences are linear and telescope back") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 4 + (rng.next_u64() % 100);
    std::vector<double> a(n), b(n);
    for (size_t i = 0; i < n; ++i) {
      a[i] = rng.uniform(-3.0, 3.0);
      b[i] = rng.uniform(-3.0, 3.0);
    }
    double ca = rng.uniform(-2.0, 2.0), cb = rng.uniform(-2.0, 2.0);
    std::vector<double> mix(n);
    for (size_t i = 0; i < n; ++i) mix[i] = ca * a[i] + cb * b[i];
    auto da = first_difference(a), db = first_difference(b),
         dm = first_difference(mix);
    for (size_t i = 0; i < dm.size(); ++i)
      CHECK(std::abs(dm[i] - (ca * da[i] + cb * db[i])) <= 1e-12);

    // fd[t] = fd[0] + sum of sd[0..t-1]
    auto fd = first_difference(a);
    auto sd = second_difference(a);
    double acc = fd[0];
    for (size_t t = 1; t < fd.size(); ++t) {
      acc += sd[t - 1];
      double scale = std::max(1.0, std::abs(fd[t]));
      CHECK(std::abs(acc - fd[t]) / scale <= 1e-9);
    }
  }
}

TEST_CASE("standardize has zero mean and unit population variance") {
  Rng rng(13);
  std::vector<double> x(257);
  for (double& v : x) v = rng.uniform(2.0, 9.0);
  auto z = standardize(x);
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= static_cast<double>(z.size());
  CHECK(std::abs(mean) <= 1e-12);
  CHECK(std::abs(var - 1.0) <= 1e-12);

  // Positive affine map: extrema positions survive.
  size_t argmax_x = 0, argmax_z = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] > x[argmax_x]) argmax_x = i;
    if (z[i] > z[argmax_z]) argmax_z = i;
  }
  CHECK(argmax_x == argmax_z);

  CHECK_THROWS_AS(standardize(std::vector<double>(10, 3.5)), ConstantInput);
  CHECK_THROWS_AS(standardize({}), SequenceTooShort);
}

TEST_CASE("synth ppg emits the forced sample and beat counts") {
  auto s = synth_ppg(60.0, 30.0, 10.0, 0.0, BeatTemplateParams{}, 42);
  CHECK(s.ppg.samples.size() == 300);
  CHECK(s.ppg.fs == 30.0);
  CHECK(s.ppg.normalized);
  CHECK(s.fiducials.diastolic_idx.size() == 10);
  CHECK(s.fiducials.notch_idx.size() == 10);
  CHECK(s.fiducials.lvet_ms.size() == 10);

  double lo = 1e9, hi = -1e9;
  for (double v : s.ppg.samples) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
}

TEST_CASE("synth ppg fiducial ordering invariants") {
  Rng seeds(99);
  for (int trial = 0; trial < 10; ++trial) {
    double hr = 45.0 + 15.0 * trial;
    auto s = synth_ppg(hr, 30.0, 8.0, 0.05, BeatTemplateParams{},
                       seeds.next_u64());
    const auto& f = s.fiducials;
    REQUIRE(f.diastolic_idx.size() == f.notch_idx.size());
    double period_samples = 60.0 / hr * 30.0 * 1.05;
    for (size_t i = 0; i < f.diastolic_idx.size(); ++i) {
      CHECK(f.notch_idx[i] > f.diastolic_idx[i]);
      if (i > 0) CHECK(f.diastolic_idx[i] > f.diastolic_idx[i - 1]);
      CHECK(f.lvet_ms[i] ==
            doctest::Approx((f.notch_idx[i] - f.diastolic_idx[i]) / 30.0 *
                            1000.0));
      CHECK(f.lvet_ms[i] > 0.0);
      CHECK(f.lvet_ms[i] < period_samples / 30.0 * 1000.0);
    }
  }
}

TEST_CASE("synth ppg is deterministic in the seed") {
  auto a = synth_ppg(72.0, 30.0, 6.0, 0.08, BeatTemplateParams{}, 1234);
  auto b = synth_ppg(72.0, 30.0, 6.0, 0.08, BeatTemplateParams{}, 1234);
  CHECK(a.ppg.samples == b.ppg.samples);
  CHECK(a.fiducials.diastolic_idx == b.fiducials.diastolic_idx);
  auto c = synth_ppg(72.0, 30.0, 6.0, 0.08, BeatTemplateParams{}, 1235);
  CHECK(a.ppg.samples != c.ppg.samples);
}

TEST_CASE("narrow separated bumps put the lvet at the center spacing") {
  BeatTemplateParams tp;
  tp.systolic_center = 0.2;
  tp.systolic_width = 0.08;
  tp.dicrotic_center = 0.5;
  tp.dicrotic_width = 0.08;
  tp.dicrotic_amp = 0.45;
  tp.baseline = 0.0;
  auto s = synth_ppg(60.0, 100.0, 10.0, 0.0, tp, 7);

  // Independent oracle: scan the rendered samples for plateau minima and
  // pair them (foot, then notch) without using the library's beat grid.
  auto minima = scan_minima(s.ppg.samples);
  REQUIRE(minima.size() >= 2 * s.fiducials.diastolic_idx.size());
  for (size_t k = 0; k < s.fiducials.diastolic_idx.size(); ++k) {
    CHECK(s.fiducials.diastolic_idx[k] == minima[2 * k]);
    CHECK(s.fiducials.notch_idx[k] == minima[2 * k + 1]);
    double lvet_oracle =
        static_cast<double>(minima[2 * k + 1] - minima[2 * k]) / 100.0 * 1000.0;
    CHECK(s.fiducials.lvet_ms[k] == doctest::Approx(lvet_oracle));
    CHECK(std::abs(s.fiducials.lvet_ms[k] - 300.0) <= 10.0);
  }
}

TEST_CASE("synth ppg rejects invalid arguments and templates") {
  BeatTemplateParams tp;
  CHECK_THROWS_AS(synth_ppg(10.0, 30.0, 10.0, 0.0, tp, 1), InvalidArgument);
  CHECK_THROWS_AS(synth_ppg(60.0, 5.0, 10.0, 0.0, tp, 1), InvalidArgument);
  CHECK_THROWS_AS(synth_ppg(60.0, 30.0, 0.05, 0.0, tp, 1), InvalidArgument);
  tp.dicrotic_amp = 2.0;  // above systolic
  CHECK_THROWS_AS(synth_ppg(60.0, 30.0, 10.0, 0.0, tp, 1), InvalidTemplate);
  tp = BeatTemplateParams{};
  tp.systolic_center = 0.9;
  tp.dicrotic_center = 0.5;
  CHECK_THROWS_AS(synth_ppg(60.0, 30.0, 10.0, 0.0, tp, 1), InvalidTemplate);
}

TEST_CASE("csv ingestion resamples by linear interpolation") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "pulsekit_sig_test";
  fs::create_directories(dir);
  fs::path file = dir / "ppg.csv";
  {
    std::ofstream f(file);
    f << "time_s,ppg\n";
    // Non-uniform grid of a known line v = 2t + 1.
    double ts[] = {0.0, 0.013, 0.05, 0.0701, 0.11, 0.2};
    for (double t : ts) f << t << "," << 2.0 * t + 1.0 << "\n";
  }
  auto sig = load_ppg_csv(file.string(), 50.0);
  CHECK(sig.fs == 50.0);
  REQUIRE(sig.samples.size() == 11);  // t = 0, 0.02, ..., 0.20
  for (size_t j = 0; j < sig.samples.size(); ++j) {
    double t = static_cast<double>(j) / 50.0;
    CHECK(sig.samples[j] == doctest::Approx(2.0 * t + 1.0).epsilon(1e-12));
  }

  {
    std::ofstream f(file);
    f << "tick,ppg\n0,1\n1,2\n";
  }
  CHECK_THROWS_AS(load_ppg_csv(file.string(), 50.0), BadFormat);
  {
    std::ofstream f(file);
    f << "time_s,ppg\n0,1\n0,2\n";
  }
  CHECK_THROWS_AS(load_ppg_csv(file.string(), 50.0), BadFormat);
  CHECK_THROWS_AS(load_ppg_csv((dir / "missing.csv").string(), 50.0), IoError);
}
