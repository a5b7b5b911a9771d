#include "pulsekit/signal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "pulsekit/errors.hpp"
#include "pulsekit/rng.hpp"

namespace pulsekit {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

// Last index of the minimum over p[lo..hi] inclusive. Ties resolve to the
// latest sample: on a flat diastole that is the foot of the next upstroke.
int64_t argmin_last(const std::vector<double>& p, int64_t lo, int64_t hi) {
  int64_t arg = lo;
  for (int64_t i = lo + 1; i <= hi; ++i) {
    if (p[i] <= p[arg]) arg = i;
  }
  return arg;
}

struct Beat {
  double start;   // seconds
  double period;  // seconds
};

}  // namespace

std::vector<double> first_difference(const std::vector<double>& x) {
  if (x.size() < 2) throw SequenceTooShort("first_difference needs >= 2 samples");
  std::vector<double> d(x.size() - 1);
  for (size_t i = 0; i + 1 < x.size(); ++i) d[i] = x[i + 1] - x[i];
  return d;
}

std::vector<double> second_difference(const std::vector<double>& x) {
  if (x.size() < 3) throw SequenceTooShort("second_difference needs >= 3 samples");
  return first_difference(first_difference(x));
}

std::vector<double> standardize(const std::vector<double>& x) {
  if (x.empty()) throw SequenceTooShort("standardize needs >= 1 sample");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  double sd = std::sqrt(var);
  if (sd < 1e-12) throw ConstantInput("standardize: zero variance input");
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sd;
  return out;
}

static void validate_template(const BeatTemplateParams& tp) {
  if (!(tp.systolic_amp > 0.0) || !(tp.dicrotic_amp > 0.0))
    throw InvalidTemplate("bump amplitudes must be positive");
  if (!(tp.dicrotic_amp < tp.systolic_amp))
    throw InvalidTemplate("dicrotic amplitude must be below systolic");
  if (!(0.0 < tp.systolic_center && tp.systolic_center < tp.dicrotic_center &&
        tp.dicrotic_center < 1.0))
    throw InvalidTemplate("need 0 < systolic_center < dicrotic_center < 1");
  if (!(tp.systolic_width > 0.0 && tp.systolic_width <= 0.6) ||
      !(tp.dicrotic_width > 0.0 && tp.dicrotic_width <= 0.6))
    throw InvalidTemplate("bump widths must lie in (0, 0.6]");
}

SynthPpg synth_ppg(double hr_bpm, double fs, double duration_s,
                   double hr_jitter, const BeatTemplateParams& params,
                   uint64_t seed) {
  if (!(hr_bpm >= 30.0 && hr_bpm <= 240.0))
    throw InvalidArgument("hr_bpm must lie in [30, 240]");
  if (!(fs >= 20.0)) throw InvalidArgument("fs must be >= 20 Hz");
  if (!(hr_jitter >= 0.0 && hr_jitter <= 0.3))
    throw InvalidArgument("hr_jitter must lie in [0, 0.3]");
  const int64_t n = std::llround(duration_s * fs);
  if (n < 3) throw InvalidArgument("duration_s * fs must be >= 3 samples");
  validate_template(params);

  const double nominal = 60.0 / hr_bpm;
  // Half a diastole of lead-in so the first beat's foot lies inside the
  // rendered range instead of being cut by the window edge.
  const double lead = 0.15 * nominal;

  Rng rng(seed);
  auto draw_period = [&]() {
    return nominal * (1.0 + rng.uniform(-hr_jitter, hr_jitter));
  };

  std::vector<Beat> beats;
  {
    double pv = draw_period();  // virtual beat before t=0; covers the lead-in
    beats.push_back({lead - pv, pv});
  }
  double s = lead;
  while (s < duration_s) {
    double p = draw_period();
    beats.push_back({s, p});
    s += p;
  }
  beats.push_back({s, draw_period()});  // tail coverage only, never emitted

  std::vector<double> p(static_cast<size_t>(n), params.baseline);
  auto add_bump = [&](double center_s, double halfwidth_s, double amp) {
    int64_t i0 = static_cast<int64_t>(std::ceil((center_s - halfwidth_s) * fs));
    int64_t i1 = static_cast<int64_t>(std::floor((center_s + halfwidth_s) * fs));
    i0 = std::max<int64_t>(i0, 0);
    i1 = std::min<int64_t>(i1, n - 1);
    for (int64_t i = i0; i <= i1; ++i) {
      double u = (static_cast<double>(i) / fs - center_s) / halfwidth_s;
      p[static_cast<size_t>(i)] += amp * 0.5 * (1.0 + std::cos(kPi * u));
    }
  };
  for (const Beat& b : beats) {
    add_bump(b.start + params.systolic_center * b.period,
             params.systolic_width * b.period, params.systolic_amp);
    add_bump(b.start + params.dicrotic_center * b.period,
             params.dicrotic_width * b.period, params.dicrotic_amp);
  }

  double lo = p[0], hi = p[0];
  for (double v : p) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi - lo < 1e-12)
    throw InvalidTemplate("rendered waveform is flat; no bump landed in range");
  for (double& v : p) v = (v - lo) / (hi - lo);

  SynthPpg out;
  out.ppg.samples = std::move(p);
  out.ppg.fs = fs;
  out.ppg.normalized = true;

  const std::vector<double>& w = out.ppg.samples;
  // beats[0] is the virtual lead-in beat; the last entry is tail coverage.
  for (size_t k = 1; k + 1 < beats.size(); ++k) {
    const Beat& b = beats[k];
    const Beat& prev = beats[k - 1];
    int64_t i_sys =
        std::llround((b.start + params.systolic_center * b.period) * fs);
    int64_t i_dic =
        std::llround((b.start + params.dicrotic_center * b.period) * fs);
    int64_t i_prev_dic =
        std::llround((prev.start + params.dicrotic_center * prev.period) * fs);
    if (i_dic >= n) break;
    int64_t dia_lo = std::max<int64_t>(i_prev_dic + 1, 0);
    if (dia_lo > i_sys) continue;  // degenerate grid; skip the beat
    int64_t dia = argmin_last(w, dia_lo, i_sys);
    int64_t notch = argmin_last(w, i_sys + 1, i_dic);
    out.fiducials.diastolic_idx.push_back(dia);
    out.fiducials.notch_idx.push_back(notch);
    out.fiducials.lvet_ms.push_back(static_cast<double>(notch - dia) / fs *
                                    1000.0);
  }
  return out;
}

PpgSignal load_ppg_csv(const std::string& path, double target_fs) {
  if (!(target_fs > 0.0)) throw InvalidArgument("target_fs must be positive");
  std::ifstream f(path);
  if (!f) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw BadFormat(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time_s,ppg")
    throw BadFormat(path + ": expected header 'time_s,ppg'");

  std::vector<double> t, v;
  size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double a, b;
    if (std::sscanf(line.c_str(), "%lf,%lf", &a, &b) != 2)
      throw BadFormat(path + ": bad row at line " + std::to_string(lineno));
    if (!t.empty() && !(a > t.back()))
      throw BadFormat(path + ": time_s must be strictly increasing (line " +
                      std::to_string(lineno) + ")");
    t.push_back(a);
    v.push_back(b);
  }
  if (t.size() < 2) throw BadFormat(path + ": need at least two samples");

  PpgSignal out;
  out.fs = target_fs;
  out.normalized = false;
  size_t seg = 0;
  for (int64_t j = 0;; ++j) {
    double tj = t.front() + static_cast<double>(j) / target_fs;
    if (tj > t.back()) break;
    while (seg + 2 < t.size() && t[seg + 1] < tj) ++seg;
    double span = t[seg + 1] - t[seg];
    double a = (tj - t[seg]) / span;
    a = std::clamp(a, 0.0, 1.0);
    out.samples.push_back(v[seg] * (1.0 - a) + v[seg + 1] * a);
  }
  return out;
}

}  // namespace pulsekit
