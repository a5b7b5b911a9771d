#include "pulsekit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pulsekit/errors.hpp"

namespace pulsekit {

namespace {

constexpr double kBandLoHz = 0.75;
constexpr double kBandHiHz = 4.0;
constexpr double kMinBandPower = 1e-12;

struct Peak {
  int64_t idx = 0;
  double height = 0.0;
  double prominence = 0.0;
  double pos = 0.0;  // sub-sample apex from a parabola through 3 points
};

// The short/long gap asymmetry that separates the two per-beat families can
// be under two samples, which integer peak indices round away; the parabolic
// apex keeps it measurable. Detection output still uses integer indices.
double subsample_apex(const std::vector<double>& x, int64_t i) {
  const double denom = x[i - 1] - 2.0 * x[i] + x[i + 1];
  if (!(std::abs(denom) > 1e-300)) return static_cast<double>(i);
  const double off = 0.5 * (x[i - 1] - x[i + 1]) / denom;
  return static_cast<double>(i) + std::clamp(off, -0.5, 0.5);
}

// Local maxima with plateau handling: a run of equal samples higher than
// both neighbours counts once, at its first index.
std::vector<int64_t> local_maxima(const std::vector<double>& x) {
  std::vector<int64_t> out;
  const int64_t n = static_cast<int64_t>(x.size());
  int64_t i = 1;
  while (i + 1 < n) {
    if (x[i] <= x[i - 1]) {
      ++i;
      continue;
    }
    int64_t j = i;
    while (j + 1 < n && x[j + 1] == x[i]) ++j;
    if (j + 1 < n && x[j + 1] < x[i]) out.push_back(i);
    i = j + 1;
  }
  return out;
}

// Height above the higher of the two bracketing minima, where each bracket
// runs to the nearest strictly higher sample or to the signal edge.
double peak_prominence(const std::vector<double>& x, int64_t p) {
  const double h = x[p];
  double left_min = h;
  for (int64_t i = p - 1; i >= 0; --i) {
    if (x[i] > h) break;
    left_min = std::min(left_min, x[i]);
  }
  double right_min = h;
  for (int64_t i = p + 1; i < static_cast<int64_t>(x.size()); ++i) {
    if (x[i] > h) break;
    right_min = std::min(right_min, x[i]);
  }
  return h - std::max(left_min, right_min);
}

double population_std(const std::vector<double>& v, double mean) {
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

}  // namespace

double estimate_hr(const std::vector<double>& signal, double fs) {
  if (!(fs > 8.0)) throw InvalidArgument("estimate_hr: fs must exceed 8 Hz");
  const int64_t n = static_cast<int64_t>(signal.size());
  if (static_cast<double>(n) < 4.0 * fs)
    throw SignalTooShort("estimate_hr: need at least 4 seconds of samples");

  double mean = 0.0;
  for (double x : signal) mean += x;
  mean /= static_cast<double>(n);

  const int64_t k_lo =
      static_cast<int64_t>(std::ceil(kBandLoHz * static_cast<double>(n) / fs));
  const int64_t k_hi = std::min<int64_t>(
      static_cast<int64_t>(std::floor(kBandHiHz * static_cast<double>(n) / fs)),
      n / 2);

  double band_power = 0.0;
  double best_power = -1.0;
  int64_t best_k = -1;
  for (int64_t k = k_lo; k <= k_hi; ++k) {
    double re = 0.0;
    double im = 0.0;
    const double w = 2.0 * std::numbers::pi * static_cast<double>(k) /
                     static_cast<double>(n);
    for (int64_t t = 0; t < n; ++t) {
      const double v = signal[t] - mean;
      const double a = w * static_cast<double>(t);
      re += v * std::cos(a);
      im -= v * std::sin(a);
    }
    const double power = (re * re + im * im) / (static_cast<double>(n) * fs);
    band_power += power;
    if (power > best_power) {
      best_power = power;
      best_k = k;
    }
  }
  if (best_k < 0 || band_power < kMinBandPower)
    throw NoPowerInBand("estimate_hr: no spectral power in 0.75-4 Hz");
  return 60.0 * static_cast<double>(best_k) * fs / static_cast<double>(n);
}

std::vector<double> aligned_second_difference(const std::vector<double>& x) {
  const int64_t n = static_cast<int64_t>(x.size());
  std::vector<double> out(static_cast<size_t>(std::max<int64_t>(n, 0)), 0.0);
  for (int64_t t = 1; t + 1 < n; ++t)
    out[t] = x[t + 1] - 2.0 * x[t] + x[t - 1];
  return out;
}

Fiducials detect_fiducials(const std::vector<double>& sd, double fs,
                           double hr_hint_bpm, const FiducialConfig& cfg) {
  if (!(fs > 0.0)) throw InvalidArgument("detect_fiducials: fs must be positive");
  if (hr_hint_bpm < 0.0)
    throw InvalidArgument("detect_fiducials: hr hint must be positive or zero");
  if (!(cfg.anchor_prominence_frac >= 0.0) ||
      !(cfg.anchor_separation_beats > 0.0) ||
      !(cfg.notch_refractory_beats >= 0.0) ||
      !(cfg.notch_prominence_frac >= 0.0))
    throw InvalidArgument("detect_fiducials: malformed detector config");

  const std::vector<int64_t> maxima = local_maxima(sd);
  if (maxima.empty())
    throw NoBeatsFound("detect_fiducials: no local maxima in input");

  std::vector<Peak> peaks;
  peaks.reserve(maxima.size());
  double max_prom = 0.0;
  for (int64_t idx : maxima) {
    Peak p{idx, sd[idx], peak_prominence(sd, idx), subsample_apex(sd, idx)};
    max_prom = std::max(max_prom, p.prominence);
    peaks.push_back(p);
  }
  std::vector<Peak> strong;
  for (const Peak& p : peaks)
    if (p.prominence >= cfg.anchor_prominence_frac * max_prom)
      strong.push_back(p);
  if (strong.empty())
    throw NoBeatsFound("detect_fiducials: no peaks pass the prominence gate");

  // Gap structure of the prominent peaks. A dicrotic waveform shows two
  // peaks per beat, so the gaps alternate short/long around the median and
  // their quartile sum recovers the true period even when the periodogram
  // locks onto a harmonic; a single visible family gives independent,
  // near-equal gaps instead. Alternation of signs around the median is
  // what separates the two cases, since the short/long split can be too
  // slim for a plain spread test.
  std::vector<double> gaps;
  for (size_t i = 0; i + 1 < strong.size(); ++i)
    gaps.push_back(strong[i + 1].pos - strong[i].pos);
  double gap_lo = 0.0, gap_hi = 0.0, gap_med = 0.0;
  bool two_family = false;
  if (gaps.size() >= 3) {
    std::vector<double> sorted = gaps;
    std::sort(sorted.begin(), sorted.end());
    gap_med = sorted[sorted.size() / 2];
    std::vector<double> kept;  // twin splits would poison the quartiles
    for (double g : gaps)
      if (g >= 0.25 * gap_med) kept.push_back(g);
    std::vector<double> ksort = kept;
    std::sort(ksort.begin(), ksort.end());
    gap_lo = ksort[ksort.size() / 4];
    gap_hi = ksort[(ksort.size() * 3) / 4];
    // Clear bimodal spread decides outright; jitter alone cannot widen the
    // quartiles this far. A slimmer split must show coherent alternation.
    if (gap_lo < 0.9 * gap_hi) {
      two_family = true;
    } else {
      const double mid = 0.5 * (gap_lo + gap_hi);
      int alternating = 0, counted = 0;
      for (size_t i = 0; i + 1 < kept.size(); ++i) {
        const double a = kept[i] - mid;
        const double b = kept[i + 1] - mid;
        if (a == 0.0 || b == 0.0) continue;
        ++counted;
        if (a * b < 0.0) ++alternating;
      }
      two_family = counted >= 5 && gap_lo < gap_hi &&
                   static_cast<double>(alternating) >= 0.75 * counted;
    }
  } else if (!gaps.empty()) {
    gap_med = gaps[0];
    gap_lo = gap_hi = gaps[0];
  }
  const double struct_period =
      gaps.empty() ? 0.0 : (two_family ? gap_lo + gap_hi : gap_med);

  // Beat period: taken from the hint when given, otherwise from the
  // spectral estimate with its harmonic factor fixed by the gap structure.
  double beat_period;  // samples
  if (hr_hint_bpm > 0.0) {
    beat_period = 60.0 / hr_hint_bpm * fs;
  } else {
    const double p0 = 60.0 / estimate_hr(sd, fs) * fs;
    double mult = 1.0;
    if (struct_period > 0.0)
      mult = std::clamp(std::round(struct_period / p0), 1.0, 3.0);
    beat_period = mult * p0;
  }
  if (static_cast<double>(sd.size()) < beat_period)
    throw SignalTooShort("detect_fiducials: input shorter than one beat");

  // Diastolic anchors. With both families visible the diastolic one is
  // picked by the length of the gap to the next prominent peak, against
  // the midpoint of the two family gaps; with one family every prominent
  // peak anchors.
  const double gap_split = two_family ? 0.5 * (gap_lo + gap_hi) : 0.0;
  std::vector<Peak> dia_family;
  for (size_t i = 0; i < strong.size(); ++i) {
    if (!two_family) {
      dia_family.push_back(strong[i]);
      continue;
    }
    bool is_dia;
    if (i + 1 < strong.size()) {
      const double gap = strong[i + 1].pos - strong[i].pos;
      is_dia = (gap > gap_split) == cfg.diastolic_before_long_gap;
    } else if (i > 0) {
      // The last peak has no following gap; the preceding gap carries the
      // same information with the test inverted, since families alternate.
      const double gap = strong[i].pos - strong[i - 1].pos;
      is_dia = (gap > gap_split) != cfg.diastolic_before_long_gap;
    } else {
      is_dia = true;
    }
    if (is_dia) dia_family.push_back(strong[i]);
  }
  std::sort(dia_family.begin(), dia_family.end(),
            [](const Peak& a, const Peak& b) {
              if (a.height != b.height) return a.height > b.height;
              return a.idx < b.idx;
            });
  const double min_sep = cfg.anchor_separation_beats * beat_period;
  std::vector<int64_t> anchors;
  for (const Peak& p : dia_family) {
    bool clear = true;
    for (int64_t a : anchors) {
      if (std::abs(static_cast<double>(p.idx - a)) < min_sep) {
        clear = false;
        break;
      }
    }
    if (clear) anchors.push_back(p.idx);
  }
  if (anchors.empty())
    throw NoBeatsFound("detect_fiducials: no diastolic anchors identified");
  std::sort(anchors.begin(), anchors.end());

  // Dicrotic notch: earliest remaining peak after the refractory gap and
  // before the next anchor. A small prominence floor rejects noise ripples.
  const double refractory = cfg.notch_refractory_beats * beat_period;
  const double notch_floor = cfg.notch_prominence_frac * max_prom;
  Fiducials fid;
  for (size_t k = 0; k < anchors.size(); ++k) {
    const int64_t a = anchors[k];
    const int64_t limit = k + 1 < anchors.size()
                              ? anchors[k + 1]
                              : static_cast<int64_t>(sd.size());
    int64_t notch = -1;
    for (const Peak& p : peaks) {
      if (p.idx <= a || p.idx >= limit) continue;
      if (static_cast<double>(p.idx - a) < refractory) continue;
      if (p.prominence < notch_floor) continue;
      notch = p.idx;
      break;
    }
    if (notch < 0) continue;  // unpaired beat, dropped
    // The centered second-difference stencil responds to the one-sided
    // curvature onset at the diastolic foot one sample late, so the reported
    // diastolic index is the sample before the anchor apex. The notch apex
    // needs no shift: a valley's curvature maximum is centered on it.
    const int64_t dia = a - 1;
    fid.diastolic_idx.push_back(dia);
    fid.notch_idx.push_back(notch);
    fid.lvet_ms.push_back(static_cast<double>(notch - dia) / fs * 1000.0);
  }
  return fid;
}

std::vector<std::pair<int64_t, double>> lvet_windows(const Fiducials& fid,
                                                     double fs,
                                                     double smooth_window_s) {
  if (!(fs > 0.0)) throw InvalidArgument("lvet_windows: fs must be positive");
  if (!(smooth_window_s > 0.0))
    throw InvalidArgument("lvet_windows: window must be positive");
  if (fid.diastolic_idx.size() != fid.notch_idx.size() ||
      fid.diastolic_idx.size() != fid.lvet_ms.size())
    throw LengthMismatch("lvet_windows: fiducial arrays disagree in length");
  if (fid.diastolic_idx.empty())
    throw NoPairedBeats("lvet_windows: no paired beats");

  std::vector<std::pair<int64_t, double>> out;
  int64_t cur = -1;
  double sum = 0.0;
  int64_t count = 0;
  for (size_t i = 0; i < fid.diastolic_idx.size(); ++i) {
    const double t = static_cast<double>(fid.diastolic_idx[i]) / fs;
    const int64_t w = static_cast<int64_t>(std::floor(t / smooth_window_s));
    if (w != cur) {
      if (count > 0) out.emplace_back(cur, sum / static_cast<double>(count));
      cur = w;
      sum = 0.0;
      count = 0;
    }
    sum += fid.lvet_ms[i];
    ++count;
  }
  if (count > 0) out.emplace_back(cur, sum / static_cast<double>(count));
  return out;
}

std::vector<double> lvet_series(const Fiducials& fid, double fs,
                                double smooth_window_s) {
  std::vector<double> out;
  for (const auto& [w, v] : lvet_windows(fid, fs, smooth_window_s))
    out.push_back(v);
  return out;
}

MaeSummary mae_summary(const std::vector<double>& pred,
                       const std::vector<double>& truth) {
  if (pred.size() != truth.size() || pred.empty())
    throw LengthMismatch("mae_summary: need equal, nonzero lengths");
  std::vector<double> abs_err(pred.size());
  for (size_t i = 0; i < pred.size(); ++i)
    abs_err[i] = std::abs(pred[i] - truth[i]);
  double mean = 0.0;
  for (double e : abs_err) mean += e;
  mean /= static_cast<double>(abs_err.size());
  return {mean, population_std(abs_err, mean)};
}

BlandAltman bland_altman(const std::vector<double>& pred,
                         const std::vector<double>& truth) {
  if (pred.size() != truth.size())
    throw LengthMismatch("bland_altman: need equal lengths");
  if (pred.size() < 2)
    throw InvalidArgument("bland_altman: need at least 2 paired points");
  BlandAltman ba;
  std::vector<double> diff(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    diff[i] = pred[i] - truth[i];
    ba.points.emplace_back(truth[i], diff[i]);
  }
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= static_cast<double>(diff.size());
  const double sd = population_std(diff, mean);
  ba.mean_diff = mean;
  ba.lower_limit = mean - 1.96 * sd;
  ba.upper_limit = mean + 1.96 * sd;
  return ba;
}

}  // namespace pulsekit
