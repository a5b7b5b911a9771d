#include "pulsekit/io.hpp"

#include <bit>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ios>
#include <sstream>

#include <json.hpp>

#include "pulsekit/errors.hpp"

// Payloads are written as raw in-memory bytes, so the stored byte order is
// whatever the host uses. The format says little-endian; hold the build to it.
static_assert(std::endian::native == std::endian::little,
              "tensor files are little-endian; add byte swapping before "
              "building for a big-endian target");

namespace pulsekit {
namespace {

namespace stdfs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// Shortest-ish exact decimal: 17 significant digits round-trip any double.
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') {
    throw BadFormat(what + ": '" + s + "' is not a number");
  }
  return v;
}

int64_t parse_i64(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const long long v = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0') {
    throw BadFormat(what + ": '" + s + "' is not an integer");
  }
  return static_cast<int64_t>(v);
}

uint64_t parse_u64(const std::string& s, const std::string& what) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || s[0] == '-') {
    throw BadFormat(what + ": '" + s + "' is not an unsigned integer");
  }
  return static_cast<uint64_t>(v);
}

// All writers funnel through this: the bytes land in <path>.tmp and only an
// explicit commit renames them over the target, so readers never see a
// half-written file and a failed write leaves the old artifact untouched.
class AtomicFile {
 public:
  explicit AtomicFile(const std::string& path)
      : final_(path), tmp_(path + ".tmp") {
    const stdfs::path parent = stdfs::path(final_).parent_path();
    if (!parent.empty()) {
      std::error_code ec;
      stdfs::create_directories(parent, ec);
      if (ec) {
        throw IoError("cannot create directory " + parent.string() + ": " +
                      ec.message());
      }
    }
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot open " + tmp_ + " for writing");
  }

  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      stdfs::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return out_; }

  void commit() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + tmp_);
    out_.close();
    std::error_code ec;
    stdfs::rename(tmp_, final_, ec);
    if (ec) {
      throw IoError("cannot rename " + tmp_ + " to " + final_ + ": " +
                    ec.message());
    }
    committed_ = true;
  }

 private:
  std::string final_;
  std::string tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return in;
}

// getline plus CRLF tolerance; returns false at a clean EOF.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::string require_line(std::istream& in, const std::string& path,
                         const std::string& what) {
  std::string line;
  if (!next_line(in, line)) {
    throw BadFormat(path + ": missing " + what);
  }
  return line;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void require_eof(std::istream& in, const std::string& path) {
  if (in.peek() != std::char_traits<char>::eof()) {
    throw BadFormat(path + ": trailing data after expected end");
  }
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r";
  const size_t a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

}  // namespace

// ---- clip tensor file ------------------------------------------------------

void save_clip_tensor(const std::string& path, const VideoClip& clip) {
  const int64_t t = clip.frames_count, h = clip.height, w = clip.width;
  if (t < 1 || h < 1 || w < 1) {
    throw InvalidArgument("clip dimensions must be positive");
  }
  if (!(clip.fs > 0.0)) throw InvalidArgument("clip fs must be > 0");
  const size_t numel = static_cast<size_t>(t * h * w * 3);
  if (clip.frames.size() != numel) {
    throw ShapeMismatch("clip frame buffer does not match T*H*W*3");
  }

  AtomicFile file(path);
  file.stream() << t << ' ' << h << ' ' << w << ' ' << 3 << ' '
                << fmt_double(clip.fs) << '\n';
  // Chunked conversion keeps the staging buffer one frame wide.
  const size_t frame_elems = static_cast<size_t>(h * w * 3);
  std::vector<float> staged(frame_elems);
  for (int64_t ti = 0; ti < t; ++ti) {
    const double* src = clip.frames.data() + static_cast<size_t>(ti) * frame_elems;
    for (size_t i = 0; i < frame_elems; ++i) {
      staged[i] = static_cast<float>(src[i]);
    }
    file.stream().write(reinterpret_cast<const char*>(staged.data()),
                        static_cast<std::streamsize>(frame_elems * 4));
  }
  file.commit();
}

VideoClip load_clip_tensor(const std::string& path) {
  std::ifstream in = open_input(path);
  const std::string header = require_line(in, path, "header line");
  std::istringstream hs(header);
  int64_t t = 0, h = 0, w = 0, c = 0;
  double fs = 0.0;
  if (!(hs >> t >> h >> w >> c >> fs) || !(hs >> std::ws).eof()) {
    throw BadFormat(path + ": header is not 'T H W C fs'");
  }
  if (t < 1 || h < 1 || w < 1) {
    throw BadFormat(path + ": non-positive dimensions in header");
  }
  if (c != 3) throw BadFormat(path + ": expected 3 channels");
  if (!(fs > 0.0)) throw BadFormat(path + ": fs must be > 0");
  // Stepwise bound so the product cannot overflow before it is checked.
  const int64_t max_elems = int64_t(1) << 30;
  if (h > max_elems / 3 || w > max_elems / (h * 3) ||
      t > max_elems / (h * w * 3)) {
    throw BadFormat(path + ": declared size is implausibly large");
  }

  const size_t numel = static_cast<size_t>(t * h * w * 3);
  std::vector<float> raw(numel);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(numel * 4));
  if (static_cast<size_t>(in.gcount()) != numel * 4) {
    throw BadFormat(path + ": payload truncated");
  }
  require_eof(in, path);

  VideoClip clip;
  clip.frames_count = t;
  clip.height = h;
  clip.width = w;
  clip.fs = fs;
  clip.frames.assign(raw.begin(), raw.end());
  return clip;
}

// ---- clip sidecar ----------------------------------------------------------

namespace {
const char* kSidecarHeader = "sample,ppg,diastolic_idx,notch_idx,lvet_ms";
}

void save_clip_sidecar(const std::string& path, const PpgSignal& ppg,
                       const Fiducials& fiducials) {
  if (!(ppg.fs > 0.0)) throw InvalidArgument("ppg fs must be > 0");
  const size_t beats = fiducials.diastolic_idx.size();
  if (fiducials.notch_idx.size() != beats ||
      fiducials.lvet_ms.size() != beats) {
    throw LengthMismatch("fiducial vectors must have equal length");
  }

  AtomicFile file(path);
  std::ostream& out = file.stream();
  out << "# fs=" << fmt_double(ppg.fs)
      << " normalized=" << (ppg.normalized ? 1 : 0) << '\n';
  out << kSidecarHeader << '\n';
  const size_t rows = std::max(ppg.samples.size(), beats);
  for (size_t i = 0; i < rows; ++i) {
    out << i << ',';
    if (i < ppg.samples.size()) out << fmt_double(ppg.samples[i]);
    out << ',';
    if (i < beats) {
      out << fiducials.diastolic_idx[i] << ',' << fiducials.notch_idx[i] << ','
          << fmt_double(fiducials.lvet_ms[i]);
    } else {
      out << ",,";
    }
    out << '\n';
  }
  file.commit();
}

ClipSidecar load_clip_sidecar(const std::string& path) {
  std::ifstream in = open_input(path);
  const std::string meta = require_line(in, path, "metadata line");
  double fs = 0.0;
  int normalized = 0;
  if (std::sscanf(meta.c_str(), "# fs=%lf normalized=%d", &fs, &normalized) !=
      2) {
    throw BadFormat(path + ": first line is not '# fs=<fs> normalized=<0|1>'");
  }
  if (!(fs > 0.0)) throw BadFormat(path + ": fs must be > 0");
  if (require_line(in, path, "column header") != kSidecarHeader) {
    throw BadFormat(path + ": unexpected column header");
  }

  ClipSidecar sc;
  sc.ppg.fs = fs;
  sc.ppg.normalized = normalized != 0;
  std::string line;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 5) {
      throw BadFormat(path + ": expected 5 fields, got " +
                      std::to_string(f.size()));
    }
    if (!f[1].empty()) sc.ppg.samples.push_back(parse_double(f[1], path));
    const bool any = !f[2].empty() || !f[3].empty() || !f[4].empty();
    const bool all = !f[2].empty() && !f[3].empty() && !f[4].empty();
    if (any != all) {
      throw BadFormat(path + ": partial fiducial row '" + line + "'");
    }
    if (all) {
      sc.fiducials.diastolic_idx.push_back(parse_i64(f[2], path));
      sc.fiducials.notch_idx.push_back(parse_i64(f[3], path));
      sc.fiducials.lvet_ms.push_back(parse_double(f[4], path));
    }
  }
  return sc;
}

// ---- enum names ------------------------------------------------------------

std::string to_string(Arch a) {
  return a == Arch::attention ? "attention" : "plain";
}

std::string to_string(LossKind k) { return k == LossKind::mse ? "mse" : "mae"; }

Arch arch_from_string(const std::string& s) {
  if (s == "attention") return Arch::attention;
  if (s == "plain") return Arch::plain;
  throw BadConfig("unknown arch '" + s + "' (expected attention or plain)");
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mse") return LossKind::mse;
  if (s == "mae") return LossKind::mae;
  throw BadConfig("unknown loss '" + s + "' (expected mse or mae)");
}

// ---- parameter checkpoint --------------------------------------------------

namespace {

const char* kCheckpointMagic = "PKCKPT 1";

ordered_json model_config_json(const ModelConfig& cfg, int64_t input_hw,
                               int64_t t_window) {
  ordered_json j;
  j["arch"] = to_string(cfg.arch);
  j["use_fd_input"] = cfg.use_fd_input;
  j["use_sd_input"] = cfg.use_sd_input;
  j["use_fd_target"] = cfg.use_fd_target;
  j["use_sd_target"] = cfg.use_sd_target;
  j["loss_kind"] = to_string(cfg.loss_kind);
  j["weight_fd"] = cfg.weight_fd;
  j["weight_sd"] = cfg.weight_sd;
  j["filters_a"] = cfg.filters_a;
  j["filters_b"] = cfg.filters_b;
  j["gru_hidden"] = cfg.gru_hidden;
  j["input_hw"] = input_hw;
  j["t_window"] = t_window;
  return j;
}

void save_checkpoint_impl(
    const std::string& path, const Model& m,
    const std::vector<std::pair<std::string, Tensor>>& named,
    const std::vector<std::vector<double>>* values) {
  if (values != nullptr && values->size() != named.size()) {
    throw LengthMismatch("value snapshot count does not match parameters");
  }

  AtomicFile file(path);
  std::ostream& out = file.stream();
  out << kCheckpointMagic << '\n';
  out << model_config_json(m.cfg, m.input_hw, m.t_window).dump() << '\n';
  out << named.size() << '\n';
  for (size_t i = 0; i < named.size(); ++i) {
    const auto& [name, tensor] = named[i];
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
      throw InvalidArgument("parameter name '" + name +
                            "' is empty or contains whitespace");
    }
    const std::vector<double>* payload = &tensor.data();
    if (values != nullptr) {
      const std::vector<double>& v = (*values)[i];
      if (v.size() != static_cast<size_t>(tensor.numel())) {
        throw LengthMismatch("value snapshot for '" + name +
                             "' has the wrong size");
      }
      payload = &v;
    }
    out << name << ' ' << tensor.shape().size();
    for (int64_t d : tensor.shape()) out << ' ' << d;
    out << '\n';
    out.write(reinterpret_cast<const char*>(payload->data()),
              static_cast<std::streamsize>(payload->size() * 8));
    out << '\n';
  }
  file.commit();
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m) {
  save_checkpoint_impl(path, m, m.named_params(), nullptr);
}

void save_checkpoint(const std::string& path, const Model& m,
                     const std::vector<std::vector<double>>& values) {
  save_checkpoint_impl(path, m, m.named_params(), &values);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_input(path);
  if (require_line(in, path, "magic line") != kCheckpointMagic) {
    throw BadFormat(path + ": not a checkpoint file");
  }

  const std::string header = require_line(in, path, "config header");
  const ordered_json j = ordered_json::parse(header, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw BadFormat(path + ": config header is not valid JSON");
  }
  Checkpoint ck;
  try {
    ck.config.arch = arch_from_string(j.at("arch").get<std::string>());
    ck.config.use_fd_input = j.at("use_fd_input").get<bool>();
    ck.config.use_sd_input = j.at("use_sd_input").get<bool>();
    ck.config.use_fd_target = j.at("use_fd_target").get<bool>();
    ck.config.use_sd_target = j.at("use_sd_target").get<bool>();
    ck.config.loss_kind =
        loss_kind_from_string(j.at("loss_kind").get<std::string>());
    ck.config.weight_fd = j.at("weight_fd").get<double>();
    ck.config.weight_sd = j.at("weight_sd").get<double>();
    ck.config.filters_a = j.at("filters_a").get<int64_t>();
    ck.config.filters_b = j.at("filters_b").get<int64_t>();
    ck.config.gru_hidden = j.at("gru_hidden").get<int64_t>();
    ck.input_hw = j.at("input_hw").get<int64_t>();
    ck.t_window = j.at("t_window").get<int64_t>();
  } catch (const ordered_json::exception& e) {
    throw BadFormat(path + ": bad config header: " + e.what());
  } catch (const Error& e) {
    throw BadFormat(path + ": bad config header: " + e.what());
  }

  const int64_t count =
      parse_i64(require_line(in, path, "tensor count"), path);
  if (count < 0 || count > 1000000) {
    throw BadFormat(path + ": implausible tensor count");
  }

  ck.tensors.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) {
    const std::string tline = require_line(in, path, "tensor header");
    std::istringstream ts(tline);
    std::string name;
    int64_t ndim = 0;
    if (!(ts >> name >> ndim) || ndim < 1 || ndim > 8) {
      throw BadFormat(path + ": bad tensor header '" + tline + "'");
    }
    std::vector<int64_t> shape(static_cast<size_t>(ndim));
    int64_t numel = 1;
    for (int64_t& d : shape) {
      if (!(ts >> d) || d < 1 || numel > (int64_t(1) << 40) / d) {
        throw BadFormat(path + ": bad dims in '" + tline + "'");
      }
      numel *= d;
    }
    if (!(ts >> std::ws).eof()) {
      throw BadFormat(path + ": trailing tokens in '" + tline + "'");
    }
    std::vector<double> value(static_cast<size_t>(numel));
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * 8));
    if (static_cast<size_t>(in.gcount()) != value.size() * 8) {
      throw BadFormat(path + ": payload truncated for '" + name + "'");
    }
    if (in.get() != '\n') {
      throw BadFormat(path + ": missing newline after '" + name + "'");
    }
    ck.tensors.emplace_back(name,
                            Tensor::from(std::move(shape), std::move(value)));
  }
  require_eof(in, path);
  return ck;
}

Model model_from_checkpoint(const Checkpoint& ck) {
  Model m = build_model(ck.config, ck.input_hw, ck.t_window, 0);
  auto named = m.named_params();
  if (named.size() != ck.tensors.size()) {
    throw BadFormat("checkpoint has " + std::to_string(ck.tensors.size()) +
                    " tensors, model expects " + std::to_string(named.size()));
  }
  for (size_t i = 0; i < named.size(); ++i) {
    auto& [name, param] = named[i];
    const auto& [ck_name, ck_tensor] = ck.tensors[i];
    if (name != ck_name) {
      throw BadFormat("checkpoint tensor '" + ck_name + "' where '" + name +
                      "' was expected");
    }
    if (param.shape() != ck_tensor.shape()) {
      throw ShapeMismatch("checkpoint tensor '" + ck_name +
                          "' shape does not match the model");
    }
    param.data() = ck_tensor.data();
  }
  return m;
}

// ---- CSV artifacts ---------------------------------------------------------

void save_loss_csv(const std::string& path,
                   const std::vector<double>& epoch_loss) {
  AtomicFile file(path);
  file.stream() << "epoch,mean_loss\n";
  for (size_t i = 0; i < epoch_loss.size(); ++i) {
    file.stream() << (i + 1) << ',' << fmt_double(epoch_loss[i]) << '\n';
  }
  file.commit();
}

void save_bland_altman_csv(const std::string& path, const BlandAltman& ba) {
  AtomicFile file(path);
  file.stream() << "truth,diff\n";
  for (const auto& [truth, diff] : ba.points) {
    file.stream() << fmt_double(truth) << ',' << fmt_double(diff) << '\n';
  }
  file.commit();
}

void save_lvet_series_csv(const std::string& path,
                          const std::vector<LvetSeriesRow>& rows) {
  AtomicFile file(path);
  file.stream() << "clip,window_start_s,lvet_true_ms,lvet_pred_ms\n";
  for (const LvetSeriesRow& r : rows) {
    file.stream() << r.clip << ',' << fmt_double(r.window_start_s) << ','
                  << fmt_double(r.lvet_true_ms) << ','
                  << fmt_double(r.lvet_pred_ms) << '\n';
  }
  file.commit();
}

void save_eval_report_json(const std::string& path, const EvalReport& rep) {
  ordered_json j;
  j["clips_evaluated"] = rep.clips_evaluated;
  j["clips_skipped"] = rep.clips_skipped;
  const auto metric = [](const MaeSummary& mae, const BlandAltman& ba,
                         const std::vector<double>& truth,
                         const std::vector<double>& pred) {
    ordered_json m;
    m["mae_mean"] = mae.mean;
    m["mae_std"] = mae.std;
    m["bland_altman"] = {{"mean_diff", ba.mean_diff},
                         {"lower_limit", ba.lower_limit},
                         {"upper_limit", ba.upper_limit}};
    m["true"] = truth;
    m["pred"] = pred;
    return m;
  };
  j["hr"] = metric(rep.hr_mae, rep.ba_hr, rep.hr_true, rep.hr_pred);
  j["lvet"] = metric(rep.lvet_mae, rep.ba_lvet, rep.lvet_true, rep.lvet_pred);

  AtomicFile file(path);
  file.stream() << j.dump(2) << '\n';
  file.commit();
}

// ---- dataset manifest ------------------------------------------------------

namespace {
const char* kManifestHeader =
    "clip,seed,hr_bpm,hr_jitter,systolic_width,dicrotic_amp,pulse_scale,"
    "noise_sigma,specular_amp,motion_amp,tensor_path,sidecar_path";
}

void save_manifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries) {
  AtomicFile file(path);
  std::ostream& out = file.stream();
  out << kManifestHeader << '\n';
  for (const ManifestEntry& e : entries) {
    for (const std::string* p : {&e.tensor_path, &e.sidecar_path}) {
      if (p->empty() || p->find_first_of(",\n") != std::string::npos) {
        throw InvalidArgument("manifest path '" + *p +
                              "' is empty or contains a comma");
      }
    }
    const ClipParams& cp = e.params;
    out << e.clip_id << ',' << cp.seed << ',' << fmt_double(cp.hr_bpm) << ','
        << fmt_double(cp.hr_jitter) << ',' << fmt_double(cp.systolic_width)
        << ',' << fmt_double(cp.dicrotic_amp) << ','
        << fmt_double(cp.pulse_scale) << ',' << fmt_double(cp.noise_sigma)
        << ',' << fmt_double(cp.specular_amp) << ','
        << fmt_double(cp.motion_amp) << ',' << e.tensor_path << ','
        << e.sidecar_path << '\n';
  }
  file.commit();
}

std::vector<ManifestEntry> load_manifest(const std::string& path) {
  std::ifstream in = open_input(path);
  if (require_line(in, path, "header") != kManifestHeader) {
    throw BadFormat(path + ": unexpected manifest header");
  }
  std::vector<ManifestEntry> entries;
  std::string line;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv(line);
    if (f.size() != 12) {
      throw BadFormat(path + ": expected 12 fields, got " +
                      std::to_string(f.size()));
    }
    ManifestEntry e;
    e.clip_id = parse_i64(f[0], path);
    e.params.seed = parse_u64(f[1], path);
    e.params.hr_bpm = parse_double(f[2], path);
    e.params.hr_jitter = parse_double(f[3], path);
    e.params.systolic_width = parse_double(f[4], path);
    e.params.dicrotic_amp = parse_double(f[5], path);
    e.params.pulse_scale = parse_double(f[6], path);
    e.params.noise_sigma = parse_double(f[7], path);
    e.params.specular_amp = parse_double(f[8], path);
    e.params.motion_amp = parse_double(f[9], path);
    e.tensor_path = f[10];
    e.sidecar_path = f[11];
    if (e.tensor_path.empty() || e.sidecar_path.empty()) {
      throw BadFormat(path + ": empty file path in row '" + line + "'");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

// ---- primitives for other writers -------------------------------------------

void write_text_atomic(const std::string& path, const std::string& content) {
  AtomicFile file(path);
  file.stream().write(content.data(),
                      static_cast<std::streamsize>(content.size()));
  file.commit();
}

std::string csv_double(double v) { return fmt_double(v); }

// ---- flat key=value config -------------------------------------------------

namespace {

std::pair<std::string, std::string> parse_kv(const std::string& raw,
                                             const std::string& where) {
  const size_t eq = raw.find('=');
  if (eq == std::string::npos) {
    throw BadConfig(where + ": expected key=value, got '" + raw + "'");
  }
  std::string key = trim(raw.substr(0, eq));
  std::string value = trim(raw.substr(eq + 1));
  if (key.empty()) {
    throw BadConfig(where + ": empty key in '" + raw + "'");
  }
  return {std::move(key), std::move(value)};
}

}  // namespace

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream in = open_input(path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (next_line(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    auto [key, value] =
        parse_kv(stripped, path + ":" + std::to_string(lineno));
    kv[std::move(key)] = std::move(value);
  }
  return kv;
}

void apply_kv_overrides(std::map<std::string, std::string>& kv,
                        const std::vector<std::string>& overrides) {
  for (const std::string& o : overrides) {
    auto [key, value] = parse_kv(trim(o), "override");
    kv[std::move(key)] = std::move(value);
  }
}

}  // namespace pulsekit
