#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pulsekit/metrics.hpp"
#include "pulsekit/model.hpp"
#include "pulsekit/render.hpp"

namespace pulsekit {

// Every writer in this file goes through a temp file in the target directory
// followed by a rename, so a crash mid-write never leaves a half-written
// artifact under the final name. Parent directories are created on demand.
// Failures to open or flush throw IoError; parse failures on load throw
// BadFormat (BadConfig for the key=value reader).

// ---- clip tensor file ------------------------------------------------------
// One ASCII header line "T H W C fs" followed by T*H*W*C little-endian 32-bit
// floats in row-major [T,H,W,C] order. Values are stored at float precision;
// a load/save cycle reproduces the file byte for byte.
void save_clip_tensor(const std::string& path, const VideoClip& clip);
VideoClip load_clip_tensor(const std::string& path);

// ---- clip sidecar ----------------------------------------------------------
// CSV next to the tensor file carrying the source PPG and its fiducials:
//   # fs=<fs> normalized=<0|1>
//   sample,ppg,diastolic_idx,notch_idx,lvet_ms
// The ppg column runs over all samples; the three fiducial columns run over
// beats and are left empty once beats are exhausted.
struct ClipSidecar {
  PpgSignal ppg;
  Fiducials fiducials;
};
void save_clip_sidecar(const std::string& path, const PpgSignal& ppg,
                       const Fiducials& fiducials);
ClipSidecar load_clip_sidecar(const std::string& path);

// ---- parameter checkpoint --------------------------------------------------
// Named-tensor container:
//   line 1  "PKCKPT 1"
//   line 2  JSON header with the model config and window geometry
//   line 3  tensor count
//   per tensor: one line "name ndim d0 d1 ...", then numel little-endian
//   64-bit doubles, then a newline.
// Payload bytes are written verbatim, so the round-trip is bit-exact.
struct Checkpoint {
  ModelConfig config;
  int64_t input_hw = 0;
  int64_t t_window = 0;
  std::vector<std::pair<std::string, Tensor>> tensors;
};
void save_checkpoint(const std::string& path, const Model& m);
// Same topology, different values: `values` must match m.named_params() in
// order and size (used for best-epoch snapshots).
void save_checkpoint(const std::string& path, const Model& m,
                     const std::vector<std::vector<double>>& values);
Checkpoint load_checkpoint(const std::string& path);
// Rebuilds the model the checkpoint describes and installs its parameters.
Model model_from_checkpoint(const Checkpoint& ck);

// ---- enum names used by checkpoints, configs, and the ablation table -------
std::string to_string(Arch a);
std::string to_string(LossKind k);
Arch arch_from_string(const std::string& s);
LossKind loss_kind_from_string(const std::string& s);

// ---- CSV artifacts ---------------------------------------------------------
// "epoch,mean_loss", epochs numbered from 1.
void save_loss_csv(const std::string& path,
                   const std::vector<double>& epoch_loss);

// "truth,diff" scatter points; the limits live in the JSON report.
void save_bland_altman_csv(const std::string& path, const BlandAltman& ba);

// One row per smoothing window that produced a paired LVET value.
struct LvetSeriesRow {
  int64_t clip = 0;
  double window_start_s = 0.0;
  double lvet_true_ms = 0.0;
  double lvet_pred_ms = 0.0;
};
void save_lvet_series_csv(const std::string& path,
                          const std::vector<LvetSeriesRow>& rows);

void save_eval_report_json(const std::string& path, const EvalReport& rep);

// ---- dataset manifest ------------------------------------------------------
// CSV with one row per clip: id, per-clip seed, the sampled generator
// parameters, and the clip's file names (relative to the manifest directory).
struct ManifestEntry {
  int64_t clip_id = 0;
  ClipParams params;
  std::string tensor_path;
  std::string sidecar_path;
};
void save_manifest(const std::string& path,
                   const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest(const std::string& path);

// ---- primitives for other writers -------------------------------------------
// Atomic whole-file write (temp-then-rename) for artifact writers that build
// their content elsewhere, and the exact-decimal formatter they share.
void write_text_atomic(const std::string& path, const std::string& content);
std::string csv_double(double v);

// ---- flat key=value config -------------------------------------------------
// Lines are "section.key=value"; '#' starts a comment, blank lines are
// ignored, whitespace around keys and values is trimmed, and a repeated key
// keeps the last value so overrides can simply be applied on top.
std::map<std::string, std::string> read_kv_file(const std::string& path);
// Applies "key=value" strings (e.g. CLI overrides) onto an existing map.
void apply_kv_overrides(std::map<std::string, std::string>& kv,
                        const std::vector<std::string>& overrides);

}  // namespace pulsekit
