// Python surface for the measurement stack: waveform synthesis, discrete
// derivatives, the patch renderer, and the estimators. Orchestration
// (training runs, ablations) stays with the command-line binary.

#include <cstring>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pulsekit/errors.hpp"
#include "pulsekit/metrics.hpp"
#include "pulsekit/render.hpp"
#include "pulsekit/signal.hpp"

namespace py = pybind11;
using namespace pulsekit;

PYBIND11_MODULE(_core, m) {
  m.doc() = "video-based cardiac measurement core";

  py::register_exception<Error>(m, "Error");

  m.def("first_difference", &first_difference, py::arg("x"),
        "y[i] = x[i+1] - x[i]; one sample shorter than the input");
  m.def("second_difference", &second_difference, py::arg("x"),
        "first_difference applied twice; two samples shorter");
  m.def("standardize", &standardize, py::arg("x"),
        "zero-mean, unit-std copy of x");

  py::class_<BeatTemplateParams>(m, "BeatTemplateParams")
      .def(py::init<>())
      .def_readwrite("systolic_amp", &BeatTemplateParams::systolic_amp)
      .def_readwrite("systolic_center", &BeatTemplateParams::systolic_center)
      .def_readwrite("systolic_width", &BeatTemplateParams::systolic_width)
      .def_readwrite("dicrotic_amp", &BeatTemplateParams::dicrotic_amp)
      .def_readwrite("dicrotic_center", &BeatTemplateParams::dicrotic_center)
      .def_readwrite("dicrotic_width", &BeatTemplateParams::dicrotic_width)
      .def_readwrite("baseline", &BeatTemplateParams::baseline);

  py::class_<Fiducials>(m, "Fiducials")
      .def(py::init<>())
      .def_readwrite("diastolic_idx", &Fiducials::diastolic_idx)
      .def_readwrite("notch_idx", &Fiducials::notch_idx)
      .def_readwrite("lvet_ms", &Fiducials::lvet_ms);

  py::class_<PpgSignal>(m, "PpgSignal")
      .def(py::init<>())
      .def_readwrite("samples", &PpgSignal::samples)
      .def_readwrite("fs", &PpgSignal::fs)
      .def_readwrite("normalized", &PpgSignal::normalized);

  py::class_<SynthPpg>(m, "SynthPpg")
      .def_readonly("ppg", &SynthPpg::ppg)
      .def_readonly("fiducials", &SynthPpg::fiducials);

  m.def("synth_ppg", &synth_ppg, py::arg("hr_bpm"), py::arg("fs"),
        py::arg("duration_s"), py::arg("hr_jitter") = 0.0,
        py::arg("template_params") = BeatTemplateParams{},
        py::arg("seed") = 0,
        "beat-train waveform with scan-derived per-beat fiducials");

  py::class_<VideoClip>(m, "VideoClip")
      .def_readonly("frames_count", &VideoClip::frames_count)
      .def_readonly("height", &VideoClip::height)
      .def_readonly("width", &VideoClip::width)
      .def_readonly("fs", &VideoClip::fs)
      .def_readonly("source_ppg", &VideoClip::source_ppg)
      .def_readonly("saturation_warning", &VideoClip::saturation_warning)
      .def_readonly("saturated_fraction", &VideoClip::saturated_fraction)
      .def_property_readonly("frames", [](const VideoClip& v) {
        py::array_t<double> a(std::vector<py::ssize_t>{
            static_cast<py::ssize_t>(v.frames_count),
            static_cast<py::ssize_t>(v.height),
            static_cast<py::ssize_t>(v.width), 3});
        std::memcpy(a.mutable_data(), v.frames.data(),
                    v.frames.size() * sizeof(double));
        return a;
      });

  m.def(
      "render_clip",
      [](const PpgSignal& ppg, int64_t height, int64_t width, uint64_t seed,
         double noise_sigma, double specular_amp, double motion_amp,
         double pulse_scale, double illumination) {
        DrmParams p;
        p.illumination = illumination;
        p.noise_sigma = noise_sigma;
        p.specular_amp = specular_amp;
        p.motion_amp = motion_amp;
        for (int c = 0; c < 3; ++c) p.pulsatile_color[c] *= pulse_scale;
        const int64_t margin =
            std::min<int64_t>(4, std::min(height, width) / 4);
        p.skin_region =
            Rect{margin, margin, height - 2 * margin, width - 2 * margin};
        return render_clip(ppg, p, height, width, seed);
      },
      py::arg("ppg"), py::arg("height"), py::arg("width"), py::arg("seed") = 0,
      py::arg("noise_sigma") = 0.0, py::arg("specular_amp") = 0.0,
      py::arg("motion_amp") = 0.0, py::arg("pulse_scale") = 1.0,
      py::arg("illumination") = 0.75,
      "skin-patch reflection render of a normalized pulse waveform");

  m.def("estimate_hr", &estimate_hr, py::arg("signal"), py::arg("fs"),
        "dominant periodogram frequency in [0.75, 4] Hz, in BPM");

  py::class_<FiducialConfig>(m, "FiducialConfig")
      .def(py::init<>())
      .def_readwrite("anchor_prominence_frac",
                     &FiducialConfig::anchor_prominence_frac)
      .def_readwrite("anchor_separation_beats",
                     &FiducialConfig::anchor_separation_beats)
      .def_readwrite("notch_refractory_beats",
                     &FiducialConfig::notch_refractory_beats)
      .def_readwrite("notch_prominence_frac",
                     &FiducialConfig::notch_prominence_frac)
      .def_readwrite("diastolic_before_long_gap",
                     &FiducialConfig::diastolic_before_long_gap);

  m.def("detect_fiducials", &detect_fiducials, py::arg("sd"), py::arg("fs"),
        py::arg("hr_hint_bpm") = 0.0, py::arg("config") = FiducialConfig{},
        "diastolic anchors and dicrotic notches from a second-derivative "
        "sequence");
  m.def("lvet_windows", &lvet_windows, py::arg("fiducials"), py::arg("fs"),
        py::arg("smooth_window_s") = 10.0,
        "per-window mean LVET as (window index, ms) pairs");
  m.def("lvet_series", &lvet_series, py::arg("fiducials"), py::arg("fs"),
        py::arg("smooth_window_s") = 10.0);

  py::class_<MaeSummary>(m, "MaeSummary")
      .def_readonly("mean", &MaeSummary::mean)
      .def_readonly("std", &MaeSummary::std);
  py::class_<BlandAltman>(m, "BlandAltman")
      .def_readonly("mean_diff", &BlandAltman::mean_diff)
      .def_readonly("lower_limit", &BlandAltman::lower_limit)
      .def_readonly("upper_limit", &BlandAltman::upper_limit)
      .def_readonly("points", &BlandAltman::points);

  m.def("mae_summary", &mae_summary, py::arg("pred"), py::arg("truth"));
  m.def("bland_altman", &bland_altman, py::arg("pred"), py::arg("truth"),
        "mean difference and 1.96-sigma agreement limits");
}
