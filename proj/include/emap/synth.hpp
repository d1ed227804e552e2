#pragma once

// Seeded synthetic EEG corpora standing in for clinical recordings.
//
// Normal signals are colored noise built from random-phase sinusoids in the
// 11-40 Hz band, plus brief amplitude-modulated rhythmic bursts. Some bursts
// borrow the rhythm of an anomaly signature, so a single second of a normal
// recording can look like an anomaly. Anomalous signals add the kind-specific
// signature over a marked span: the same kind of rhythm, sustained, with an
// envelope that grows across the span.

#include "emap/mdb.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace emap::mdb {

struct SignatureParams {
    std::string kind;
    double carrier_hz = 14.0;
    double modulation_hz = 4.0;
    double modulation_depth = 0.3;
    double peak_rms_uv = 5.6;
    double start_level = 0.5;  // envelope at span start, relative to the peak
};

/// Known kinds: "seizure", "encephalopathy", "stroke".
const SignatureParams& signature_for(std::string_view kind);
std::vector<std::string> known_anomaly_kinds();

struct SynthParams {
    double duration_s = 40.0;
    SignalId first_id = 0;
    std::string dataset_tag = "synthetic";

    int background_components = 24;
    double background_rms_uv = 0.5;

    // rhythmic bursts; a share of them borrow the rhythm of a known signature
    double transient_rate_hz = 0.25;
    double transient_min_s = 1.0;
    double transient_max_s = 4.0;
    double transient_min_rms_uv = 1.4;
    double transient_max_rms_uv = 3.5;
    double transient_min_hz = 11.0;
    double transient_max_hz = 40.0;
    double transient_mimic_share = 0.8;
    double transient_mimic_jitter_hz = 0.1;

    // anomaly placement, seconds from the start of the signal
    double onset_min_s = 8.0;
    double onset_max_s = 16.0;
    double span_min_s = 14.0;
    double span_max_s = 22.0;

    double carrier_jitter_hz = 0.01;
    double signature_gain = 1.0;  // scales the signature's peak level
};

/// Unfiltered signals (what a sensor would record), 256 Hz. Normal signals come
/// first, then anomalous ones; ids run consecutively from params.first_id.
std::vector<SourceSignal> synth_raw_corpus(std::uint64_t seed, int n_normal, int n_anomalous,
                                           std::string_view kind, const SynthParams& params = {});

/// synth_raw_corpus passed through the acquisition bandpass.
std::vector<SourceSignal> synth_corpus(std::uint64_t seed, int n_normal, int n_anomalous,
                                       std::string_view kind, const SynthParams& params = {});

}  // namespace emap::mdb
