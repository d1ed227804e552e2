#include "emap/synth.hpp"

#include "emap/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <fmt/format.h>

namespace emap::mdb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::vector<SignatureParams>& signature_table() {
    static const std::vector<SignatureParams> table = {
        {"seizure", 14.0, 4.0, 0.3, 5.6, 0.5},
        {"encephalopathy", 19.0, 3.0, 0.3, 5.0, 0.6},
        {"stroke", 27.0, 5.0, 0.3, 5.0, 0.6},
    };
    return table;
}

std::mt19937_64 signal_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

void add_background(std::vector<double>& x, std::mt19937_64& rng, const SynthParams& p) {
    std::uniform_real_distribution<double> freq(dsp::kBandLowHz, dsp::kBandHighHz);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    struct Component { double f, a, phi; };
    std::vector<Component> comps;
    double power = 0.0;
    for (int c = 0; c < p.background_components; ++c) {
        const double f = freq(rng);
        const double a = 1.0 / f;  // 1/f coloring
        comps.push_back({f, a, phase(rng)});
        power += a * a / 2.0;
    }
    if (comps.empty()) return;
    const double scale = p.background_rms_uv / std::sqrt(power);
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double t = static_cast<double>(k) / dsp::kBaseRateHz;
        double v = 0.0;
        for (const auto& c : comps) v += c.a * std::sin(kTwoPi * c.f * t + c.phi);
        x[k] += scale * v;
    }
}

// unit-RMS amplitude-modulated carrier
double am_norm(double depth) { return 1.0 / std::sqrt((1.0 + depth * depth / 2.0) / 2.0); }

void add_transients(std::vector<double>& x, std::mt19937_64& rng, const SynthParams& p) {
    if (p.transient_rate_hz <= 0.0) return;
    const auto& table = signature_table();
    const double duration = static_cast<double>(x.size()) / dsp::kBaseRateHz;
    std::exponential_distribution<double> gap(p.transient_rate_hz);
    std::uniform_real_distribution<double> freq(p.transient_min_hz, std::max(p.transient_min_hz, p.transient_max_hz));
    std::uniform_real_distribution<double> mod_freq(3.0, 5.0);
    std::uniform_real_distribution<double> mod_depth(0.3, 0.7);
    std::uniform_real_distribution<double> jitter(-p.transient_mimic_jitter_hz, p.transient_mimic_jitter_hz);
    std::uniform_real_distribution<double> length(p.transient_min_s, std::max(p.transient_min_s, p.transient_max_s));
    std::uniform_real_distribution<double> level(p.transient_min_rms_uv,
                                                 std::max(p.transient_min_rms_uv, p.transient_max_rms_uv));
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, table.size() - 1);
    const auto ramp = static_cast<std::size_t>(0.125 * dsp::kBaseRateHz);

    for (double start = gap(rng); start < duration; start += gap(rng)) {
        double fc, fm, depth;
        if (unit(rng) < p.transient_mimic_share) {
            const auto& sig = table[pick(rng)];
            fc = sig.carrier_hz + jitter(rng);
            fm = sig.modulation_hz;
            depth = sig.modulation_depth;
        } else {
            fc = freq(rng);
            fm = mod_freq(rng);
            depth = mod_depth(rng);
        }
        const double amp = level(rng) * am_norm(depth);
        const double len = length(rng);
        const double phi_c = phase(rng);
        const double phi_m = phase(rng);
        const auto k0 = static_cast<std::size_t>(start * dsp::kBaseRateHz);
        const auto n = static_cast<std::size_t>(len * dsp::kBaseRateHz);
        for (std::size_t i = 0; i < n && k0 + i < x.size(); ++i) {
            // flat top with short raised-cosine edges
            const std::size_t edge = std::min(i, n - 1 - i);
            const double taper =
                edge >= ramp ? 1.0 : 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) / ramp);
            const double t = static_cast<double>(k0 + i) / dsp::kBaseRateHz;
            const double am = 1.0 + depth * std::cos(kTwoPi * fm * t + phi_m);
            x[k0 + i] += amp * taper * am * std::cos(kTwoPi * fc * t + phi_c);
        }
    }
}

AnomalySpan add_signature(std::vector<double>& x, std::mt19937_64& rng, const SynthParams& p,
                          const SignatureParams& sig) {
    const double duration = static_cast<double>(x.size()) / dsp::kBaseRateHz;
    std::uniform_real_distribution<double> onset_s(p.onset_min_s, std::max(p.onset_min_s, p.onset_max_s));
    std::uniform_real_distribution<double> span_s(p.span_min_s, std::max(p.span_min_s, p.span_max_s));
    std::uniform_real_distribution<double> jitter(-p.carrier_jitter_hz, p.carrier_jitter_hz);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);

    const double onset = std::min(onset_s(rng), duration * 0.9);
    const double end = std::min(onset + span_s(rng), duration);
    const double fc = sig.carrier_hz + (p.carrier_jitter_hz > 0.0 ? jitter(rng) : 0.0);
    const double phi_c = phase(rng);
    const double phi_m = phase(rng);
    const auto k0 = static_cast<std::size_t>(onset * dsp::kBaseRateHz);
    const auto k1 = std::max(k0 + 1, static_cast<std::size_t>(end * dsp::kBaseRateHz));
    const double norm = am_norm(sig.modulation_depth);
    for (std::size_t k = k0; k < k1 && k < x.size(); ++k) {
        const double t = static_cast<double>(k) / dsp::kBaseRateHz;
        const double progress = static_cast<double>(k - k0) / static_cast<double>(k1 - k0);
        const double envelope = p.signature_gain * sig.peak_rms_uv * (sig.start_level + (1.0 - sig.start_level) * progress);
        const double am = 1.0 + sig.modulation_depth * std::cos(kTwoPi * sig.modulation_hz * t + phi_m);
        x[k] += envelope * norm * am * std::cos(kTwoPi * fc * t + phi_c);
    }
    return {k0, std::min(k1, x.size()), sig.kind};
}

}  // namespace

const SignatureParams& signature_for(std::string_view kind) {
    for (const auto& s : signature_table())
        if (s.kind == kind) return s;
    throw std::invalid_argument(fmt::format("unknown anomaly kind '{}'", kind));
}

std::vector<std::string> known_anomaly_kinds() {
    std::vector<std::string> kinds;
    for (const auto& s : signature_table()) kinds.push_back(s.kind);
    return kinds;
}

std::vector<SourceSignal> synth_raw_corpus(std::uint64_t seed, int n_normal, int n_anomalous, std::string_view kind,
                                           const SynthParams& params) {
    if (n_normal < 0 || n_anomalous < 0) throw std::invalid_argument("synth: counts must be non-negative");
    if (!(params.duration_s > 0.0)) throw std::invalid_argument("synth: duration must be positive");
    const SignatureParams& sig = signature_for(kind);
    const auto length = static_cast<std::size_t>(params.duration_s * dsp::kBaseRateHz);

    std::vector<SourceSignal> out;
    out.reserve(static_cast<std::size_t>(n_normal + n_anomalous));
    for (int i = 0; i < n_normal + n_anomalous; ++i) {
        const bool anomalous = i >= n_normal;
        // anomalous streams draw from their own index space so that adding
        // normal signals never perturbs them
        const std::uint64_t stream = anomalous ? (1ULL << 40) + static_cast<std::uint64_t>(i - n_normal)
                                               : static_cast<std::uint64_t>(i);
        auto rng = signal_rng(seed, stream);
        SourceSignal s;
        s.id = params.first_id + i;
        s.dataset_tag = params.dataset_tag;
        s.samples.assign(length, 0.0);
        add_background(s.samples, rng, params);
        add_transients(s.samples, rng, params);
        if (anomalous) s.anomaly_spans.push_back(add_signature(s.samples, rng, params, sig));
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<SourceSignal> synth_corpus(std::uint64_t seed, int n_normal, int n_anomalous, std::string_view kind,
                                       const SynthParams& params) {
    auto corpus = synth_raw_corpus(seed, n_normal, n_anomalous, kind, params);
    for (auto& s : corpus) s.samples = dsp::apply_filter(dsp::emap_bandpass(), std::span<const double>(s.samples));
    return corpus;
}

}  // namespace emap::mdb
