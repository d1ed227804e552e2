#include "emap/cloud_search.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>

namespace emap::search {

namespace {

struct SliceOutcome {
    std::optional<Candidate> best;
    std::size_t comparisons = 0;
    std::size_t degenerate = 0;
    std::size_t matches = 0;
    std::vector<TraceEntry> trace;
    bool cut = false;  // stopped by the comparison budget
};

template <typename StepFn>
SliceOutcome scan_slice(const dsp::WindowCorrelator& corr, mdb::SetId set_id, std::span<const double> slice,
                        double delta, StepFn step_fn, bool want_trace, std::size_t budget) {
    SliceOutcome out;
    std::size_t beta = 0;
    while (beta <= kMaxOffset && out.comparisons < budget) {
        const auto omega = corr.try_correlate(slice.subspan(beta, dsp::kWindowLen));
        if (!omega) {
            ++out.degenerate;
            beta += step_fn(0.0);
            continue;
        }
        ++out.comparisons;
        if (*omega > delta) {
            ++out.matches;
            const Candidate c{set_id, *omega, beta};
            if (!out.best || ranks_before(c, *out.best)) out.best = c;
        }
        const std::size_t step = step_fn(*omega);
        if (want_trace) out.trace.push_back({set_id, beta, *omega, step});
        beta += step;
    }
    out.cut = beta <= kMaxOffset;
    return out;
}

template <typename StepFn>
SearchResult run_search(const dsp::SignalWindow& input, const mdb::MdbStore& store, const SearchConfig& cfg,
                        StepFn step_fn, std::vector<TraceEntry>* trace) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    const dsp::WindowCorrelator corr(input.samples());  // throws on a silent input window

    const std::size_t n = store.num_slices();
    std::vector<SliceOutcome> outcomes(n);
    SearchResult result;
    const bool want_trace = trace != nullptr;

    if (cfg.max_comparisons) {
        // the budget is consumed in set order, so this path stays sequential
        std::size_t remaining = *cfg.max_comparisons;
        for (std::size_t i = 0; i < n && remaining > 0; ++i) {
            const auto id = static_cast<mdb::SetId>(i);
            outcomes[i] = scan_slice(corr, id, store.slice_samples(id), cfg.delta, step_fn, want_trace, remaining);
            remaining -= outcomes[i].comparisons;
            ++result.slices_scanned;
            if (outcomes[i].cut || (remaining == 0 && i + 1 < n)) result.truncated = true;
        }
    } else {
        const unsigned workers = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
        auto work = [&](unsigned w) {
            for (std::size_t i = w; i < n; i += workers) {
                const auto id = static_cast<mdb::SetId>(i);
                outcomes[i] = scan_slice(corr, id, store.slice_samples(id), cfg.delta, step_fn, want_trace,
                                         static_cast<std::size_t>(-1));
            }
        };
        if (workers == 1) {
            work(0);
        } else {
            std::vector<std::jthread> pool;
            for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        }
        result.slices_scanned = n;
    }

    std::vector<Candidate> pool;
    for (auto& o : outcomes) {
        result.comparisons_made += o.comparisons;
        result.degenerate_windows += o.degenerate;
        result.matches_found += o.matches;
        if (o.best) pool.push_back(*o.best);
        if (trace) trace->insert(trace->end(), o.trace.begin(), o.trace.end());
    }
    std::sort(pool.begin(), pool.end(), ranks_before);
    if (pool.size() > cfg.top_k) pool.resize(cfg.top_k);
    result.candidates = std::move(pool);
    result.elapsed = std::chrono::steady_clock::now() - started;
    return result;
}

}  // namespace

bool ranks_before(const Candidate& a, const Candidate& b) {
    if (a.omega != b.omega) return a.omega > b.omega;
    if (a.set_id != b.set_id) return a.set_id < b.set_id;
    return a.beta < b.beta;
}

void SearchConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument(fmt::format("alpha {} outside (0, 1)", alpha));
    if (!(delta > -1.0 && delta < 1.0)) throw std::invalid_argument(fmt::format("delta {} outside (-1, 1)", delta));
    if (top_k < 1) throw std::invalid_argument("top_k must be at least 1");
    if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

bool SearchResult::same_outcome(const SearchResult& o) const {
    return candidates == o.candidates && comparisons_made == o.comparisons_made &&
           slices_scanned == o.slices_scanned && degenerate_windows == o.degenerate_windows &&
           matches_found == o.matches_found && truncated == o.truncated;
}

std::size_t step_for(double omega, double alpha) {
    const double w = std::max(omega, 0.0);
    const double raw = std::pow(alpha, w - 1.0);
    // any step past the last offset ends the scan; cap to avoid overflow
    const double capped = std::min(raw, static_cast<double>(mdb::kSliceLen));
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(capped)));
}

SearchResult sliding_search(const dsp::SignalWindow& input, const mdb::MdbStore& store, const SearchConfig& cfg,
                            std::vector<TraceEntry>* trace) {
    const double alpha = cfg.alpha;
    return run_search(input, store, cfg, [alpha](double omega) { return step_for(omega, alpha); }, trace);
}

SearchResult exhaustive_search(const dsp::SignalWindow& input, const mdb::MdbStore& store, const SearchConfig& cfg,
                               std::vector<TraceEntry>* trace) {
    return run_search(input, store, cfg, [](double) -> std::size_t { return 1; }, trace);
}

double mean_omega(const SearchResult& result) {
    if (result.candidates.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& c : result.candidates) sum += c.omega;
    return sum / static_cast<double>(result.candidates.size());
}

std::vector<SweepRow> alpha_sweep(const std::vector<dsp::SignalWindow>& inputs, const mdb::MdbStore& store,
                                  const std::vector<double>& alphas, const SearchConfig& base) {
    if (inputs.empty() || alphas.empty()) throw std::invalid_argument("alpha_sweep needs inputs and alphas");
    std::vector<SweepRow> rows;
    for (double alpha : alphas) {
        SearchConfig cfg = base;
        cfg.alpha = alpha;
        SweepRow row{alpha, 0.0, 0.0, 0.0};
        for (const auto& in : inputs) {
            const auto r = sliding_search(in, store, cfg);
            row.mean_comparisons += static_cast<double>(r.comparisons_made);
            row.mean_matches += static_cast<double>(r.matches_found);
            row.mean_top_omega += mean_omega(r);
        }
        const auto n = static_cast<double>(inputs.size());
        row.mean_comparisons /= n;
        row.mean_matches /= n;
        row.mean_top_omega /= n;
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "alpha,mean_comparisons,mean_matches,mean_top100_omega\n";
    for (const auto& r : rows)
        out << fmt::format("{},{:.3f},{:.3f},{:.6f}\n", r.alpha, r.mean_comparisons, r.mean_matches, r.mean_top_omega);
}

}  // namespace emap::search
