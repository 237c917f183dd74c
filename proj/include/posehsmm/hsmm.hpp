#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "posehsmm/core.hpp"
#include "posehsmm/distributions.hpp"
#include "posehsmm/emission.hpp"
#include "posehsmm/hmm.hpp"

namespace posehsmm {

/// Explicit-duration segment model. Self transitions are excluded: how long a
/// state lasts is the duration model's job.
struct HsmmModel {
    StateSpace states;
    InitialDistribution initial;
    TransitionMatrix transitions;
    DurationModel durations;
    EmissionSet emissions;

    std::size_t num_states() const noexcept { return initial.size(); }
    Tick max_duration() const noexcept { return durations.max_duration(); }

    void validate() const {
        const std::size_t q = initial.size();
        require(q >= 1, ErrorCode::DimensionMismatch, "model has no states");
        require(states.size() == q && transitions.size() == q && durations.states() == q &&
                    emissions.states() == q,
                ErrorCode::DimensionMismatch, "HSMM parameter dimensions disagree");
        require(q == 1 || transitions.has_zero_diagonal(), ErrorCode::InvalidArgument,
                "segment transitions must have a zero diagonal");
    }

    friend bool operator==(const HsmmModel&, const HsmmModel&) = default;
};

/// HSMM whose dwell times reproduce an HMM: P_i(d) = a_ii^(d-1) (1 - a_ii)
/// stored without renormalization on [1, D], and A(i,j) = a_ij / (1 - a_ii)
/// off the diagonal.
inline HsmmModel geometric_hsmm(const HmmModel& hmm, Tick max_duration) {
    hmm.validate();
    const std::size_t q = hmm.num_states();
    require(q >= 2, ErrorCode::InvalidArgument, "geometric HSMM needs at least two states");
    Grid<double> pmf(q, max_duration);
    Grid<double> a(q, q, 0.0);
    for (StateIndex i = 0; i < q; ++i) {
        const double self = hmm.transitions(i, i);
        for (Tick d = 1; d <= max_duration; ++d) pmf(i, d - 1) = geometric_duration_pmf(self, d);
        std::vector<double> row(q, 0.0);
        for (StateIndex j = 0; j < q; ++j)
            if (j != i) row[j] = hmm.transitions(i, j) / (1.0 - self);
        row = normalize_exact(std::move(row));
        for (StateIndex j = 0; j < q; ++j) a(i, j) = row[j];
    }
    HsmmModel m;
    m.states = StateSpace::generic(q);
    m.initial = hmm.initial;
    m.transitions = TransitionMatrix(std::move(a));
    m.durations = DurationModel::from_pmf(pmf);
    m.emissions = hmm.emissions;
    return m;
}

namespace detail {

inline double segment_emission(const Grid<double>& emit, const Segment& s) {
    double total = 0.0;
    for (Tick t = s.start; t <= s.end(); ++t) total += emit(t - 1, s.state);
    return total;
}

inline std::vector<double> segment_scores(const Segmentation& seg, const Grid<double>& emit,
                                          const HsmmModel& model) {
    std::vector<double> scores;
    scores.reserve(seg.segments.size());
    for (std::size_t u = 0; u < seg.segments.size(); ++u) {
        const Segment& s = seg.segments[u];
        require(s.state < model.num_states(), ErrorCode::InvalidArgument, "segment state outside the model");
        const double entry = u == 0 ? std::log(model.initial[s.state])
                                    : model.transitions.log(seg.segments[u - 1].state, s.state);
        scores.push_back(entry + model.durations.log_pmf(s.state, s.duration) + segment_emission(emit, s));
    }
    return scores;
}

}  // namespace detail

/// log P(S, X): per segment the entry term (pi for the first, a_ij after),
/// the duration term and the emissions over [b, b + d - 1]. Start points are
/// deterministic given the previous segment, so their factor is 1.
inline double hsmm_joint_log_prob(const Segmentation& seg, const FeatureStream& stream,
                                  const HsmmModel& model) {
    model.validate();
    validate(seg);
    require(seg.length == stream.size(), ErrorCode::LabelMismatch,
            "segmentation length differs from stream length");
    const Grid<double> emit = emission_table(stream, model.emissions);
    double total = 0.0;
    for (double s : detail::segment_scores(seg, emit, model)) total += s;
    return total;
}

struct DecodeResult {
    Segmentation segmentation;
    double log_prob = kNegInf;
    std::vector<double> per_segment_scores;
};

struct DecodeOptions {
    /// Force the last segment's state (left-to-right chain scoring).
    std::optional<StateIndex> final_state;
    /// Keep the full tau/zeta trellis in the workspace.
    bool keep_trellis = false;
};

/// Dynamic-programming tables of the segment Viterbi, indexed by end tick t
/// (row t-1). tau/zeta are only filled when DecodeOptions::keep_trellis is
/// set: they are T x D x Q and most callers never look at them.
struct ViterbiWorkspace {
    Grid<double> best;                    // delta_t(i)
    Grid<Tick> best_duration;             // phi_t(i)
    Grid<std::ptrdiff_t> best_previous;   // psi_t(i), -1 for the first segment
    std::vector<Grid<double>> tau;        // tau[t-1](d-1, i)
    std::vector<Grid<std::ptrdiff_t>> zeta;
};

inline constexpr std::ptrdiff_t kNoPrevious = -1;

/// Segment Viterbi over durations 1..D (D capped at T).
///
/// Recursion, for end tick t, state j and duration d:
///   tau_t(d, j) = max_{i != j} [delta_{t-d}(i) + log a_ij] + log P_j(d) + sum emissions,
/// with the initial distribution standing in for the bracket when t - d = 0.
/// delta_t(j) = max_d tau_t(d, j), phi/psi record the arg maxes.
/// Ties resolve to the lower predecessor / final state and the longer duration.
inline DecodeResult hsmm_viterbi(const FeatureStream& stream, const HsmmModel& model,
                                 const DecodeOptions& options = {},
                                 ViterbiWorkspace* workspace = nullptr) {
    model.validate();
    require(!stream.empty(), ErrorCode::EmptySequence, "cannot decode an empty stream");
    const std::size_t q = model.num_states();
    const std::size_t n = stream.size();
    const Tick max_d = std::min<Tick>(model.max_duration(), n);
    require(max_d >= 1, ErrorCode::InvalidArgument, "max duration must be >= 1");
    if (options.final_state) require(*options.final_state < q, ErrorCode::InvalidArgument, "final state out of range");

    const Grid<double> emit = emission_table(stream, model.emissions);

    ViterbiWorkspace local;
    ViterbiWorkspace& ws = workspace ? *workspace : local;
    ws.best = Grid<double>(n, q, kNegInf);
    ws.best_duration = Grid<Tick>(n, q, 0);
    ws.best_previous = Grid<std::ptrdiff_t>(n, q, kNoPrevious);
    ws.tau.clear();
    ws.zeta.clear();
    if (options.keep_trellis) {
        ws.tau.assign(n, Grid<double>(max_d, q, kNegInf));
        ws.zeta.assign(n, Grid<std::ptrdiff_t>(max_d, q, kNoPrevious));
    }

    // entry(s, j): best score of a segmentation of ticks 1..s followed by a
    // switch into j. Row 0 is the initial distribution.
    Grid<double> entry(n, q, kNegInf);
    Grid<std::ptrdiff_t> entry_from(n, q, kNoPrevious);
    for (StateIndex j = 0; j < q; ++j) entry(0, j) = std::log(model.initial[j]);

    for (Tick t = 1; t <= n; ++t) {
        if (t > 1) {
            const Tick s = t - 1;  // previous segment ended at s
            for (StateIndex j = 0; j < q; ++j) {
                double top = kNegInf;
                std::ptrdiff_t arg = kNoPrevious;
                for (StateIndex i = 0; i < q; ++i) {
                    if (i == j) continue;
                    const double cand = ws.best(s - 1, i) + model.transitions.log(i, j);
                    if (cand > top) {
                        top = cand;
                        arg = static_cast<std::ptrdiff_t>(i);
                    }
                }
                entry(s, j) = top;
                entry_from(s, j) = arg;
            }
        }
        for (StateIndex j = 0; j < q; ++j) {
            const auto dur = model.durations.log_pmf_row(j);
            double emitted = 0.0;
            double top = kNegInf;
            Tick top_d = 0;
            for (Tick d = 1; d <= std::min(max_d, t); ++d) {
                emitted += emit(t - d, j);
                const Tick s = t - d;
                const double cand = entry(s, j) + dur[d - 1] + emitted;
                if (options.keep_trellis) {
                    ws.tau[t - 1](d - 1, j) = cand;
                    ws.zeta[t - 1](d - 1, j) = entry_from(s, j);
                }
                if (cand >= top && cand != kNegInf) {
                    top = cand;
                    top_d = d;
                }
            }
            ws.best(t - 1, j) = top;
            ws.best_duration(t - 1, j) = top_d;
            ws.best_previous(t - 1, j) = top_d == 0 ? kNoPrevious : entry_from(t - top_d, j);
        }
    }

    // Termination.
    double total = kNegInf;
    StateIndex last = 0;
    if (options.final_state) {
        last = *options.final_state;
        total = ws.best(n - 1, last);
    } else {
        for (StateIndex j = 0; j < q; ++j)
            if (ws.best(n - 1, j) > total) {
                total = ws.best(n - 1, j);
                last = j;
            }
    }
    require(total != kNegInf && !std::isnan(total), ErrorCode::NoFeasiblePath,
            "no segmentation has positive probability");

    // Backtracking, back to front.
    DecodeResult result;
    result.log_prob = total;
    result.segmentation.length = n;
    Tick t = n;
    StateIndex y = last;
    while (t > 0) {
        const Tick d = ws.best_duration(t - 1, y);
        const std::ptrdiff_t prev = ws.best_previous(t - 1, y);
        result.segmentation.segments.push_back({t - d + 1, d, y});
        t -= d;
        if (t > 0) y = static_cast<StateIndex>(prev);
    }
    std::reverse(result.segmentation.segments.begin(), result.segmentation.segments.end());
    result.per_segment_scores = detail::segment_scores(result.segmentation, emit, model);
    return result;
}

/// Per-state sample mean and population standard deviation of segment
/// durations, sd floored at 0.5 tick. States without segments fall back to
/// mean D/2, sd D/4.
inline DurationModel fit_durations(std::span<const Segmentation> segmentations, std::size_t num_states,
                                   Tick max_duration) {
    require(max_duration >= 1, ErrorCode::InvalidArgument, "max duration must be >= 1");
    std::vector<double> sum(num_states, 0.0), sum_sq(num_states, 0.0), count(num_states, 0.0);
    for (const Segmentation& seg : segmentations)
        for (const Segment& s : seg.segments) {
            require(s.state < num_states, ErrorCode::InvalidArgument, "segment state outside the state space");
            const double d = static_cast<double>(s.duration);
            sum[s.state] += d;
            count[s.state] += 1.0;
        }
    std::vector<double> means(num_states), sds(num_states);
    for (std::size_t i = 0; i < num_states; ++i)
        means[i] = count[i] > 0 ? sum[i] / count[i] : static_cast<double>(max_duration) / 2.0;
    for (const Segmentation& seg : segmentations)
        for (const Segment& s : seg.segments) {
            const double dev = static_cast<double>(s.duration) - means[s.state];
            sum_sq[s.state] += dev * dev;
        }
    for (std::size_t i = 0; i < num_states; ++i) {
        const double sd = count[i] > 0 ? std::sqrt(sum_sq[i] / count[i]) : static_cast<double>(max_duration) / 4.0;
        sds[i] = std::max(sd, 0.5);
    }
    return DurationModel::gaussian(std::move(means), std::move(sds), max_duration);
}

inline DurationModel fit_durations(const Segmentation& segmentation, std::size_t num_states, Tick max_duration) {
    return fit_durations(std::span<const Segmentation>(&segmentation, 1), num_states, max_duration);
}

}  // namespace posehsmm
