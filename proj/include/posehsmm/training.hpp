#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "posehsmm/hsmm.hpp"

namespace posehsmm {

/// A fully annotated training sequence (labels are frame-level state indices).
struct LabeledSequence {
    const FeatureStream* stream = nullptr;
    std::span<const StateIndex> labels;
};

struct TrainOptions {
    /// Defaults to 3x the largest fitted mean duration, capped at the
    /// longest training sequence.
    std::optional<Tick> max_duration;
};

inline Tick default_max_duration(const DurationModel& fitted, std::span<const char> observed, Tick longest) {
    double top = 1.0;
    for (std::size_t i = 0; i < fitted.states(); ++i)
        if (observed[i]) top = std::max(top, fitted.means()[i]);
    const auto d = static_cast<Tick>(std::ceil(3.0 * top));
    return std::clamp<Tick>(d, 1, std::max<Tick>(longest, 1));
}

/// Supervised maximum-likelihood fit: Bernoulli emissions per channel,
/// segment-level transitions, Gaussian durations. The initial distribution is
/// the reference pose prior restricted to `space`.
inline HsmmModel train_hsmm(std::span<const LabeledSequence> data, const StateSpace& space,
                            const TrainOptions& options = {}) {
    require(!data.empty(), ErrorCode::EmptySequence, "no training sequences");
    const std::size_t q = space.size();
    const FeatureStream& first = *data.front().stream;

    // Emissions only care about per-frame counts, so sequences are pooled.
    FeatureStream pooled({first.channels().begin(), first.channels().end()}, first.feature_dim());
    std::vector<StateIndex> pooled_labels;
    std::vector<Segmentation> segmentations;
    TransitionCounter transitions(q, TransitionKind::hsmm);
    Tick longest = 0;
    for (const LabeledSequence& seq : data) {
        require(seq.stream != nullptr && !seq.stream->empty(), ErrorCode::EmptySequence, "empty training stream");
        require(seq.labels.size() == seq.stream->size(), ErrorCode::LabelMismatch,
                "label count differs from stream length");
        require(std::equal(seq.stream->channels().begin(), seq.stream->channels().end(),
                           first.channels().begin(), first.channels().end()) &&
                    seq.stream->feature_dim() == first.feature_dim(),
                ErrorCode::DimensionMismatch, "training streams disagree on channel layout");
        for (const FeatureFrame& f : seq.stream->frames()) {
            FeatureFrame copy = f;
            copy.source_tick = 0;
            pooled.push_back(std::move(copy));
        }
        pooled_labels.insert(pooled_labels.end(), seq.labels.begin(), seq.labels.end());
        segmentations.push_back(encode_segments(seq.labels));
        transitions.add(seq.labels);
        longest = std::max(longest, seq.stream->size());
    }

    std::vector<char> observed(q, 0);
    for (const auto& seg : segmentations)
        for (const Segment& s : seg.segments) observed.at(s.state) = 1;

    Tick max_d = 0;
    if (options.max_duration) {
        max_d = *options.max_duration;
    } else {
        const DurationModel provisional = fit_durations(segmentations, q, std::max<Tick>(longest, 1));
        max_d = default_max_duration(provisional, observed, longest);
    }

    HsmmModel model;
    model.states = space;
    model.initial = initial_distribution_for(space);
    model.transitions = transitions.finish();
    model.durations = fit_durations(segmentations, q, max_d);
    model.emissions = fit_emissions(pooled, pooled_labels, q);
    model.validate();
    return model;
}

inline HsmmModel train_hsmm(const FeatureStream& stream, std::span<const StateIndex> labels,
                            const StateSpace& space, const TrainOptions& options = {}) {
    const LabeledSequence seq{&stream, labels};
    return train_hsmm(std::span<const LabeledSequence>(&seq, 1), space, options);
}

}  // namespace posehsmm
