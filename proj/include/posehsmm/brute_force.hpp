#pragma once

#include <cmath>
#include <vector>

#include "posehsmm/hsmm.hpp"

namespace posehsmm {

inline constexpr double kBruteForceLimit = 1e7;
inline constexpr double kTieTolerance = 1e-9;

/// True when `a` wins the documented tie-break against `b`: compare segments
/// from the last one backwards, preferring the lower state and then the
/// longer duration. This is the order the segment Viterbi's arg-max rules
/// induce.
inline bool preferred_on_tie(const Segmentation& a, const Segmentation& b) {
    auto ia = a.segments.rbegin();
    auto ib = b.segments.rbegin();
    for (; ia != a.segments.rend() && ib != b.segments.rend(); ++ia, ++ib) {
        if (ia->state != ib->state) return ia->state < ib->state;
        if (ia->duration != ib->duration) return ia->duration > ib->duration;
    }
    return false;
}

/// Exhaustive decoder used as a test oracle: scores every labeling of the
/// stream with hsmm_joint_log_prob and keeps the best.
inline DecodeResult brute_force_decode(const FeatureStream& stream, const HsmmModel& model) {
    model.validate();
    require(!stream.empty(), ErrorCode::EmptySequence, "cannot decode an empty stream");
    const std::size_t q = model.num_states();
    const std::size_t n = stream.size();
    require(std::pow(static_cast<double>(q), static_cast<double>(n)) <= kBruteForceLimit,
            ErrorCode::InstanceTooLarge, "Q^T exceeds the brute-force guard");

    DecodeResult best;
    std::vector<StateIndex> labels(n, 0);
    for (;;) {
        Segmentation seg = encode_segments(labels);
        bool feasible = true;
        for (const Segment& s : seg.segments) feasible = feasible && s.duration <= model.max_duration();
        if (feasible) {
            const double score = hsmm_joint_log_prob(seg, stream, model);
            const bool better = score > best.log_prob + kTieTolerance;
            const bool tied = std::isfinite(score) && std::abs(score - best.log_prob) <= kTieTolerance;
            if ((better && std::isfinite(score)) || (tied && preferred_on_tie(seg, best.segmentation))) {
                best.log_prob = score;
                best.segmentation = std::move(seg);
            }
        }
        // Odometer increment over Q^T labelings.
        std::size_t pos = 0;
        while (pos < n && ++labels[pos] == q) labels[pos++] = 0;
        if (pos == n) break;
    }
    require(std::isfinite(best.log_prob), ErrorCode::NoFeasiblePath, "no labeling has positive probability");
    best.per_segment_scores =
        detail::segment_scores(best.segmentation, emission_table(stream, model.emissions), model);
    return best;
}

}  // namespace posehsmm
