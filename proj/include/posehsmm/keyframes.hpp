#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "posehsmm/stream.hpp"

namespace posehsmm {

struct KeyframeParams {
    std::size_t k_max = 5;
    /// Stage 1: minimum endpoint dissimilarity for a clip to count as motion.
    double static_threshold = 0.8;
    /// Stage 2: a candidate must score at least this fraction of the best one.
    double ratio_threshold = 0.8;
};

struct Keyframe {
    Tick frame_index = 1;  // 1-based position within the clip
    ChannelId channel{};
    double score = 0.0;
    int stage = 1;  // selection stage that admitted the frame

    friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

struct KeyframeSet {
    std::vector<Keyframe> frames;
    std::size_t k_max = 5;
    double threshold = 0.8;
    /// Set when no channel moved more than the Stage-1 threshold; frames then
    /// hold the two endpoints only.
    bool static_clip = false;

    std::vector<Tick> ticks() const {
        std::vector<Tick> out;
        for (const Keyframe& k : frames) out.push_back(k.frame_index);
        return out;
    }

    friend bool operator==(const KeyframeSet&, const KeyframeSet&) = default;
};

/// Euclidean distance scaled by 1/sqrt(F), so binary vectors that differ
/// everywhere are at distance 1.
inline double feature_distance(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && !a.empty(), ErrorCode::DimensionMismatch, "feature vectors differ in length");
    double sum = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) sum += (a[n] - b[n]) * (a[n] - b[n]);
    return std::sqrt(sum / static_cast<double>(a.size()));
}

namespace detail {

inline const ChannelReading* available_reading(const FeatureFrame& frame, ChannelId c) {
    const ChannelReading* r = frame.find(c);
    return r != nullptr && r->available ? r : nullptr;
}

// Distance between two clip positions (0-based) on one channel, if both see it.
inline std::optional<double> channel_distance(const FeatureStream& clip, std::size_t a, std::size_t b,
                                              ChannelId c) {
    const ChannelReading* ra = available_reading(clip[a], c);
    const ChannelReading* rb = available_reading(clip[b], c);
    if (ra == nullptr || rb == nullptr) return std::nullopt;
    return feature_distance(ra->values, rb->values);
}

struct Candidate {
    std::size_t frame = 0;  // 0-based
    ChannelId channel{};
    double score = 0.0;
};

// Best channel for frame n by min(distance to a, distance to b).
inline std::optional<Candidate> best_between(const FeatureStream& clip, std::size_t n, std::size_t a,
                                             std::size_t b) {
    std::optional<Candidate> best;
    for (ChannelId c : clip.channels()) {
        const auto da = channel_distance(clip, n, a, c);
        const auto db = channel_distance(clip, n, b, c);
        if (!da || !db) continue;
        const double s = std::min(*da, *db);
        if (!best || s > best->score) best = Candidate{n, c, s};
    }
    return best;
}

}  // namespace detail

/// Distance between the first and last frame on one channel.
inline double channel_endpoint_dissimilarity(const FeatureStream& clip, ChannelId channel) {
    require(clip.size() >= 2, ErrorCode::InvalidArgument, "a clip needs at least two frames");
    const auto d = detail::channel_distance(clip, 0, clip.size() - 1, channel);
    require(d.has_value(), ErrorCode::ChannelAbsent,
            "channel " + channel_name(channel) + " is unavailable at a clip endpoint");
    return *d;
}

/// Three-stage keyframe selection.
///
/// Stage 1 picks the channel whose endpoints differ most and admits both
/// endpoints; a clip where no channel clears `static_threshold` is flagged
/// static. Stage 2 scores every interior frame by its distance to the nearer
/// endpoint (best channel per frame), then admits up to k_max - 3 of the top
/// scorers that stay within `ratio_threshold` of the best score and at least
/// ceil(N / k_max) frames away from every admitted keyframe. Stage 3 adds the
/// frame between the second and second-to-last keyframes that is farthest
/// from both (the motion peak).
inline KeyframeSet select_keyframes(const FeatureStream& clip, const KeyframeParams& params = {}) {
    const std::size_t n = clip.size();
    require(n >= 2, ErrorCode::InvalidArgument, "a clip needs at least two frames");
    require(params.k_max >= 2, ErrorCode::InvalidArgument, "k_max must be at least 2");
    require(params.static_threshold > 0.0 && params.static_threshold < 1.0 && params.ratio_threshold > 0.0 &&
                params.ratio_threshold < 1.0,
            ErrorCode::InvalidArgument, "keyframe thresholds must lie in (0, 1)");

    KeyframeSet out;
    out.k_max = params.k_max;
    out.threshold = params.static_threshold;

    // Stage 1.
    std::optional<detail::Candidate> pick;
    for (ChannelId c : clip.channels()) {
        const auto d = detail::channel_distance(clip, 0, n - 1, c);
        if (d && (!pick || *d > pick->score)) pick = detail::Candidate{0, c, *d};
    }
    require(pick.has_value(), ErrorCode::ChannelAbsent, "no channel is available at both clip endpoints");
    out.frames = {{1, pick->channel, pick->score, 1}, {n, pick->channel, pick->score, 1}};
    if (pick->score <= params.static_threshold) {
        out.static_clip = true;
        return out;
    }

    std::vector<std::size_t> admitted = {0, n - 1};
    auto is_admitted = [&](std::size_t f) { return std::find(admitted.begin(), admitted.end(), f) != admitted.end(); };

    // Stage 2.
    std::vector<detail::Candidate> candidates;
    for (std::size_t f = 1; f + 1 < n; ++f)
        if (const auto c = detail::best_between(clip, f, 0, n - 1); c && c->score > 0.0) candidates.push_back(*c);
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const auto& a, const auto& b) { return a.score > b.score; });
    const std::size_t stage2_budget = params.k_max >= 3 ? params.k_max - 3 : 0;
    const std::size_t min_gap = (n + params.k_max - 1) / params.k_max;
    std::size_t taken = 0;
    for (const auto& c : candidates) {
        if (taken == stage2_budget || c.score < params.ratio_threshold * candidates.front().score) break;
        const bool spaced = std::all_of(admitted.begin(), admitted.end(), [&](std::size_t f) {
            return (f > c.frame ? f - c.frame : c.frame - f) >= min_gap;
        });
        if (!spaced) continue;
        admitted.push_back(c.frame);
        out.frames.push_back({c.frame + 1, c.channel, c.score, 2});
        ++taken;
    }

    // Stage 3.
    std::sort(admitted.begin(), admitted.end());
    if (admitted.size() < params.k_max) {
        // With only the endpoints admitted the span is the whole clip; with
        // three, second and second-to-last coincide and the span is empty.
        const bool inner = admitted.size() >= 3;
        const std::size_t lo = inner ? admitted[1] : admitted.front();
        const std::size_t hi = inner ? admitted[admitted.size() - 2] : admitted.back();
        std::optional<detail::Candidate> peak;
        for (std::size_t f = lo + 1; f < hi; ++f) {
            if (is_admitted(f)) continue;
            const auto c = detail::best_between(clip, f, lo, hi);
            if (c && c->score > 0.0 && (!peak || c->score > peak->score)) peak = c;
        }
        if (peak) out.frames.push_back({peak->frame + 1, peak->channel, peak->score, 3});
    }

    std::sort(out.frames.begin(), out.frames.end(),
              [](const Keyframe& a, const Keyframe& b) { return a.frame_index < b.frame_index; });
    return out;
}

/// The clip restricted to its keyframes (every channel), in tick order.
inline FeatureStream keyframes_to_pseudo_pose_stream(const FeatureStream& clip, const KeyframeSet& kf) {
    FeatureStream out({clip.channels().begin(), clip.channels().end()}, clip.feature_dim());
    for (const Keyframe& k : kf.frames) {
        require(k.frame_index >= 1 && k.frame_index <= clip.size(), ErrorCode::InvalidArgument,
                "keyframe outside the clip");
        FeatureFrame f = clip.at_tick(k.frame_index);
        f.source_tick = k.frame_index;
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace posehsmm
