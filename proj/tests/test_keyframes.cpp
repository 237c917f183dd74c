#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <optional>

#include "posehsmm/keyframes.hpp"
#include "posehsmm/simulator.hpp"
#include "posehsmm/summarizer.hpp"
#include "test_support.hpp"

using namespace posehsmm;
using testkit::Rng;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

FeatureStream one_channel_clip(const std::vector<std::vector<double>>& rows) {
    FeatureStream s(testkit::first_channels(1), rows.front().size());
    for (const auto& r : rows) s.push_back({0, {{s.channels()[0], r, true}}});
    return s;
}

// x(n) = (1 - s) a + s b with s = (n - 1) / (N - 1).
FeatureStream linear_ramp(const std::vector<double>& a, const std::vector<double>& b, std::size_t n) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(i) / static_cast<double>(n - 1);
        std::vector<double> x(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) x[k] = (1.0 - s) * a[k] + s * b[k];
        rows.push_back(x);
    }
    return one_channel_clip(rows);
}

double distance_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(a[i] - b[i], 2);
    return std::sqrt(s) / std::sqrt(static_cast<double>(a.size()));
}

// Copy of `clip` with one extra channel whose features are half of channel
// 0's, so every distance on it is half the channel-0 distance.
FeatureStream with_dominated_channel(const FeatureStream& clip, bool available) {
    std::vector<ChannelId> channels(clip.channels().begin(), clip.channels().end());
    const ChannelId extra{View::right, Modality::mask};
    channels.push_back(extra);
    FeatureStream out(channels, clip.feature_dim());
    for (const FeatureFrame& f : clip.frames()) {
        FeatureFrame g = f;
        std::vector<double> half = f.readings[0].values;
        for (double& x : half) x *= 0.5;
        g.readings.push_back({extra, half, available && f.readings[0].available});
        g.source_tick = 0;
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace

TEST(FeatureDistance, ClosedForms) {
    const std::vector<double> zero(4, 0.0), one(4, 1.0);
    EXPECT_DOUBLE_EQ(feature_distance(zero, one), 1.0);
    EXPECT_DOUBLE_EQ(feature_distance(one, one), 0.0);
}

TEST(FeatureDistance, MatchesScalarOracle) {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t f = testkit::pick(rng, 1, 12);
        std::vector<double> a(f), b(f);
        for (auto& x : a) x = testkit::uniform(rng);
        for (auto& x : b) x = testkit::uniform(rng);
        EXPECT_NEAR(feature_distance(a, b), distance_oracle(a, b), 1e-14);
    }
}

TEST(EndpointDissimilarity, RandomClipsMatchOracle) {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const FeatureStream clip = testkit::random_stream(rng, testkit::pick(rng, 2, 15), 3, 4);
        for (ChannelId c : clip.channels()) {
            const auto& first = clip[0].find(c)->values;
            const auto& last = clip[clip.size() - 1].find(c)->values;
            EXPECT_NEAR(channel_endpoint_dissimilarity(clip, c), distance_oracle(first, last), 1e-14);
        }
    }
}

TEST(EndpointDissimilarity, Errors) {
    FeatureStream clip(testkit::first_channels(2), 2);
    clip.push_back({0, {{clip.channels()[0], {0, 0}, true}, {clip.channels()[1], {0, 0}, false}}});
    EXPECT_EQ(code_of([&] { channel_endpoint_dissimilarity(clip, clip.channels()[0]); }), ErrorCode::InvalidArgument);
    clip.push_back({0, {{clip.channels()[0], {1, 1}, true}, {clip.channels()[1], {1, 1}, true}}});
    EXPECT_DOUBLE_EQ(channel_endpoint_dissimilarity(clip, clip.channels()[0]), 1.0);
    EXPECT_EQ(code_of([&] { channel_endpoint_dissimilarity(clip, clip.channels()[1]); }), ErrorCode::ChannelAbsent);
    EXPECT_EQ(code_of([&] { channel_endpoint_dissimilarity(clip, {View::right, Modality::rgb}); }),
              ErrorCode::ChannelAbsent);
}

TEST(SelectKeyframes, IdenticalFramesAreStatic) {
    const FeatureStream clip = one_channel_clip(std::vector<std::vector<double>>(8, {0.3, 0.7, 0.1}));
    const KeyframeSet kf = select_keyframes(clip);
    EXPECT_TRUE(kf.static_clip);
    EXPECT_EQ(kf.ticks(), (std::vector<Tick>{1, 8}));
}

TEST(SelectKeyframes, ThresholdIsExclusive) {
    // Endpoint distance is exactly 0.5.
    const FeatureStream clip = one_channel_clip({{0, 0, 0, 0}, {0.5, 0.5, 0.5, 0.5}, {1, 0, 0, 0}});
    EXPECT_TRUE(select_keyframes(clip, {.k_max = 5, .static_threshold = 0.5, .ratio_threshold = 0.8}).static_clip);
    EXPECT_FALSE(select_keyframes(clip, {.k_max = 5, .static_threshold = 0.49, .ratio_threshold = 0.8}).static_clip);
}

TEST(SelectKeyframes, LinearRampAdmitsTheGeometricMidpoints) {
    const std::vector<double> a = {1, 1, 0, 0}, b = {0, 0, 1, 1};
    const FeatureStream clip = linear_ramp(a, b, 20);
    // Oracle: the frames maximizing min(distance to start, distance to end).
    double best = -1.0;
    std::vector<Tick> argmax;
    for (Tick t = 2; t < 20; ++t) {
        const auto& x = clip.at_tick(t).readings[0].values;
        const double s = std::min(distance_oracle(x, a), distance_oracle(x, b));
        if (s > best + 1e-12) {
            best = s;
            argmax = {t};
        } else if (std::abs(s - best) <= 1e-12) {
            argmax.push_back(t);
        }
    }
    ASSERT_EQ(argmax, (std::vector<Tick>{10, 11}));

    auto is_midpoint = [&](Tick t) { return t == 10 || t == 11; };

    // K = 5: Stage 2 takes one maximizer; its twin is inside the minimum gap,
    // and with three keyframes Stage 3 has an empty span.
    const KeyframeSet kf = select_keyframes(clip);
    ASSERT_FALSE(kf.static_clip);
    ASSERT_EQ(kf.frames.size(), 3u);
    EXPECT_TRUE(is_midpoint(kf.frames[1].frame_index));
    EXPECT_EQ(kf.frames[1].stage, 2);
    EXPECT_NEAR(kf.frames[1].score, best, 1e-12);

    // K = 3 leaves Stage 2 no budget, so the motion peak comes from Stage 3.
    const KeyframeSet k3 = select_keyframes(clip, {.k_max = 3, .static_threshold = 0.8, .ratio_threshold = 0.8});
    ASSERT_EQ(k3.frames.size(), 3u);
    EXPECT_TRUE(is_midpoint(k3.frames[1].frame_index));
    EXPECT_EQ(k3.frames[1].stage, 3);
}

TEST(SelectKeyframes, ContractOnRandomClips) {
    Rng rng(13);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = testkit::pick(rng, 2, 40);
        const FeatureStream clip = testkit::random_stream(rng, n, testkit::pick(rng, 1, 4), testkit::pick(rng, 1, 8),
                                                          trial % 2 == 0, trial % 3 == 0 ? 0.2 : 0.0);
        const KeyframeParams p{testkit::pick(rng, 2, 7), testkit::uniform(rng, 0.05, 0.6),
                               testkit::uniform(rng, 0.3, 0.95)};
        KeyframeSet kf;
        try {
            kf = select_keyframes(clip, p);
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ChannelAbsent);
            continue;
        }
        ASSERT_GE(kf.frames.size(), 2u);
        EXPECT_LE(kf.frames.size(), p.k_max);
        EXPECT_EQ(kf.frames.front().frame_index, 1u);
        EXPECT_EQ(kf.frames.back().frame_index, n);
        for (std::size_t i = 1; i < kf.frames.size(); ++i)
            EXPECT_LT(kf.frames[i - 1].frame_index, kf.frames[i].frame_index);
        if (kf.static_clip) {
            EXPECT_EQ(kf.frames.size(), 2u);
        }

        // Stage-2 frames: within the ratio of the top Stage-2 candidate and
        // spaced at least ceil(N / K) from each other and the endpoints.
        double top = 0.0;
        for (std::size_t f = 1; f + 1 < n; ++f)
            if (const auto c = detail::best_between(clip, f, 0, n - 1)) top = std::max(top, c->score);
        const std::size_t gap = (n + p.k_max - 1) / p.k_max;
        std::vector<Tick> stage12;
        for (const Keyframe& k : kf.frames) {
            if (k.stage == 2) {
                EXPECT_GE(k.score, p.ratio_threshold * top - 1e-15);
            }
            if (k.stage != 3) stage12.push_back(k.frame_index);
        }
        for (std::size_t i = 1; i < stage12.size(); ++i) EXPECT_GE(stage12[i] - stage12[i - 1], gap);

        // Stage 3 against a direct scan: the span runs between the second
        // and second-to-last earlier keyframes (the whole clip when only the
        // endpoints are in).
        if (kf.static_clip) continue;
        std::optional<double> peak;
        if (stage12.size() < p.k_max && stage12.size() != 3) {
            const Tick lo = stage12.size() == 2 ? stage12[0] : stage12[1];
            const Tick hi = stage12.size() == 2 ? stage12[1] : stage12[stage12.size() - 2];
            for (Tick t = lo + 1; t < hi; ++t) {
                if (std::find(stage12.begin(), stage12.end(), t) != stage12.end()) continue;
                for (ChannelId c : clip.channels()) {
                    const auto* x = clip.at_tick(t).find(c);
                    const auto* a = clip.at_tick(lo).find(c);
                    const auto* b = clip.at_tick(hi).find(c);
                    if (!x->available || !a->available || !b->available) continue;
                    const double s = std::min(distance_oracle(x->values, a->values), distance_oracle(x->values, b->values));
                    if (s > 0.0 && (!peak || s > *peak)) peak = s;
                }
            }
        }
        const auto third = std::find_if(kf.frames.begin(), kf.frames.end(), [](const Keyframe& k) { return k.stage == 3; });
        ASSERT_EQ(third != kf.frames.end(), peak.has_value());
        if (peak) {
            EXPECT_NEAR(third->score, *peak, 1e-12);
        }

        EXPECT_EQ(select_keyframes(clip, p), kf);
    }
}

TEST(SelectKeyframes, DominatedChannelNeverChangesTheSelection) {
    Rng rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const FeatureStream clip = testkit::random_stream(rng, testkit::pick(rng, 3, 30), 1, 6, trial % 2 == 0);
        const KeyframeParams p{5, 0.2, 0.8};
        const KeyframeSet base = select_keyframes(clip, p);
        EXPECT_EQ(select_keyframes(with_dominated_channel(clip, true), p), base);
        EXPECT_EQ(select_keyframes(with_dominated_channel(clip, false), p), base);
    }
}

TEST(SelectKeyframes, RejectsBadParameters) {
    const FeatureStream clip = one_channel_clip({{0}, {1}});
    EXPECT_EQ(code_of([&] { select_keyframes(clip, {1, 0.8, 0.8}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { select_keyframes(clip, {5, 0.0, 0.8}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { select_keyframes(clip, {5, 0.8, 1.0}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([&] { select_keyframes(one_channel_clip({{0}}), {}); }), ErrorCode::InvalidArgument);
}

TEST(SelectKeyframes, NoSharedEndpointChannelIsChannelAbsent) {
    FeatureStream clip(testkit::first_channels(2), 1);
    clip.push_back({0, {{clip.channels()[0], {0}, true}, {clip.channels()[1], {0}, false}}});
    clip.push_back({0, {{clip.channels()[0], {1}, false}, {clip.channels()[1], {1}, true}}});
    EXPECT_EQ(code_of([&] { select_keyframes(clip); }), ErrorCode::ChannelAbsent);
}

TEST(PseudoPoseStream, Shapes) {
    const FeatureStream still = one_channel_clip(std::vector<std::vector<double>>(6, {0.5}));
    const FeatureStream two = keyframes_to_pseudo_pose_stream(still, select_keyframes(still));
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].source_tick, 1u);
    EXPECT_EQ(two[1].source_tick, 6u);

    const FeatureStream ramp = linear_ramp({1, 1, 1, 0, 0, 0}, {0, 0, 0, 1, 1, 1}, 30);
    KeyframeSet kf = select_keyframes(ramp, {.k_max = 5, .static_threshold = 0.5, .ratio_threshold = 0.5});
    ASSERT_EQ(kf.frames.size(), 5u);
    const FeatureStream five = keyframes_to_pseudo_pose_stream(ramp, kf);
    ASSERT_EQ(five.size(), 5u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(five[i].source_tick, kf.frames[i].frame_index);
        EXPECT_EQ(five[i].readings[0].values, ramp.at_tick(kf.frames[i].frame_index).readings[0].values);
    }

    kf.frames.push_back({31, ramp.channels()[0], 0.0, 2});
    EXPECT_EQ(code_of([&] { keyframes_to_pseudo_pose_stream(ramp, kf); }), ErrorCode::InvalidArgument);
}

TEST(SimulatedClips, KeyframeCapHoldsAcrossTheSweep) {
    for (const TransitionKey& key : transition_sweep_keys()) {
        ScenarioConfig c = *scenario_preset("bc-sim");
        c.seed = 77;
        const SimulatedSequence clip = sample_transition_clip(key.from, key.to, key.direction, c);
        const KeyframeSet kf = select_keyframes(clip.stream, {5, 0.3, 0.8});
        EXPECT_LE(kf.frames.size(), 5u);
        EXPECT_EQ(kf.frames.front().frame_index, 1u);
        EXPECT_EQ(kf.frames.back().frame_index, clip.stream.size());
    }
}

// With zero noise the strongest interior keyframe sits on a planted
// pseudo-pose in nearly every clip. The exceptions are ramp segments whose
// two endpoint-distance curves cross between pseudo-poses; with the default
// world that happens in 121 of 2000 clips.
TEST(SimulatedClips, StrongestInteriorKeyframeSitsOnAPlantedPseudoPose) {
    std::size_t clips = 0, hits = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
        for (const TransitionKey& key : transition_sweep_keys()) {
            ScenarioConfig c = *scenario_preset("bc-sim");
            c.seed = seed;
            c.bright.noise = 0.0;
            const SimulatedSequence clip = sample_transition_clip(key.from, key.to, key.direction, c);
            const KeyframeSet kf = select_keyframes(clip.stream, {5, 0.3, 0.8});
            if (kf.frames.size() < 3) continue;
            std::size_t best = 1;
            for (std::size_t j = 2; j + 1 < kf.frames.size(); ++j)
                if (kf.frames[j].score > kf.frames[best].score) best = j;
            const Tick t = kf.frames[best].frame_index;
            ++clips;
            for (Tick planted : clip.truth.transition->pseudo_pose_ticks)
                if (t + 1 >= planted && t <= planted + 1) {
                    ++hits;
                    break;
                }
        }
    EXPECT_EQ(clips, 2000u);
    EXPECT_GE(static_cast<double>(hits) / static_cast<double>(clips), 0.9);
}

// A zero-noise left rotation through one pseudo-pose yields three keyframes,
// and decoding them against the generating chain (durations in keyframe
// units) recovers hold, pseudo-pose, hold in order.
TEST(SimulatedClips, PseudoPoseStreamDecodesToThePlantedChain) {
    ScenarioConfig c = *scenario_preset("bc-sim");
    c.bright.noise = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        c.seed = seed;
        const SimulatedSequence clip = sample_transition_clip(Pose::yeaR, Pose::solU, Direction::left, c);
        const auto& planted = clip.truth.transition->pseudo_pose_ticks;
        const KeyframeSet kf = select_keyframes(clip.stream, {5, 0.3, 0.8});
        const std::size_t length = planted.size() + 2;
        if (kf.frames.size() != length) continue;
        ++checked;
        const HsmmModel& gen = clip.truth.generating_model;
        Grid<double> uniform(length, 5, 0.2);
        const HsmmModel chain = detail::chain_model(length, DurationModel::from_pmf(uniform), gen.emissions);
        const DecodeResult d =
            hsmm_viterbi(keyframes_to_pseudo_pose_stream(clip.stream, kf), chain, {.final_state = length - 1});
        ASSERT_EQ(d.segmentation.segments.size(), length);
        for (std::size_t i = 0; i < length; ++i) EXPECT_EQ(d.segmentation.segments[i].state, i);
    }
    EXPECT_GE(checked, 3u);
}
