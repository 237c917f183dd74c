#include <gtest/gtest.h>

#include <random>

#include "posehsmm/simulator.hpp"
#include "posehsmm/summarizer.hpp"

using namespace posehsmm;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

const KeyframeParams kSweep{5, 0.3, 0.8};

std::vector<Pose> track(std::initializer_list<std::pair<Pose, std::size_t>> runs) {
    std::vector<Pose> out;
    for (const auto& [p, n] : runs) out.insert(out.end(), n, p);
    return out;
}

std::vector<HistoryRecord> summarize(const std::vector<Pose>& poses, HistoryParams params = {}) {
    const std::vector<Scene> scenes(poses.size(), Scene::BC);
    return summarize_labels(poses, scenes, params);
}

SimulatedSequence clip_for(const TransitionKey& key, std::uint64_t seed) {
    ScenarioConfig c = *scenario_preset("bc-sim");
    c.seed = seed;
    return sample_transition_clip(key.from, key.to, key.direction, c);
}

// First seed at or after `from_seed` whose clip yields exactly `count` keyframes.
std::uint64_t seed_with_keyframes(const TransitionKey& key, std::size_t count, std::uint64_t from_seed) {
    for (std::uint64_t seed = from_seed; seed < from_seed + 500; ++seed)
        if (select_keyframes(clip_for(key, seed).stream, kSweep).frames.size() == count) return seed;
    ADD_FAILURE() << "no clip with " << count << " keyframes";
    return from_seed;
}

struct ClipSet {
    std::vector<FeatureStream> streams;
    std::vector<TrainingClip> clips;
};

ClipSet training_set(std::span<const TransitionKey> keys, std::uint64_t seed) {
    ClipSet set;
    set.streams.reserve(keys.size());
    for (const TransitionKey& k : keys) set.streams.push_back(clip_for(k, seed).stream);
    for (std::size_t i = 0; i < keys.size(); ++i) set.clips.push_back({&set.streams[i], keys[i]});
    return set;
}

}  // namespace

TEST(History, ModalFractionRule) {
    auto r = summarize(track({{Pose::fetL, 9}, {Pose::solU, 1}}));
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].label, Pose::fetL);
    EXPECT_DOUBLE_EQ(r[0].confidence, 0.9);

    r = summarize(track({{Pose::solU, 7}, {Pose::fetL, 3}}));
    EXPECT_EQ(r[0].label, Pose::other);
    EXPECT_DOUBLE_EQ(r[0].confidence, 0.7);

    // 0.8 is inclusive.
    r = summarize(track({{Pose::logR, 8}, {Pose::solD, 2}}));
    EXPECT_EQ(r[0].label, Pose::logR);
    EXPECT_DOUBLE_EQ(r[0].confidence, 0.8);
}

TEST(History, TilesWithATrailingPartialWindow) {
    const auto poses = track({{Pose::solU, 10}, {Pose::fetR, 10}, {Pose::yeaL, 3}});
    const auto r = summarize(poses);
    ASSERT_EQ(r.size(), 3u);
    Tick next = 1;
    for (const HistoryRecord& w : r) {
        EXPECT_EQ(w.window_start, next);
        EXPECT_GE(w.confidence, 0.0);
        EXPECT_LE(w.confidence, 1.0);
        next += w.window_len;
    }
    EXPECT_EQ(next, poses.size() + 1);
    EXPECT_EQ(r[2].window_len, 3u);
    EXPECT_EQ(r[2].label, Pose::yeaL);

    // A stream shorter than one window is a single partial record.
    const auto short_r = summarize(track({{Pose::falD, 4}}));
    ASSERT_EQ(short_r.size(), 1u);
    EXPECT_EQ(short_r[0].window_len, 4u);
}

TEST(History, SamplingAndTies) {
    // Sampling every 2nd tick sees solU on 1,3,5,7,9 only.
    std::vector<Pose> alternating;
    for (int t = 0; t < 10; ++t) alternating.push_back(t % 2 == 0 ? Pose::solU : Pose::fetR);
    auto r = summarize(alternating, {.sample_every = 2, .window = 10, .consistency = 0.8});
    EXPECT_EQ(r[0].label, Pose::solU);
    EXPECT_DOUBLE_EQ(r[0].confidence, 1.0);

    // Mode ties go to the lower pose; the low fraction still yields other.
    r = summarize(alternating, {.sample_every = 1, .window = 10, .consistency = 0.5});
    EXPECT_EQ(r[0].label, Pose::solU);

    const std::vector<Pose> poses(10, Pose::fetL);
    std::vector<Scene> scenes(10, Scene::BC);
    std::fill(scenes.begin() + 5, scenes.end(), Scene::DO);
    EXPECT_EQ(summarize_labels(poses, scenes)[0].scene, Scene::BC);
    scenes[4] = Scene::DO;
    EXPECT_EQ(summarize_labels(poses, scenes)[0].scene, Scene::DO);
}

TEST(History, ConsistencyAboveOneLabelsEverythingOther) {
    const auto r = summarize(std::vector<Pose>(35, Pose::solD), {.sample_every = 1, .window = 10, .consistency = 1.01});
    for (const HistoryRecord& w : r) EXPECT_EQ(w.label, Pose::other);
}

TEST(History, OtherIsExactlyTheComplementOfThePredicate) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Pose> poses(47);
        for (Pose& p : poses) p = kHeldPoses[rng() % 3];
        const double cut = 0.5 + 0.1 * static_cast<double>(rng() % 5);
        for (const HistoryRecord& w : summarize(poses, {.sample_every = 1 + rng() % 3, .window = 10, .consistency = cut})) {
            const bool kept = w.confidence >= cut - kConsistencySlack;
            EXPECT_EQ(w.label == Pose::other, !kept);
        }
    }
}

TEST(History, Errors) {
    EXPECT_EQ(code_of([] { summarize({}); }), ErrorCode::EmptySequence);
    EXPECT_EQ(code_of([] { summarize(track({{Pose::solU, 4}}), {.sample_every = 3, .window = 2}); }),
              ErrorCode::InvalidArgument);
    const std::vector<Pose> p(3, Pose::solU);
    const std::vector<Scene> s(2, Scene::BC);
    EXPECT_EQ(code_of([&] { summarize_labels(p, s); }), ErrorCode::LabelMismatch);
}

TEST(History, DetectionRateOfTruthAgainstItselfIsOne) {
    const auto r = summarize(track({{Pose::solU, 12}, {Pose::logL, 30}}));
    EXPECT_DOUBLE_EQ(window_detection_rate(r, r), 1.0);
    auto other = r;
    other[0].label = Pose::fetR;
    EXPECT_DOUBLE_EQ(window_detection_rate(other, r), 4.0 / 5.0);
    other.pop_back();
    EXPECT_EQ(code_of([&] { window_detection_rate(other, r); }), ErrorCode::LabelMismatch);
}

TEST(History, RecoversThePlantedScheduleInTheBrightScene) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ScenarioConfig c = *scenario_preset("bc-sim");
        c.seed = seed;
        const SimulatedSequence s = sample_sequence(c);
        const auto predicted = summarize_history(s.stream, s.truth.generating_model);
        const auto [poses, scenes] = label_tracks(s.truth.segmentation, s.truth.generating_model.states);
        EXPECT_GE(window_detection_rate(predicted, summarize_labels(poses, scenes)), 0.85) << "seed " << seed;
    }
}

TEST(Library, SingleClipMeansAreTheClampedKeyframeVectors) {
    const TransitionKey key{Pose::solU, Pose::solD, Direction::right};
    const SimulatedSequence s = clip_for(key, seed_with_keyframes(key, 5, 1));
    const std::vector<TrainingClip> clips{{&s.stream, key}};
    const TransitionLibrary lib = build_transition_library(clips, kSweep);
    ASSERT_EQ(lib.chains.size(), 1u);
    const TransitionChain& chain = lib.chains[0];
    EXPECT_EQ(chain.length, 5u);
    const KeyframeSet kf = select_keyframes(s.stream, kSweep);
    for (const ChannelEmissionModel& m : chain.keyframe_model.emissions.models())
        for (std::size_t pos = 0; pos < 5; ++pos) {
            const auto values = s.stream.at_tick(kf.frames[pos].frame_index).find(m.channel())->values;
            for (std::size_t f = 0; f < values.size(); ++f) EXPECT_EQ(m.means()(pos, f), clamp_probability(values[f]));
        }
    EXPECT_EQ(chain.keyframe_model.emissions, chain.full_rate_model.emissions);
    EXPECT_NO_THROW(chain.full_rate_model.validate());
}

TEST(Library, TwoClipsAverageByPosition) {
    const TransitionKey key{Pose::fetL, Pose::logR, Direction::left};
    const std::uint64_t s1 = seed_with_keyframes(key, 5, 1);
    const std::uint64_t s2 = seed_with_keyframes(key, 5, s1 + 1);
    const SimulatedSequence a = clip_for(key, s1), b = clip_for(key, s2);
    const std::vector<TrainingClip> clips{{&a.stream, key}, {&b.stream, key}};
    const TransitionLibrary lib = build_transition_library(clips, kSweep);
    ASSERT_EQ(lib.chains.size(), 1u);
    const KeyframeSet ka = select_keyframes(a.stream, kSweep), kb = select_keyframes(b.stream, kSweep);
    for (const ChannelEmissionModel& m : lib.chains[0].keyframe_model.emissions.models())
        for (std::size_t pos = 0; pos < 5; ++pos) {
            const auto va = a.stream.at_tick(ka.frames[pos].frame_index).find(m.channel())->values;
            const auto vb = b.stream.at_tick(kb.frames[pos].frame_index).find(m.channel())->values;
            for (std::size_t f = 0; f < va.size(); ++f)
                EXPECT_NEAR(m.means()(pos, f), clamp_probability((va[f] + vb[f]) / 2.0), 1e-15);
        }
}

TEST(Library, AbsentCombinationsAreUnavailable) {
    const std::vector<TransitionKey> keys{{Pose::solU, Pose::solD, Direction::left}, {Pose::fetR, Pose::other, Direction::right}};
    const ClipSet set = training_set(keys, 11);
    const TransitionLibrary lib = build_transition_library(set.clips, kSweep);
    EXPECT_TRUE(lib.available(keys[0]));
    EXPECT_TRUE(lib.available(keys[1]));
    EXPECT_FALSE(lib.available({Pose::solU, Pose::solD, Direction::right}));
    for (const TransitionChain& c : lib.chains) {
        EXPECT_GE(c.length, 2u);
        EXPECT_LE(c.length, 5u);
    }
}

TEST(Classify, TrainingClipsMatchTheirOwnChain) {
    const std::vector<TransitionKey> keys{{Pose::solU, Pose::solD, Direction::left},
                                          {Pose::solU, Pose::solD, Direction::right},
                                          {Pose::fetL, Pose::yeaR, Direction::left},
                                          {Pose::logL, Pose::falU, Direction::right}};
    const ClipSet set = training_set(keys, 21);
    const TransitionLibrary lib = build_transition_library(set.clips, kSweep);
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const TransitionRecord r = classify_transition(set.streams[i], lib, kSweep);
        EXPECT_EQ(r.key(), keys[i]);
        EXPECT_TRUE(std::isfinite(r.log_prob));
        EXPECT_GE(r.n_pseudo_poses, 1u);
        EXPECT_LE(r.n_pseudo_poses, 5u);
        EXPECT_NE(r.from, r.to);
        // No other chain scores higher than the winner.
        const FeatureStream pseudo =
            resample_ordinal(keyframes_to_pseudo_pose_stream(set.streams[i], select_keyframes(set.streams[i], kSweep)), 5);
        for (const TransitionChain& c : lib.chains) {
            if (pseudo.size() < c.length) continue;
            try {
                const double s = hsmm_viterbi(pseudo, c.keyframe_model, {.final_state = c.length - 1}).log_prob;
                EXPECT_LE(s, r.log_prob + kTieTolerance);
            } catch (const Error&) {
            }
        }
        // Full-rate scoring is dominated by the held endpoints, so only those are pinned.
        const TransitionRecord full = classify_transition(set.streams[i], lib, kSweep, ChainScoring::full_rate);
        EXPECT_EQ(full.from, keys[i].from);
        EXPECT_EQ(full.to, keys[i].to);
        EXPECT_TRUE(std::isfinite(full.log_prob));
    }
}

TEST(Classify, MirroredLabelsFlipOnlyTheDirection) {
    const std::vector<TransitionKey> keys{{Pose::solU, Pose::logR, Direction::left},
                                          {Pose::solU, Pose::logR, Direction::right},
                                          {Pose::yeaL, Pose::falD, Direction::left},
                                          {Pose::yeaL, Pose::falD, Direction::right}};
    const ClipSet set = training_set(keys, 31);
    const TransitionLibrary lib = build_transition_library(set.clips, kSweep);
    TransitionLibrary mirrored = lib;
    for (TransitionChain& c : mirrored.chains)
        c.key.direction = c.key.direction == Direction::left ? Direction::right : Direction::left;
    std::sort(mirrored.chains.begin(), mirrored.chains.end(),
              [](const TransitionChain& a, const TransitionChain& b) { return a.key < b.key; });
    for (std::uint64_t seed = 40; seed < 44; ++seed)
        for (const TransitionKey& k : keys) {
            const FeatureStream clip = clip_for(k, seed).stream;
            const TransitionRecord plain = classify_transition(clip, lib, kSweep);
            const TransitionRecord flipped = classify_transition(clip, mirrored, kSweep);
            EXPECT_EQ(flipped.from, plain.from);
            EXPECT_EQ(flipped.to, plain.to);
            EXPECT_NE(flipped.direction, plain.direction);
            EXPECT_EQ(flipped.log_prob, plain.log_prob);
        }
}

TEST(Classify, StaticClipIsNoTransition) {
    const TransitionKey key{Pose::solU, Pose::solD, Direction::left};
    const ClipSet set = training_set(std::span(&key, 1), 1);
    const TransitionLibrary lib = build_transition_library(set.clips, kSweep);
    FeatureStream still({set.streams[0].channels().begin(), set.streams[0].channels().end()}, set.streams[0].feature_dim());
    for (Tick t = 1; t <= 20; ++t) {
        FeatureFrame f = set.streams[0][0];
        f.source_tick = t;
        still.push_back(std::move(f));
    }
    EXPECT_EQ(code_of([&] { classify_transition(still, lib, kSweep); }), ErrorCode::NoTransitionDetected);
}

TEST(Classify, SweepHoldoutBeatsChanceTenfoldAndSurvivesPruning) {
    const auto keys = transition_sweep_keys();
    const ClipSet set = training_set(keys, 500);
    const TransitionLibrary lib = build_transition_library(set.clips, kSweep);
    ASSERT_EQ(lib.chains.size(), 200u);

    std::mt19937_64 rng(8);
    std::size_t correct = 0;
    for (const TransitionKey& k : keys) {
        const FeatureStream clip = clip_for(k, 1).stream;
        if (select_keyframes(clip, kSweep).static_clip) continue;  // counts as a miss
        const TransitionRecord r = classify_transition(clip, lib, kSweep);
        correct += r.key() == k ? 1 : 0;

        // Drop a random half of the other chains; the winner must not move.
        TransitionLibrary pruned = lib;
        std::erase_if(pruned.chains, [&](const TransitionChain& c) { return c.key != r.key() && c.key != k && rng() % 2 == 0; });
        const TransitionRecord again = classify_transition(clip, pruned, kSweep);
        EXPECT_EQ(again.key(), r.key());
        EXPECT_EQ(again.log_prob, r.log_prob);
    }
    EXPECT_GE(static_cast<double>(correct) / 200.0, 10.0 / 200.0);
}
