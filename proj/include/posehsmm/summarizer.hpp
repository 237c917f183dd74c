#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "posehsmm/brute_force.hpp"
#include "posehsmm/hsmm.hpp"
#include "posehsmm/keyframes.hpp"

namespace posehsmm {

// ---------------------------------------------------------------------------
// Pose history

struct HistoryParams {
    Tick sample_every = 1;
    Tick window = 10;
    /// Minimum modal fraction for a window to keep its label (inclusive).
    double consistency = 0.8;
};

struct HistoryRecord {
    Tick window_start = 1;
    Tick window_len = 0;
    Pose label = Pose::other;
    Scene scene = Scene::BC;
    double confidence = 0.0;

    friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
};

inline constexpr double kConsistencySlack = 1e-12;

/// Tiles ticks 1..T into non-overlapping windows (the last may be short),
/// samples every `sample_every` ticks from tick 1, and labels each window
/// with its modal pose when that pose covers at least `consistency` of the
/// samples, `other` otherwise. Mode ties go to the lower pose, scene ties to
/// BC.
inline std::vector<HistoryRecord> summarize_labels(std::span<const Pose> poses, std::span<const Scene> scenes,
                                                   const HistoryParams& params = {}) {
    require(!poses.empty(), ErrorCode::EmptySequence, "nothing to summarize");
    require(poses.size() == scenes.size(), ErrorCode::LabelMismatch, "pose and scene tracks differ in length");
    require(params.sample_every >= 1 && params.window >= params.sample_every, ErrorCode::InvalidArgument,
            "need window >= sample_every >= 1");
    const Tick n = poses.size();
    std::vector<HistoryRecord> out;
    for (Tick start = 1; start <= n; start += params.window) {
        const Tick len = std::min(params.window, n - start + 1);
        std::array<std::size_t, kPoseCount> pose_votes{};
        std::array<std::size_t, 2> scene_votes{};
        std::size_t samples = 0;
        for (Tick t = start; t < start + len; ++t) {
            if ((t - 1) % params.sample_every != 0) continue;
            ++pose_votes[static_cast<std::size_t>(poses[t - 1])];
            ++scene_votes[static_cast<std::size_t>(scenes[t - 1])];
            ++samples;
        }
        HistoryRecord r{start, len, Pose::other, Scene::BC, 0.0};
        if (samples > 0) {
            const auto top = std::max_element(pose_votes.begin(), pose_votes.end()) - pose_votes.begin();
            r.confidence = static_cast<double>(pose_votes[top]) / static_cast<double>(samples);
            r.label = r.confidence >= params.consistency - kConsistencySlack ? static_cast<Pose>(top) : Pose::other;
            r.scene = scene_votes[1] > scene_votes[0] ? Scene::DO : Scene::BC;
        }
        out.push_back(r);
    }
    return out;
}

/// Pose and scene of every tick of a decoded segmentation.
inline std::pair<std::vector<Pose>, std::vector<Scene>> label_tracks(const Segmentation& seg, const StateSpace& space) {
    std::pair<std::vector<Pose>, std::vector<Scene>> out;
    for (StateIndex s : decode_segments(seg)) {
        out.first.push_back(space[s].pose);
        out.second.push_back(space[s].scene);
    }
    return out;
}

inline std::vector<HistoryRecord> summarize_history(const FeatureStream& stream, const HsmmModel& model,
                                                    const HistoryParams& params = {}) {
    const DecodeResult decoded = hsmm_viterbi(stream, model);
    const auto [poses, scenes] = label_tracks(decoded.segmentation, model.states);
    return summarize_labels(poses, scenes, params);
}

/// Fraction of windows whose label matches the reference window label.
inline double window_detection_rate(std::span<const HistoryRecord> predicted, std::span<const HistoryRecord> truth) {
    require(!truth.empty() && predicted.size() == truth.size(), ErrorCode::LabelMismatch,
            "history logs tile different lengths");
    std::size_t hits = 0;
    for (std::size_t w = 0; w < truth.size(); ++w) {
        require(predicted[w].window_start == truth[w].window_start, ErrorCode::LabelMismatch,
                "history windows are misaligned");
        hits += predicted[w].label == truth[w].label ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

// ---------------------------------------------------------------------------
// Pose transitions

struct TransitionKey {
    Pose from = Pose::solU;
    Pose to = Pose::solD;
    Direction direction = Direction::left;

    friend auto operator<=>(const TransitionKey&, const TransitionKey&) = default;
};

/// The sweep label set: each held pose to every other held pose or `other`,
/// in both directions (10 x 10 x 2).
inline std::vector<TransitionKey> transition_sweep_keys() {
    std::vector<TransitionKey> keys;
    for (Pose from : kHeldPoses) {
        for (Pose to : kHeldPoses)
            if (to != from)
                for (Direction d : {Direction::left, Direction::right}) keys.push_back({from, to, d});
        for (Direction d : {Direction::left, Direction::right}) keys.push_back({from, Pose::other, d});
    }
    return keys;
}

struct TransitionRecord {
    Pose from = Pose::solU;
    Pose to = Pose::solD;
    Direction direction = Direction::left;
    double log_prob = kNegInf;
    std::size_t n_pseudo_poses = 0;

    TransitionKey key() const { return {from, to, direction}; }
};

enum class ChainScoring {
    /// Align the keyframe stream to the chain (durations in keyframe units).
    keyframes,
    /// Decode the whole clip against the chain with tick-level durations.
    full_rate,
};

/// Left-to-right pseudo-pose chain of one (from, to, direction).
struct TransitionChain {
    TransitionKey key;
    std::size_t length = 0;
    HsmmModel keyframe_model;
    HsmmModel full_rate_model;
};

struct TransitionLibrary {
    std::vector<TransitionChain> chains;  // sorted by key
    KeyframeParams params;

    const TransitionChain* find(const TransitionKey& k) const {
        const auto it = std::lower_bound(chains.begin(), chains.end(), k,
                                         [](const TransitionChain& c, const TransitionKey& key) { return c.key < key; });
        return it != chains.end() && it->key == k ? &*it : nullptr;
    }

    /// Absent combinations are N/A.
    bool available(const TransitionKey& k) const { return find(k) != nullptr; }
};

struct TrainingClip {
    const FeatureStream* clip = nullptr;
    TransitionKey key;
};

namespace detail {

// Clip keyframe used for chain position `pos` when K keyframes map onto L
// positions; endpoints map onto endpoints.
inline std::size_t ordinal_source(std::size_t pos, std::size_t k, std::size_t l) {
    if (l == 1 || k == 1) return 0;
    return static_cast<std::size_t>(std::lround(static_cast<double>(pos) * static_cast<double>(k - 1) /
                                                 static_cast<double>(l - 1)));
}

inline HsmmModel chain_model(std::size_t length, DurationModel durations, EmissionSet emissions) {
    HsmmModel m;
    m.states = StateSpace::generic(length);
    std::vector<double> pi(length, 0.0);
    pi[0] = 1.0;
    m.initial = {std::move(pi)};
    m.transitions = chain_transitions(length);
    m.durations = std::move(durations);
    m.emissions = std::move(emissions);
    m.validate();
    return m;
}

}  // namespace detail

/// One chain per combination present in `clips`. The chain length is the
/// most common keyframe count among that combination's clips (ties to the
/// longer); keyframes are aligned to chain positions by ordinal, and each
/// position's Bernoulli means are fitted from the aligned keyframe vectors.
/// Keyframe-mode durations are uniform over 1..k_max; full-rate durations are
/// fitted from the keyframe tick gaps, cutting halfway between keyframes.
inline TransitionLibrary build_transition_library(std::span<const TrainingClip> clips,
                                                  const KeyframeParams& params = {}) {
    std::map<TransitionKey, std::vector<const FeatureStream*>> grouped;
    for (const TrainingClip& c : clips) {
        require(c.clip != nullptr && c.clip->size() >= 2, ErrorCode::InvalidArgument, "training clip too short");
        require(c.key.from != c.key.to, ErrorCode::InvalidArgument, "a transition needs distinct poses");
        grouped[c.key].push_back(c.clip);
    }

    TransitionLibrary lib;
    lib.params = params;
    for (const auto& [key, streams] : grouped) {
        std::vector<KeyframeSet> sets;
        std::map<std::size_t, std::size_t> counts;
        for (const FeatureStream* s : streams) {
            sets.push_back(select_keyframes(*s, params));
            ++counts[sets.back().frames.size()];
        }
        std::size_t length = 0, best = 0;
        for (const auto& [len, n] : counts)
            if (n >= best) {
                best = n;
                length = len;
            }

        const FeatureStream& first = *streams.front();
        FeatureStream aligned({first.channels().begin(), first.channels().end()}, first.feature_dim());
        std::vector<StateIndex> positions;
        std::vector<Segmentation> gaps;
        Tick longest = 0;
        for (std::size_t i = 0; i < streams.size(); ++i) {
            const auto& kf = sets[i].frames;
            std::vector<Tick> ticks;
            for (std::size_t pos = 0; pos < length; ++pos) {
                const Keyframe& k = kf[detail::ordinal_source(pos, kf.size(), length)];
                FeatureFrame f = streams[i]->at_tick(k.frame_index);
                f.source_tick = 0;
                aligned.push_back(std::move(f));
                positions.push_back(pos);
                ticks.push_back(k.frame_index);
            }
            // Full-rate durations: cut halfway between consecutive keyframe ticks.
            const Tick n = streams[i]->size();
            Segmentation seg;
            seg.length = n;
            Tick start = 1;
            for (std::size_t pos = 0; pos < length && start <= n; ++pos) {
                Tick end = pos + 1 == length ? n : std::max(start, (ticks[pos] + ticks[pos + 1]) / 2);
                end = std::min(end, n - (length - pos - 1));
                seg.segments.push_back({start, end - start + 1, pos});
                start = end + 1;
            }
            gaps.push_back(std::move(seg));
            longest = std::max(longest, n);
        }

        std::vector<ChannelEmissionModel> models;
        for (ChannelId c : aligned.channels()) {
            bool seen = false;
            for (const FeatureFrame& f : aligned.frames()) seen = seen || f.find(c)->available;
            models.push_back(seen ? fit_channel_emissions(aligned, positions, c, length)
                                  : ChannelEmissionModel(c, Grid<double>(length, aligned.feature_dim(), 0.5)));
        }
        EmissionSet emissions(std::move(models));

        Grid<double> uniform(length, params.k_max, 1.0 / static_cast<double>(params.k_max));
        TransitionChain chain;
        chain.key = key;
        chain.length = length;
        chain.keyframe_model = detail::chain_model(length, DurationModel::from_pmf(uniform), emissions);
        chain.full_rate_model = detail::chain_model(length, fit_durations(gaps, length, longest), emissions);
        lib.chains.push_back(std::move(chain));
    }
    return lib;
}

/// Stretches a keyframe stream to `length` frames by ordinal position
/// (endpoints stay endpoints, interior frames repeat as needed), so chains of
/// every length up to k_max can align to it without skipping positions.
inline FeatureStream resample_ordinal(const FeatureStream& pseudo, std::size_t length) {
    if (pseudo.size() >= length) return pseudo;
    FeatureStream out({pseudo.channels().begin(), pseudo.channels().end()}, pseudo.feature_dim());
    for (std::size_t pos = 0; pos < length; ++pos) {
        FeatureFrame f = pseudo[detail::ordinal_source(pos, pseudo.size(), length)];
        f.source_tick = 0;
        out.push_back(std::move(f));
    }
    return out;
}

namespace detail {

inline bool lexicographically_before(const TransitionKey& a, const TransitionKey& b) {
    if (a.from != b.from) return pose_name(a.from) < pose_name(b.from);
    if (a.to != b.to) return pose_name(a.to) < pose_name(b.to);
    return direction_name(a.direction) < direction_name(b.direction);
}

}  // namespace detail

/// Scores the clip against every chain with chain-constrained decoding (start
/// in the first position, end in the last) and returns the best chain. Ties
/// within 1e-9 go to the shorter chain, then to the lexicographically first
/// pose names.
inline TransitionRecord classify_transition(const FeatureStream& clip, const TransitionLibrary& library,
                                            const KeyframeParams& params, ChainScoring scoring = ChainScoring::keyframes) {
    const KeyframeSet kf = select_keyframes(clip, params);
    require(!kf.static_clip, ErrorCode::NoTransitionDetected, "clip is static: no channel moved past the threshold");
    const FeatureStream pseudo = resample_ordinal(keyframes_to_pseudo_pose_stream(clip, kf), params.k_max);
    const FeatureStream& scored = scoring == ChainScoring::keyframes ? pseudo : clip;

    std::optional<TransitionRecord> best;
    const TransitionChain* best_chain = nullptr;
    for (const TransitionChain& chain : library.chains) {
        const HsmmModel& model = scoring == ChainScoring::keyframes ? chain.keyframe_model : chain.full_rate_model;
        if (scored.size() < chain.length) continue;
        double score = kNegInf;
        try {
            score = hsmm_viterbi(scored, model, {.final_state = chain.length - 1, .keep_trellis = false}).log_prob;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NoFeasiblePath) throw;
            continue;
        }
        bool take = !best || score > best->log_prob + kTieTolerance;
        if (best && !take && std::abs(score - best->log_prob) <= kTieTolerance) {
            take = chain.length != best_chain->length ? chain.length < best_chain->length
                                                      : detail::lexicographically_before(chain.key, best_chain->key);
        }
        if (take) {
            best = TransitionRecord{chain.key.from, chain.key.to, chain.key.direction, score, chain.length};
            best_chain = &chain;
        }
    }
    require(best.has_value(), ErrorCode::NoTransitionDetected, "no library chain can explain the clip");
    return *best;
}

}  // namespace posehsmm
