#pragma once

// Synthetic multiview multimodal pose sequences with ground truth.
//
// Every pose has a binary prototype per channel: half of the bits encode the
// body orientation (a bank of phase-shifted half-planes, so rotating by an
// angle flips a proportional share of them) and the rest are pose-specific
// shape bits. Prototypes come from `world_seed`, sequences from `seed`, so
// training and test data drawn from different seeds share one world.
//
// Randomness is mt19937_64 with hand-rolled uniform and discrete draws; the
// standard distributions are implementation-defined and would make output
// differ between standard libraries.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "posehsmm/hsmm.hpp"

namespace posehsmm {

struct SceneRegime {
    double noise = 0.0;    // per-bit flip probability
    double dropout = 0.0;  // per-channel, per-tick unavailability probability
};

inline constexpr double kDarkContrast = 0.5;

/// Depth from all three views. Nine channels at high F make the dark scene
/// nearly as easy as the bright one; three small channels keep occlusion
/// costly.
inline std::vector<ChannelId> default_scenario_channels() {
    return {{View::left, Modality::depth}, {View::center, Modality::depth}, {View::right, Modality::depth}};
}

struct ScenarioConfig {
    /// The first `num_poses` of the mock-up ICU label set.
    std::size_t num_poses = kMockIcuPoses.size();
    bool scene_doubling = true;
    std::size_t feature_dim = 5;
    std::vector<ChannelId> channels = default_scenario_channels();
    SceneRegime bright{0.05, 0.0};
    SceneRegime dark{0.15, 0.3};
    Scene start_scene = Scene::BC;
    /// One switch to the other scene at a segment boundary in the middle half.
    bool scene_switch = false;
    /// Per-pose duration mean / stddev; a single entry applies to every pose.
    std::vector<double> duration_means = {30.0};
    std::vector<double> duration_stddevs = {10.0};
    /// Duration truncation; 0 picks ceil(max mean + 4 max stddev).
    Tick max_duration = 0;
    Tick length = 1000;
    std::uint64_t seed = 1;
    std::uint64_t world_seed = 20170101;
    /// Transition clips: hold lengths and tick spacing between ramp anchors.
    Tick hold_min = 4, hold_max = 8;
    Tick step_min = 4, step_max = 6;

    const SceneRegime& regime(Scene s) const { return s == Scene::BC ? bright : dark; }
};

/// Named presets. bc-sim and do-sim differ only in the scene they run in;
/// mixed-sim starts bright and switches once.
inline std::optional<ScenarioConfig> scenario_preset(std::string_view name) {
    ScenarioConfig c;
    if (name == "bc-sim") return c;
    if (name == "do-sim") {
        c.start_scene = Scene::DO;
        return c;
    }
    if (name == "mixed-sim") {
        c.scene_switch = true;
        return c;
    }
    return std::nullopt;
}

inline constexpr std::array<std::string_view, 3> kPresetNames = {"bc-sim", "do-sim", "mixed-sim"};

inline void validate(const ScenarioConfig& c) {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    require(c.num_poses >= 1 && c.num_poses <= kMockIcuPoses.size(), ErrorCode::InvalidArgument,
            "num_poses must be in [1, 11]");
    require(c.feature_dim >= 2, ErrorCode::InvalidArgument, "feature dimension must be >= 2");
    require(!c.channels.empty() && c.channels.size() <= kMaxChannels, ErrorCode::InvalidArgument,
            "between 1 and 9 channels");
    require(prob(c.bright.noise) && prob(c.bright.dropout) && prob(c.dark.noise) && prob(c.dark.dropout),
            ErrorCode::InvalidArgument, "noise and dropout must be probabilities");
    require(c.length >= 1, ErrorCode::InvalidArgument, "length must be >= 1");
    auto sized = [&](const std::vector<double>& v) { return v.size() == 1 || v.size() == c.num_poses; };
    require(sized(c.duration_means) && sized(c.duration_stddevs), ErrorCode::DimensionMismatch,
            "duration parameters need one entry or one per pose");
    for (double s : c.duration_stddevs) require(s > 0.0, ErrorCode::InvalidArgument, "duration stddev must be > 0");
    require(c.hold_min >= 1 && c.hold_min <= c.hold_max && c.step_min >= 1 && c.step_min <= c.step_max,
            ErrorCode::InvalidArgument, "clip timing ranges are empty");
}

/// Planted facts of a transition clip.
struct TransitionTruth {
    Pose from = Pose::solU;
    Pose to = Pose::solD;
    Direction direction = Direction::left;
    /// Ticks where the ramp passes exactly through each pseudo-pose.
    std::vector<Tick> pseudo_pose_ticks;
};

struct GroundTruth {
    Segmentation segmentation;
    std::vector<Scene> scene_track;
    HsmmModel generating_model;
    std::optional<TransitionTruth> transition;
};

struct SimulatedSequence {
    FeatureStream stream;
    GroundTruth truth;
};

namespace sim {

inline std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = mix(seed);
    for (std::uint64_t t : tags) h = mix(h ^ t);
    return h;
}

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t draw_index(std::mt19937_64& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = unit(rng) * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        last = i;
        acc += weights[i];
        if (u < acc) return i;
    }
    return last;
}

inline std::size_t draw_range(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(unit(rng) * static_cast<double>(hi - lo + 1));
}

}  // namespace sim

/// Body orientation in degrees: 0 facing up, 90 lying on the right side,
/// 180 facing down, 270 on the left side.
inline double pose_angle(Pose p) {
    switch (p) {
        case Pose::solU: return 0.0;
        case Pose::falU: return 20.0;
        case Pose::other: return 45.0;
        case Pose::yeaR: return 80.0;
        case Pose::logR: return 90.0;
        case Pose::fetR: return 100.0;
        case Pose::aspiration: return 135.0;
        case Pose::solD: return 180.0;
        case Pose::falD: return 200.0;
        case Pose::yeaL: return 260.0;
        case Pose::logL: return 270.0;
        case Pose::fetL: return 280.0;
    }
    return 0.0;
}

/// Number of pseudo-poses on a rotation arc: one per 60 degrees, 1 to 5.
inline std::size_t pseudo_pose_count(double arc_degrees) {
    return static_cast<std::size_t>(std::clamp<long>(std::lround(arc_degrees / 60.0), 1, 5));
}

/// Rotation arc from one pose to another. Right rotation increases the
/// angle; equal angles mean a full turn.
inline double rotation_arc(Pose from, Pose to, Direction d) {
    const double delta = d == Direction::right ? pose_angle(to) - pose_angle(from) : pose_angle(from) - pose_angle(to);
    const double arc = std::fmod(std::fmod(delta, 360.0) + 360.0, 360.0);
    return arc == 0.0 ? 360.0 : arc;
}

/// Binary prototypes of the simulated world.
class PoseWorld {
public:
    PoseWorld(std::uint64_t world_seed, std::vector<ChannelId> channels, std::size_t feature_dim)
        : seed_(world_seed), channels_(std::move(channels)), f_(feature_dim), orientation_bits_(feature_dim / 2) {
        std::mt19937_64 rng(sim::derive(seed_, {0x0f}));
        for (std::size_t c = 0; c < channels_.size(); ++c) phase_.push_back(sim::unit(rng));
    }

    std::size_t feature_dim() const noexcept { return f_; }
    std::span<const ChannelId> channels() const noexcept { return channels_; }

    /// Prototype at orientation `angle` with shape bits drawn from `shape_tag`.
    std::vector<double> prototype(std::size_t channel_slot, double angle, std::uint64_t shape_tag) const {
        std::vector<double> v(f_);
        const double phase = phase_.at(channel_slot);
        for (std::size_t n = 0; n < orientation_bits_; ++n) {
            const double phi = 360.0 * (static_cast<double>(n) + phase) / static_cast<double>(orientation_bits_);
            v[n] = std::cos((angle - phi) * std::numbers::pi / 180.0) > 0.0 ? 1.0 : 0.0;
        }
        std::mt19937_64 rng(sim::derive(seed_, {0x5a, shape_tag, channel_slot}));
        for (std::size_t n = orientation_bits_; n < f_; ++n) v[n] = sim::unit(rng) < 0.5 ? 0.0 : 1.0;
        return v;
    }

    std::vector<double> pose_prototype(std::size_t channel_slot, Pose p) const {
        return prototype(channel_slot, pose_angle(p), 1 + static_cast<std::uint64_t>(p));
    }

    /// The k-th (1-based) pseudo-pose of a rotation: an intermediate
    /// orientation with its own transitory shape bits.
    std::vector<double> pseudo_pose_prototype(std::size_t channel_slot, Pose from, Pose to, Direction d,
                                              std::size_t k) const {
        const double arc = rotation_arc(from, to, d);
        const std::size_t m = pseudo_pose_count(arc);
        const double sign = d == Direction::right ? 1.0 : -1.0;
        const double angle = pose_angle(from) + sign * arc * static_cast<double>(k) / static_cast<double>(m + 1);
        const std::uint64_t tag = 1000 + 100 * static_cast<std::uint64_t>(from) + 10 * static_cast<std::uint64_t>(to) +
                                  (d == Direction::right ? 5 : 0) + k * 10000;
        return prototype(channel_slot, angle, tag);
    }

private:
    std::uint64_t seed_;
    std::vector<ChannelId> channels_;
    std::size_t f_;
    std::size_t orientation_bits_;
    std::vector<double> phase_;
};

/// Scene contrast, then the flip noise folded in: the probability that an
/// emitted bit is 1 given the prototype bit.
inline double effective_mean(double prototype_bit, Scene scene, const ScenarioConfig& c) {
    const double shrink = scene == Scene::BC ? 1.0 : kDarkContrast;
    const double mu = 0.5 + shrink * (prototype_bit - 0.5);
    const double eps = c.regime(scene).noise;
    return mu * (1.0 - eps) + (1.0 - mu) * eps;
}

inline StateSpace scenario_state_space(const ScenarioConfig& c) {
    return StateSpace::from_poses(std::span<const Pose>(kMockIcuPoses.data(), c.num_poses), c.scene_doubling);
}

/// Duration model of the simulated world, one row per pose.
inline DurationModel scenario_durations(const ScenarioConfig& c) {
    std::vector<double> mu(c.num_poses), sd(c.num_poses);
    double top_mu = 0.0, top_sd = 0.0;
    for (std::size_t i = 0; i < c.num_poses; ++i) {
        mu[i] = c.duration_means.size() == 1 ? c.duration_means[0] : c.duration_means[i];
        sd[i] = c.duration_stddevs.size() == 1 ? c.duration_stddevs[0] : c.duration_stddevs[i];
        top_mu = std::max(top_mu, mu[i]);
        top_sd = std::max(top_sd, sd[i]);
    }
    const Tick max_d = c.max_duration > 0 ? c.max_duration : static_cast<Tick>(std::ceil(top_mu + 4.0 * top_sd));
    return DurationModel::gaussian(mu, sd, std::max<Tick>(max_d, 1));
}

/// Pose-level segment transitions of the simulated world (zero diagonal).
inline TransitionMatrix scenario_transitions(const ScenarioConfig& c) {
    const std::size_t q = c.num_poses;
    Grid<double> a(q, q, 0.0);
    if (q == 1) {
        a(0, 0) = 1.0;
        return TransitionMatrix(std::move(a));
    }
    std::mt19937_64 rng(sim::derive(c.world_seed, {0xa7, q}));
    for (std::size_t i = 0; i < q; ++i) {
        std::vector<double> w(q, 0.0);
        for (std::size_t j = 0; j < q; ++j)
            if (j != i) w[j] = 0.2 + sim::unit(rng);
        w = normalize_exact(std::move(w));
        for (std::size_t j = 0; j < q; ++j) a(i, j) = w[j];
    }
    return TransitionMatrix(std::move(a));
}

/// The HSMM that describes sequences of `c`, over the scenario state space.
/// With scene doubling the pose dynamics are copied into each scene block
/// and the initial mass sits on the start scene; the one-off scene switch is
/// exogenous and not part of the model.
inline HsmmModel scenario_model(const ScenarioConfig& c) {
    validate(c);
    const StateSpace space = scenario_state_space(c);
    const std::size_t q = space.size();
    const std::size_t p = c.num_poses;
    const PoseWorld world(c.world_seed, c.channels, c.feature_dim);
    const DurationModel pose_durations = scenario_durations(c);
    const TransitionMatrix pose_a = scenario_transitions(c);
    const InitialDistribution pose_pi =
        initial_distribution_for(StateSpace::from_poses(std::span<const Pose>(kMockIcuPoses.data(), p), false));

    auto pose_of = [&](StateIndex s) { return s % p; };
    auto scene_of = [&](StateIndex s) { return space[s].scene; };

    HsmmModel m;
    m.states = space;
    std::vector<double> pi(q, 0.0);
    Grid<double> a(q, q, 0.0);
    std::vector<double> mu(q), sd(q);
    for (StateIndex s = 0; s < q; ++s) {
        if (scene_of(s) == c.start_scene || !c.scene_doubling) pi[s] = pose_pi[pose_of(s)];
        for (StateIndex t = 0; t < q; ++t)
            if (scene_of(s) == scene_of(t)) a(s, t) = pose_a(pose_of(s), pose_of(t));
        mu[s] = pose_durations.means()[pose_of(s)];
        sd[s] = pose_durations.stddevs()[pose_of(s)];
    }
    m.initial = {normalize_exact(std::move(pi))};
    m.transitions = TransitionMatrix(std::move(a));
    m.durations = DurationModel::gaussian(mu, sd, pose_durations.max_duration());
    std::vector<ChannelEmissionModel> models;
    for (std::size_t slot = 0; slot < c.channels.size(); ++slot) {
        Grid<double> means(q, c.feature_dim);
        for (StateIndex s = 0; s < q; ++s) {
            const Scene scene = c.scene_doubling ? scene_of(s) : c.start_scene;
            const auto proto = world.pose_prototype(slot, space[s].pose);
            for (std::size_t n = 0; n < c.feature_dim; ++n) means(s, n) = effective_mean(proto[n], scene, c);
        }
        models.emplace_back(c.channels[slot], std::move(means));
    }
    m.emissions = EmissionSet(std::move(models));
    return m;
}

/// Held-pose sequence: poses from the prior then the transition rows,
/// durations from the truncated discretized Gaussians, features drawn per
/// tick and channel from the prototype (contrast-shrunk in DO), flipped with
/// the scene's noise and dropped with its dropout.
inline SimulatedSequence sample_sequence(const ScenarioConfig& c) {
    validate(c);
    const std::size_t p = c.num_poses;
    const StateSpace space = scenario_state_space(c);
    const DurationModel durations = scenario_durations(c);
    const TransitionMatrix pose_a = scenario_transitions(c);
    const InitialDistribution pose_pi =
        initial_distribution_for(StateSpace::from_poses(std::span<const Pose>(kMockIcuPoses.data(), p), false));

    // Schedule: its own stream, so presets that differ only in scene share it.
    std::mt19937_64 schedule(sim::derive(c.seed, {0x5c}));
    std::vector<std::pair<std::size_t, Tick>> runs;  // (pose index, duration)
    Tick total = 0;
    std::size_t pose = sim::draw_index(schedule, pose_pi.probs);
    while (total < c.length) {
        std::vector<double> w(durations.max_duration());
        for (Tick d = 1; d <= w.size(); ++d) w[d - 1] = durations.pmf(pose, d);
        Tick d = sim::draw_index(schedule, w) + 1;
        d = std::min(d, c.length - total);
        runs.emplace_back(pose, d);
        total += d;
        pose = sim::draw_index(schedule, pose_a.probs().row(pose));
    }
    std::size_t switch_run = runs.size();
    if (c.scene_switch && runs.size() >= 2) {
        const std::size_t lo = std::max<std::size_t>(1, runs.size() / 4);
        const std::size_t hi = std::max(lo, (3 * runs.size()) / 4);
        switch_run = std::min(sim::draw_range(schedule, lo, hi), runs.size() - 1);
    }

    const Scene other_scene = c.start_scene == Scene::BC ? Scene::DO : Scene::BC;
    std::vector<StateIndex> labels;
    std::vector<Scene> scenes;
    std::vector<Pose> poses;
    for (std::size_t u = 0; u < runs.size(); ++u) {
        const Scene scene = u < switch_run ? c.start_scene : other_scene;
        const Pose pose_label = kMockIcuPoses[runs[u].first];
        const StateIndex state = c.scene_doubling ? *space.find(pose_label, scene) : runs[u].first;
        for (Tick t = 0; t < runs[u].second; ++t) {
            labels.push_back(state);
            scenes.push_back(scene);
            poses.push_back(pose_label);
        }
    }

    const PoseWorld world(c.world_seed, c.channels, c.feature_dim);
    std::vector<std::vector<std::vector<double>>> protos(p);  // [pose][slot]
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t slot = 0; slot < c.channels.size(); ++slot)
            protos[i].push_back(world.pose_prototype(slot, kMockIcuPoses[i]));

    std::mt19937_64 noise(sim::derive(c.seed, {0xfe}));
    FeatureStream stream(c.channels, c.feature_dim);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        const Scene scene = scenes[t];
        const SceneRegime& regime = c.regime(scene);
        const std::size_t pose_index = static_cast<std::size_t>(
            std::find(kMockIcuPoses.begin(), kMockIcuPoses.end(), poses[t]) - kMockIcuPoses.begin());
        FeatureFrame frame;
        for (std::size_t slot = 0; slot < c.channels.size(); ++slot) {
            ChannelReading r{c.channels[slot], std::vector<double>(c.feature_dim), true};
            const auto& proto = protos[pose_index][slot];
            const double shrink = scene == Scene::BC ? 1.0 : kDarkContrast;
            for (std::size_t n = 0; n < c.feature_dim; ++n) {
                const double mu = 0.5 + shrink * (proto[n] - 0.5);
                double bit = sim::unit(noise) < mu ? 1.0 : 0.0;
                if (sim::unit(noise) < regime.noise) bit = 1.0 - bit;
                r.values[n] = bit;
            }
            r.available = !(sim::unit(noise) < regime.dropout);
            frame.readings.push_back(std::move(r));
        }
        stream.push_back(std::move(frame));
    }

    GroundTruth truth;
    truth.segmentation = encode_segments(labels);
    truth.scene_track = std::move(scenes);
    truth.generating_model = scenario_model(c);
    return {std::move(stream), std::move(truth)};
}

/// One rotation from `from` to `to`: a hold, a piecewise-linear ramp through
/// the planted pseudo-poses, and a hold, all in the config's start scene.
/// Features are the real-valued ramp with the scene's flip noise and dropout.
/// The ground-truth segmentation is over chain positions (from pose,
/// pseudo-poses..., to pose), cut halfway between anchor ticks.
inline SimulatedSequence sample_transition_clip(Pose from, Pose to, Direction direction, const ScenarioConfig& c) {
    validate(c);
    require(from != to, ErrorCode::InvalidArgument, "a transition needs distinct poses");
    const Scene scene = c.start_scene;
    const SceneRegime& regime = c.regime(scene);
    const PoseWorld world(c.world_seed, c.channels, c.feature_dim);
    const std::size_t m = pseudo_pose_count(rotation_arc(from, to, direction));
    const std::size_t chain = m + 2;

    std::mt19937_64 schedule(sim::derive(c.seed, {0xc1, static_cast<std::uint64_t>(from),
                                                  static_cast<std::uint64_t>(to),
                                                  static_cast<std::uint64_t>(direction)}));
    const Tick hold_in = sim::draw_range(schedule, c.hold_min, c.hold_max);
    const Tick hold_out = sim::draw_range(schedule, c.hold_min, c.hold_max);
    std::vector<Tick> anchors = {hold_in};
    for (std::size_t k = 1; k < chain; ++k) anchors.push_back(anchors.back() + sim::draw_range(schedule, c.step_min, c.step_max));
    const Tick n = anchors.back() + hold_out - 1;

    // anchor_means[k][slot]: contrast-adjusted prototype of chain position k.
    const double shrink = scene == Scene::BC ? 1.0 : kDarkContrast;
    std::vector<std::vector<std::vector<double>>> anchor_means(chain);
    for (std::size_t k = 0; k < chain; ++k)
        for (std::size_t slot = 0; slot < c.channels.size(); ++slot) {
            auto v = k == 0           ? world.pose_prototype(slot, from)
                     : k + 1 == chain ? world.pose_prototype(slot, to)
                                      : world.pseudo_pose_prototype(slot, from, to, direction, k);
            for (double& x : v) x = 0.5 + shrink * (x - 0.5);
            anchor_means[k].push_back(std::move(v));
        }

    std::mt19937_64 noise(sim::derive(c.seed, {0xc2, static_cast<std::uint64_t>(from),
                                               static_cast<std::uint64_t>(to),
                                               static_cast<std::uint64_t>(direction)}));
    FeatureStream stream(c.channels, c.feature_dim);
    for (Tick t = 1; t <= n; ++t) {
        // Locate t on the ramp.
        std::size_t k = 0;
        while (k + 1 < chain && anchors[k + 1] <= t) ++k;
        double w = 0.0;
        if (t > anchors[0] && k + 1 < chain)
            w = static_cast<double>(t - anchors[k]) / static_cast<double>(anchors[k + 1] - anchors[k]);
        FeatureFrame frame;
        for (std::size_t slot = 0; slot < c.channels.size(); ++slot) {
            ChannelReading r{c.channels[slot], std::vector<double>(c.feature_dim), true};
            const auto& a = anchor_means[k][slot];
            const auto& b = anchor_means[std::min(k + 1, chain - 1)][slot];
            for (std::size_t f = 0; f < c.feature_dim; ++f) {
                double x = (1.0 - w) * a[f] + w * b[f];
                if (sim::unit(noise) < regime.noise) x = 1.0 - x;
                r.values[f] = x;
            }
            r.available = !(sim::unit(noise) < regime.dropout);
            frame.readings.push_back(std::move(r));
        }
        stream.push_back(std::move(frame));
    }

    // Chain segmentation with cuts halfway between anchors.
    Segmentation seg;
    seg.length = n;
    Tick start = 1;
    for (std::size_t k = 0; k < chain; ++k) {
        const Tick end = k + 1 == chain ? n : (anchors[k] + anchors[k + 1]) / 2;
        seg.segments.push_back({start, end - start + 1, k});
        start = end + 1;
    }

    HsmmModel chain_model;
    chain_model.states = StateSpace::generic(chain);
    std::vector<double> pi(chain, 0.0);
    pi[0] = 1.0;
    chain_model.initial = {pi};
    chain_model.transitions = chain_transitions(chain);
    std::vector<double> mu, sd;
    for (const Segment& s : seg.segments) {
        mu.push_back(static_cast<double>(s.duration));
        sd.push_back(0.5);
    }
    chain_model.durations = DurationModel::gaussian(mu, sd, n);
    std::vector<ChannelEmissionModel> models;
    for (std::size_t slot = 0; slot < c.channels.size(); ++slot) {
        Grid<double> means(chain, c.feature_dim);
        for (std::size_t k = 0; k < chain; ++k)
            for (std::size_t f = 0; f < c.feature_dim; ++f) {
                const double mu_k = anchor_means[k][slot][f];
                means(k, f) = mu_k * (1.0 - regime.noise) + (1.0 - mu_k) * regime.noise;
            }
        models.emplace_back(c.channels[slot], std::move(means));
    }
    chain_model.emissions = EmissionSet(std::move(models));

    GroundTruth truth;
    truth.segmentation = std::move(seg);
    truth.scene_track.assign(n, scene);
    truth.generating_model = std::move(chain_model);
    truth.transition = TransitionTruth{from, to, direction, {anchors.begin() + 1, anchors.end() - 1}};
    return {std::move(stream), std::move(truth)};
}

}  // namespace posehsmm
