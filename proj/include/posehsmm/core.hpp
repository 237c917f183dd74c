#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posehsmm/error.hpp"

namespace posehsmm {

/// Abstract time unit. Ticks are 1-based wherever they name a position in a stream.
using Tick = std::size_t;

/// Dense state index in [0, Q).
using StateIndex = std::size_t;

/// Row-major dense matrix. Small and boring on purpose; every model parameter
/// table in the library is one of these.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const T> values() const noexcept { return data_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

// ---------------------------------------------------------------------------
// Poses and scenes

enum class Pose : std::uint8_t {
    solU, fetR, fetL, logR, solD, yeaL, logL, falD, falU, yeaR, other, aspiration
};

inline constexpr std::size_t kPoseCount = 12;

/// The eleven labels used in the mock-up ICU (ten held poses plus `other`).
inline constexpr std::array<Pose, 11> kMockIcuPoses = {
    Pose::solU, Pose::fetR, Pose::fetL, Pose::logR, Pose::solD, Pose::yeaL,
    Pose::logL, Pose::falD, Pose::falU, Pose::yeaR, Pose::other};

/// The ten held poses that appear in transition sweeps.
inline constexpr std::array<Pose, 10> kHeldPoses = {
    Pose::solU, Pose::fetR, Pose::fetL, Pose::logR, Pose::solD,
    Pose::yeaL, Pose::logL, Pose::falD, Pose::falU, Pose::yeaR};

inline constexpr std::array<Pose, kPoseCount> kAllPoses = {
    Pose::solU, Pose::fetR, Pose::fetL, Pose::logR, Pose::solD, Pose::yeaL,
    Pose::logL, Pose::falD, Pose::falU, Pose::yeaR, Pose::other, Pose::aspiration};

inline std::string_view pose_name(Pose p) {
    static constexpr std::array<std::string_view, kPoseCount> names = {
        "solU", "fetR", "fetL", "logR", "solD", "yeaL",
        "logL", "falD", "falU", "yeaR", "other", "aspiration"};
    return names[static_cast<std::size_t>(p)];
}

/// History-log symbol: sign encodes Up/Right (+) versus Down/Left (-).
inline int pose_symbol(Pose p) {
    static constexpr std::array<int, kPoseCount> symbols = {
        +1, +6, -6, +3, -1, -2, -3, -4, +4, +2, +5, 0};
    return symbols[static_cast<std::size_t>(p)];
}

inline std::optional<Pose> pose_from_symbol(int symbol) {
    for (Pose p : kAllPoses)
        if (pose_symbol(p) == symbol) return p;
    return std::nullopt;
}

inline std::optional<Pose> parse_pose(std::string_view name) {
    for (Pose p : kAllPoses)
        if (pose_name(p) == name) return p;
    return std::nullopt;
}

enum class Scene : std::uint8_t { BC, DO };

inline constexpr std::array<Scene, 2> kScenes = {Scene::BC, Scene::DO};

inline std::string_view scene_name(Scene s) { return s == Scene::BC ? "BC" : "DO"; }

inline std::optional<Scene> parse_scene(std::string_view name) {
    if (name == "BC") return Scene::BC;
    if (name == "DO") return Scene::DO;
    return std::nullopt;
}

/// Rotation direction of a pose transition, as seen by the patient.
enum class Direction : std::uint8_t { left, right };

inline std::string_view direction_name(Direction d) { return d == Direction::left ? "left" : "right"; }

inline std::optional<Direction> parse_direction(std::string_view name) {
    if (name == "left") return Direction::left;
    if (name == "right") return Direction::right;
    return std::nullopt;
}

struct StateId {
    Pose pose = Pose::other;
    Scene scene = Scene::BC;
    StateIndex index = 0;

    friend bool operator==(const StateId&, const StateId&) = default;
};

/// Ordered, dense set of hidden states. With scene doubling every pose
/// appears once per scene, BC block first.
class StateSpace {
public:
    StateSpace() = default;

    explicit StateSpace(std::vector<StateId> states) : states_(std::move(states)) {
        for (std::size_t i = 0; i < states_.size(); ++i) {
            require(states_[i].index == i, ErrorCode::InvalidArgument,
                    "state indices must be dense and ordered");
            for (std::size_t j = 0; j < i; ++j)
                require(!(states_[j].pose == states_[i].pose && states_[j].scene == states_[i].scene),
                        ErrorCode::InvalidArgument, "duplicate (pose, scene) state");
        }
    }

    static StateSpace from_poses(std::span<const Pose> poses, bool scene_doubling) {
        std::vector<StateId> states;
        const std::size_t scenes = scene_doubling ? 2 : 1;
        for (std::size_t s = 0; s < scenes; ++s)
            for (Pose p : poses)
                states.push_back({p, kScenes[s], states.size()});
        return StateSpace(std::move(states));
    }

    static StateSpace mock_icu(bool scene_doubling) {
        return from_poses(kMockIcuPoses, scene_doubling);
    }

    /// Arbitrary Q-state space for models whose states carry no pose meaning.
    static StateSpace generic(std::size_t q) {
        require(q >= 1 && q <= 2 * kPoseCount, ErrorCode::InvalidArgument, "generic state space size");
        std::vector<StateId> states;
        for (std::size_t i = 0; i < q; ++i)
            states.push_back({kAllPoses[i % kPoseCount], i < kPoseCount ? Scene::BC : Scene::DO, i});
        return StateSpace(std::move(states));
    }

    std::size_t size() const noexcept { return states_.size(); }
    const StateId& operator[](StateIndex i) const { return states_[i]; }
    std::span<const StateId> states() const noexcept { return states_; }

    std::optional<StateIndex> find(Pose pose, Scene scene) const {
        for (const auto& s : states_)
            if (s.pose == pose && s.scene == scene) return s.index;
        return std::nullopt;
    }

    bool scene_doubled() const {
        return std::any_of(states_.begin(), states_.end(),
                           [](const StateId& s) { return s.scene == Scene::DO; });
    }

    friend bool operator==(const StateSpace&, const StateSpace&) = default;

private:
    std::vector<StateId> states_;
};

// ---------------------------------------------------------------------------
// Segments

struct Segment {
    Tick start = 1;
    Tick duration = 1;
    StateIndex state = 0;

    Tick end() const noexcept { return start + duration - 1; }

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct Segmentation {
    std::vector<Segment> segments;
    Tick length = 0;

    friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

/// Throws MalformedSegmentation unless the segments tile 1..length with
/// maximal runs.
inline void validate(const Segmentation& seg) {
    require(!seg.segments.empty() && seg.length >= 1, ErrorCode::MalformedSegmentation,
            "segmentation is empty");
    Tick next = 1;
    for (std::size_t u = 0; u < seg.segments.size(); ++u) {
        const Segment& s = seg.segments[u];
        require(s.duration >= 1, ErrorCode::MalformedSegmentation, "segment duration must be >= 1");
        if (s.start != next)
            fail(ErrorCode::MalformedSegmentation,
                 "segment " + std::to_string(u) + " does not start where the previous one ended");
        if (u > 0)
            require(seg.segments[u - 1].state != s.state, ErrorCode::MalformedSegmentation,
                    "adjacent segments share a state");
        next = s.start + s.duration;
    }
    require(next == seg.length + 1, ErrorCode::MalformedSegmentation,
            "segments do not cover the whole sequence");
}

inline Segmentation encode_segments(std::span<const StateIndex> labels) {
    require(!labels.empty(), ErrorCode::EmptySequence, "cannot encode an empty label sequence");
    Segmentation seg;
    seg.length = labels.size();
    std::size_t run_start = 0;
    for (std::size_t t = 1; t <= labels.size(); ++t) {
        if (t == labels.size() || labels[t] != labels[run_start]) {
            seg.segments.push_back({run_start + 1, t - run_start, labels[run_start]});
            run_start = t;
        }
    }
    return seg;
}

inline std::vector<StateIndex> decode_segments(const Segmentation& seg) {
    validate(seg);
    std::vector<StateIndex> labels;
    labels.reserve(seg.length);
    for (const Segment& s : seg.segments) labels.insert(labels.end(), s.duration, s.state);
    return labels;
}

/// Label of each segment in order (the segment-level sequence).
inline std::vector<StateIndex> segment_states(const Segmentation& seg) {
    std::vector<StateIndex> out;
    out.reserve(seg.segments.size());
    for (const Segment& s : seg.segments) out.push_back(s.state);
    return out;
}

}  // namespace posehsmm
