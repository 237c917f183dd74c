#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "posehsmm/core.hpp"

namespace posehsmm {

enum class View : std::uint8_t { left, center, right };
enum class Modality : std::uint8_t { rgb, depth, mask };

struct ChannelId {
    View view = View::center;
    Modality modality = Modality::rgb;

    friend bool operator==(const ChannelId&, const ChannelId&) = default;
    friend auto operator<=>(const ChannelId&, const ChannelId&) = default;
};

inline constexpr std::size_t kMaxChannels = 9;

inline std::string_view view_name(View v) {
    static constexpr std::array<std::string_view, 3> names = {"left", "center", "right"};
    return names[static_cast<std::size_t>(v)];
}

inline std::string_view modality_name(Modality m) {
    static constexpr std::array<std::string_view, 3> names = {"rgb", "depth", "mask"};
    return names[static_cast<std::size_t>(m)];
}

inline std::string channel_name(ChannelId c) {
    return std::string(view_name(c.view)) + "/" + std::string(modality_name(c.modality));
}

inline std::optional<View> parse_view(std::string_view s) {
    for (View v : {View::left, View::center, View::right})
        if (view_name(v) == s) return v;
    return std::nullopt;
}

inline std::optional<Modality> parse_modality(std::string_view s) {
    for (Modality m : {Modality::rgb, Modality::depth, Modality::mask})
        if (modality_name(m) == s) return m;
    return std::nullopt;
}

/// Parses "view/modality".
inline std::optional<ChannelId> parse_channel(std::string_view s) {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto v = parse_view(s.substr(0, slash));
    auto m = parse_modality(s.substr(slash + 1));
    if (!v || !m) return std::nullopt;
    return ChannelId{*v, *m};
}

/// All nine (view, modality) pairs, view-major.
inline std::vector<ChannelId> all_channels() {
    std::vector<ChannelId> out;
    for (View v : {View::left, View::center, View::right})
        for (Modality m : {Modality::rgb, Modality::depth, Modality::mask}) out.push_back({v, m});
    return out;
}

struct ChannelReading {
    ChannelId channel;
    std::vector<double> values;
    bool available = true;
};

/// One tick of multiview multimodal features. Unavailable channels keep a
/// slot (their values are ignored) so every frame of a stream has the same
/// layout.
struct FeatureFrame {
    Tick source_tick = 0;
    std::vector<ChannelReading> readings;

    const ChannelReading* find(ChannelId c) const {
        for (const auto& r : readings)
            if (r.channel == c) return &r;
        return nullptr;
    }

    std::size_t available_count() const {
        std::size_t n = 0;
        for (const auto& r : readings) n += r.available ? 1 : 0;
        return n;
    }
};

/// Ordered frames sharing one channel layout and feature dimension. The
/// position in the stream is the tick (1-based); `source_tick` records where
/// a frame came from when the stream is a subsample of another.
class FeatureStream {
public:
    FeatureStream() = default;

    FeatureStream(std::vector<ChannelId> channels, std::size_t feature_dim)
        : channels_(std::move(channels)), feature_dim_(feature_dim) {
        require(!channels_.empty() && channels_.size() <= kMaxChannels, ErrorCode::InvalidArgument,
                "a stream needs between 1 and 9 channels");
        require(feature_dim_ >= 1, ErrorCode::InvalidArgument, "feature dimension must be >= 1");
        for (std::size_t i = 0; i < channels_.size(); ++i)
            for (std::size_t j = 0; j < i; ++j)
                require(channels_[i] != channels_[j], ErrorCode::InvalidArgument, "duplicate channel");
    }

    /// Appends a frame; readings are reordered to the stream's channel order.
    void push_back(FeatureFrame frame) {
        require(frame.readings.size() == channels_.size(), ErrorCode::DimensionMismatch,
                "frame channel count differs from stream layout");
        FeatureFrame ordered;
        ordered.source_tick = frame.source_tick == 0 ? frames_.size() + 1 : frame.source_tick;
        if (!frames_.empty())
            require(ordered.source_tick > frames_.back().source_tick, ErrorCode::InvalidArgument,
                    "source ticks must be strictly increasing");
        for (ChannelId c : channels_) {
            const ChannelReading* r = frame.find(c);
            require(r != nullptr, ErrorCode::DimensionMismatch, "frame is missing channel " + channel_name(c));
            require(r->values.size() == feature_dim_, ErrorCode::DimensionMismatch,
                    "feature vector length differs from stream feature dimension");
            for (double x : r->values)
                require(x >= 0.0 && x <= 1.0, ErrorCode::InvalidArgument, "feature value outside [0, 1]");
            ordered.readings.push_back(*r);
        }
        frames_.push_back(std::move(ordered));
    }

    std::size_t size() const noexcept { return frames_.size(); }
    bool empty() const noexcept { return frames_.empty(); }
    std::size_t feature_dim() const noexcept { return feature_dim_; }
    std::span<const ChannelId> channels() const noexcept { return channels_; }

    std::optional<std::size_t> channel_slot(ChannelId c) const {
        for (std::size_t i = 0; i < channels_.size(); ++i)
            if (channels_[i] == c) return i;
        return std::nullopt;
    }

    /// 0-based position.
    const FeatureFrame& operator[](std::size_t i) const { return frames_[i]; }
    /// 1-based tick.
    const FeatureFrame& at_tick(Tick t) const {
        require(t >= 1 && t <= frames_.size(), ErrorCode::InvalidArgument, "tick out of range");
        return frames_[t - 1];
    }

    std::span<const FeatureFrame> frames() const noexcept { return frames_; }

    /// Frames [first, first + count) as a new stream; positions restart at 1.
    FeatureStream slice(std::size_t first, std::size_t count) const {
        require(first + count <= frames_.size(), ErrorCode::InvalidArgument, "slice out of range");
        FeatureStream out(channels_, feature_dim_);
        for (std::size_t i = first; i < first + count; ++i) out.frames_.push_back(frames_[i]);
        return out;
    }

private:
    std::vector<ChannelId> channels_;
    std::size_t feature_dim_ = 0;
    std::vector<FeatureFrame> frames_;
};

/// Thresholds every value at 0.5 (inclusive goes to 1).
inline FeatureStream binarize(const FeatureStream& stream, double threshold = 0.5) {
    FeatureStream out({stream.channels().begin(), stream.channels().end()}, stream.feature_dim());
    for (const FeatureFrame& f : stream.frames()) {
        FeatureFrame g = f;
        for (auto& r : g.readings)
            for (double& x : r.values) x = x >= threshold ? 1.0 : 0.0;
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace posehsmm
