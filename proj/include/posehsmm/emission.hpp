#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "posehsmm/core.hpp"
#include "posehsmm/stream.hpp"

namespace posehsmm {

inline constexpr double kEmissionEpsilon = 1e-6;

inline double clamp_probability(double p) {
    return std::clamp(p, kEmissionEpsilon, 1.0 - kEmissionEpsilon);
}

/// Bernoulli means of one channel, one row per state. Entries are clamped to
/// [eps, 1 - eps] on construction so no log-likelihood is ever -inf.
class ChannelEmissionModel {
public:
    ChannelEmissionModel() = default;

    ChannelEmissionModel(ChannelId channel, Grid<double> means)
        : channel_(channel), means_(std::move(means)) {
        require(means_.rows() >= 1 && means_.cols() >= 1, ErrorCode::InvalidArgument,
                "emission table must be non-empty");
        log_on_ = Grid<double>(means_.rows(), means_.cols());
        log_off_ = Grid<double>(means_.rows(), means_.cols());
        for (std::size_t i = 0; i < means_.rows(); ++i)
            for (std::size_t n = 0; n < means_.cols(); ++n) {
                require(std::isfinite(means_(i, n)), ErrorCode::InvalidArgument, "emission mean is not finite");
                means_(i, n) = clamp_probability(means_(i, n));
                log_on_(i, n) = std::log(means_(i, n));
                log_off_(i, n) = std::log1p(-means_(i, n));
            }
    }

    ChannelId channel() const noexcept { return channel_; }
    std::size_t states() const noexcept { return means_.rows(); }
    std::size_t feature_dim() const noexcept { return means_.cols(); }
    const Grid<double>& means() const noexcept { return means_; }

    /// sum_n x_n log mu_n + (1 - x_n) log(1 - mu_n)
    double log_likelihood(std::span<const double> x, StateIndex state) const {
        auto on = log_on_.row(state);
        auto off = log_off_.row(state);
        double total = 0.0;
        for (std::size_t n = 0; n < x.size(); ++n) total += x[n] * on[n] + (1.0 - x[n]) * off[n];
        return total;
    }

    friend bool operator==(const ChannelEmissionModel& a, const ChannelEmissionModel& b) {
        return a.channel_ == b.channel_ && a.means_ == b.means_;
    }

private:
    ChannelId channel_;
    Grid<double> means_;
    Grid<double> log_on_;
    Grid<double> log_off_;
};

/// Per-channel emission models of one hidden-state space. Channels are
/// conditionally independent given the state, so fused scores are sums.
class EmissionSet {
public:
    EmissionSet() = default;

    explicit EmissionSet(std::vector<ChannelEmissionModel> models) : models_(std::move(models)) {
        for (std::size_t i = 0; i < models_.size(); ++i) {
            require(models_[i].states() == models_.front().states() &&
                        models_[i].feature_dim() == models_.front().feature_dim(),
                    ErrorCode::DimensionMismatch, "channel emission tables disagree on shape");
            for (std::size_t j = 0; j < i; ++j)
                require(models_[i].channel() != models_[j].channel(), ErrorCode::InvalidArgument,
                        "duplicate channel emission model");
        }
    }

    bool empty() const noexcept { return models_.empty(); }
    std::size_t states() const noexcept { return models_.empty() ? 0 : models_.front().states(); }
    std::size_t feature_dim() const noexcept { return models_.empty() ? 0 : models_.front().feature_dim(); }
    std::span<const ChannelEmissionModel> models() const noexcept { return models_; }

    const ChannelEmissionModel* find(ChannelId c) const {
        for (const auto& m : models_)
            if (m.channel() == c) return &m;
        return nullptr;
    }

    friend bool operator==(const EmissionSet&, const EmissionSet&) = default;

private:
    std::vector<ChannelEmissionModel> models_;
};

/// Maximum-likelihood fit: per-state mean of the channel's features over the frames
/// where the channel is available. States without such frames get 0.5.
inline ChannelEmissionModel fit_channel_emissions(const FeatureStream& stream,
                                                  std::span<const StateIndex> labels,
                                                  ChannelId channel, std::size_t num_states) {
    require(labels.size() == stream.size(), ErrorCode::LabelMismatch,
            "label count differs from stream length");
    const auto slot = stream.channel_slot(channel);
    require(slot.has_value(), ErrorCode::ChannelAbsent, channel_name(channel) + " is not in the stream");
    const std::size_t f = stream.feature_dim();
    Grid<double> sums(num_states, f, 0.0);
    std::vector<std::size_t> counts(num_states, 0);
    for (std::size_t t = 0; t < stream.size(); ++t) {
        const ChannelReading& r = stream[t].readings[*slot];
        if (!r.available) continue;
        require(labels[t] < num_states, ErrorCode::InvalidArgument, "label outside the state space");
        ++counts[labels[t]];
        for (std::size_t n = 0; n < f; ++n) sums(labels[t], n) += r.values[n];
    }
    const bool seen = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    require(seen, ErrorCode::ChannelAbsent, channel_name(channel) + " is never available");
    for (std::size_t i = 0; i < num_states; ++i)
        for (std::size_t n = 0; n < f; ++n)
            sums(i, n) = counts[i] > 0 ? sums(i, n) / static_cast<double>(counts[i]) : 0.5;
    return ChannelEmissionModel(channel, std::move(sums));
}

/// Fits every channel of the stream that is available at least once.
inline EmissionSet fit_emissions(const FeatureStream& stream, std::span<const StateIndex> labels,
                                 std::size_t num_states) {
    std::vector<ChannelEmissionModel> models;
    for (ChannelId c : stream.channels()) {
        bool any = false;
        const auto slot = *stream.channel_slot(c);
        for (const auto& frame : stream.frames()) any = any || frame.readings[slot].available;
        if (any) models.push_back(fit_channel_emissions(stream, labels, c, num_states));
    }
    require(!models.empty(), ErrorCode::ChannelAbsent, "no channel is ever available");
    return EmissionSet(std::move(models));
}

/// Fused log P(x_t | state): sum over available channels; unavailable ones are
/// marginalized by omission.
inline double emission_log_likelihood(const FeatureFrame& frame, StateIndex state,
                                      const EmissionSet& models) {
    double total = 0.0;
    std::size_t used = 0;
    for (const ChannelReading& r : frame.readings) {
        if (!r.available) continue;
        const ChannelEmissionModel* m = models.find(r.channel);
        require(m != nullptr, ErrorCode::DimensionMismatch, "no emission model for " + channel_name(r.channel));
        require(r.values.size() == m->feature_dim(), ErrorCode::DimensionMismatch,
                "feature dimension differs from the emission model");
        require(state < m->states(), ErrorCode::InvalidArgument, "state outside the emission model");
        total += m->log_likelihood(r.values, state);
        ++used;
    }
    require(used > 0, ErrorCode::NoObservation, "frame has no available channel");
    return total;
}

/// T x Q table of fused emission log-likelihoods. Fully occluded frames score
/// F log(1/2) for every state, which leaves decoding well defined.
inline Grid<double> emission_table(const FeatureStream& stream, const EmissionSet& models) {
    const std::size_t q = models.states();
    Grid<double> table(stream.size(), q, 0.0);
    const double occluded = static_cast<double>(stream.feature_dim()) * std::log(0.5);
    for (std::size_t t = 0; t < stream.size(); ++t) {
        const FeatureFrame& frame = stream[t];
        if (frame.available_count() == 0) {
            std::fill(table.row(t).begin(), table.row(t).end(), occluded);
            continue;
        }
        for (StateIndex i = 0; i < q; ++i) table(t, i) = emission_log_likelihood(frame, i, models);
    }
    return table;
}

}  // namespace posehsmm
