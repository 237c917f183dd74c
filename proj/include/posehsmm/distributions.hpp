#pragma once

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "posehsmm/core.hpp"

namespace posehsmm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Stay-duration pmf implied by an HMM self-loop: a^(d-1) * (1 - a).
inline double geometric_duration_pmf(double self_loop, Tick d) {
    require(self_loop >= 0.0 && self_loop <= 1.0, ErrorCode::InvalidArgument,
            "self-transition probability outside [0, 1]");
    require(self_loop < 1.0, ErrorCode::DegenerateSelfLoop,
            "a self-loop probability of 1 never leaves the state");
    require(d >= 1, ErrorCode::DurationOutOfRange, "duration must be >= 1");
    return std::pow(self_loop, static_cast<double>(d - 1)) * (1.0 - self_loop);
}

/// Per-state duration distribution over d in [1, max_duration].
///
/// The Gaussian form evaluates exp(-(d-mean)^2 / 2 sd^2) on integer ticks and
/// renormalizes over the support, so every row sums to one. The table form
/// stores an arbitrary pmf as given (rows need not sum to one, which is what
/// an untruncated geometric restricted to [1, D] looks like).
class DurationModel {
public:
    enum class Kind { gaussian, table };

    DurationModel() = default;

    static DurationModel gaussian(std::vector<double> means, std::vector<double> stddevs,
                                  Tick max_duration) {
        require(means.size() == stddevs.size() && !means.empty(), ErrorCode::DimensionMismatch,
                "duration means and stddevs must have one entry per state");
        require(max_duration >= 1, ErrorCode::InvalidArgument, "max duration must be >= 1");
        DurationModel m;
        m.kind_ = Kind::gaussian;
        m.means_ = std::move(means);
        m.stddevs_ = std::move(stddevs);
        m.log_pmf_ = Grid<double>(m.means_.size(), max_duration, kNegInf);
        for (std::size_t i = 0; i < m.means_.size(); ++i) {
            const double mu = m.means_[i];
            const double sd = m.stddevs_[i];
            require(std::isfinite(mu), ErrorCode::InvalidArgument, "duration mean must be finite");
            require(sd > 0.0 && std::isfinite(sd), ErrorCode::InvalidArgument,
                    "duration stddev must be positive");
            auto row = m.log_pmf_.row(i);
            double peak = kNegInf;
            for (Tick d = 1; d <= max_duration; ++d) {
                const double z = (static_cast<double>(d) - mu) / sd;
                row[d - 1] = -0.5 * z * z;
                peak = std::max(peak, row[d - 1]);
            }
            require(std::isfinite(peak), ErrorCode::InvalidArgument,
                    "duration Gaussian puts no mass on any integer tick");
            double total = 0.0;
            for (double w : row) total += std::exp(w - peak);
            const double log_norm = peak + std::log(total);
            for (double& w : row) w -= log_norm;
        }
        return m;
    }

    static DurationModel from_pmf(const Grid<double>& pmf) {
        require(pmf.rows() >= 1 && pmf.cols() >= 1, ErrorCode::InvalidArgument, "empty duration table");
        DurationModel m;
        m.kind_ = Kind::table;
        m.log_pmf_ = Grid<double>(pmf.rows(), pmf.cols(), kNegInf);
        for (std::size_t i = 0; i < pmf.rows(); ++i)
            for (std::size_t d = 0; d < pmf.cols(); ++d) {
                const double p = pmf(i, d);
                require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArgument, "duration pmf entry outside [0, 1]");
                m.log_pmf_(i, d) = std::log(p);
            }
        return m;
    }

    /// Table form from log probabilities; loading a saved table this way
    /// avoids an exp/log round trip.
    static DurationModel from_log_pmf(Grid<double> log_pmf) {
        require(log_pmf.rows() >= 1 && log_pmf.cols() >= 1, ErrorCode::InvalidArgument, "empty duration table");
        for (std::size_t i = 0; i < log_pmf.rows(); ++i)
            for (double w : log_pmf.row(i))
                require(w <= 0.0 && !std::isnan(w), ErrorCode::InvalidArgument, "duration log pmf entry above 0");
        DurationModel m;
        m.kind_ = Kind::table;
        m.log_pmf_ = std::move(log_pmf);
        return m;
    }

    Kind kind() const noexcept { return kind_; }
    std::size_t states() const noexcept { return log_pmf_.rows(); }
    Tick max_duration() const noexcept { return log_pmf_.cols(); }

    double log_pmf(StateIndex state, Tick d) const {
        require(state < states(), ErrorCode::DimensionMismatch, "duration state out of range");
        if (d < 1 || d > max_duration())
            fail(ErrorCode::DurationOutOfRange,
                 "duration " + std::to_string(d) + " outside [1, " + std::to_string(max_duration()) + "]");
        return log_pmf_(state, d - 1);
    }

    double pmf(StateIndex state, Tick d) const { return std::exp(log_pmf(state, d)); }

    /// Unchecked row access for inner loops; index d-1.
    std::span<const double> log_pmf_row(StateIndex state) const { return log_pmf_.row(state); }

    // Parameters of the Gaussian form; empty for tables.
    const std::vector<double>& means() const noexcept { return means_; }
    const std::vector<double>& stddevs() const noexcept { return stddevs_; }

    double expected_duration(StateIndex state) const {
        double mean = 0.0;
        for (Tick d = 1; d <= max_duration(); ++d) mean += static_cast<double>(d) * pmf(state, d);
        return mean;
    }

    friend bool operator==(const DurationModel&, const DurationModel&) = default;

private:
    Kind kind_ = Kind::gaussian;
    std::vector<double> means_;
    std::vector<double> stddevs_;
    Grid<double> log_pmf_;
};

inline double gaussian_duration_pmf(const DurationModel& model, StateIndex state, Tick d) {
    return model.pmf(state, d);
}

// ---------------------------------------------------------------------------
// Initial state distribution

struct InitialDistribution {
    std::vector<double> probs;

    std::size_t size() const noexcept { return probs.size(); }
    double operator[](StateIndex i) const { return probs[i]; }

    friend bool operator==(const InitialDistribution&, const InitialDistribution&) = default;
};

/// Reference pose priors per scene before renormalization. The BC and DO
/// columns together sum to 1.049. `aspiration` only occurs in the real ICU and
/// has no reference prior.
inline double raw_pose_prior(Pose pose, Scene scene) {
    struct Row { double bc, dark; };
    static constexpr std::array<Row, kPoseCount> table = {{
        {0.03, 0.02},    // solU
        {0.145, 0.07},   // fetR
        {0.145, 0.07},   // fetL
        {0.05, 0.03},    // logR
        {0.02, 0.01},    // solD
        {0.04, 0.02},    // yeaL
        {0.05, 0.03},    // logL
        {0.05, 0.02},    // falD
        {0.05, 0.03},    // falU
        {0.04, 0.02},    // yeaR
        {0.036, 0.073},  // other
        {0.0, 0.0},      // aspiration
    }};
    const Row& r = table[static_cast<std::size_t>(pose)];
    return scene == Scene::BC ? r.bc : r.dark;
}

/// Divides by the total and then nudges the largest entry so the values sum
/// to exactly 1.0 when accumulated in index order.
inline std::vector<double> normalize_exact(std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    require(total > 0.0, ErrorCode::InvalidArgument, "cannot normalize an all-zero weight vector");
    for (double& w : weights) w /= total;
    const auto largest = std::max_element(weights.begin(), weights.end()) - weights.begin();
    for (int pass = 0; pass < 4; ++pass) {
        const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
        if (sum == 1.0) break;
        weights[largest] += 1.0 - sum;
    }
    return weights;
}

/// Priors for an arbitrary state space. Without scene doubling the BC and DO
/// priors of a pose are pooled. Falls back to uniform when no state has a
/// reference prior.
inline InitialDistribution initial_distribution_for(const StateSpace& space) {
    std::vector<double> raw;
    const bool doubled = space.scene_doubled();
    for (const StateId& s : space.states())
        raw.push_back(doubled ? raw_pose_prior(s.pose, s.scene)
                              : raw_pose_prior(s.pose, Scene::BC) + raw_pose_prior(s.pose, Scene::DO));
    if (std::accumulate(raw.begin(), raw.end(), 0.0) <= 0.0) std::fill(raw.begin(), raw.end(), 1.0);
    return {normalize_exact(std::move(raw))};
}

inline InitialDistribution build_initial_distribution(bool scene_doubling) {
    return initial_distribution_for(StateSpace::mock_icu(scene_doubling));
}

inline InitialDistribution uniform_initial_distribution(std::size_t q) {
    return {normalize_exact(std::vector<double>(q, 1.0))};
}

}  // namespace posehsmm
