#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "posehsmm/core.hpp"
#include "posehsmm/distributions.hpp"
#include "posehsmm/emission.hpp"

namespace posehsmm {

/// Row-stochastic Q x Q matrix with its element-wise log cached.
class TransitionMatrix {
public:
    TransitionMatrix() = default;

    explicit TransitionMatrix(Grid<double> probs) : probs_(std::move(probs)) {
        require(probs_.rows() >= 1 && probs_.rows() == probs_.cols(), ErrorCode::DimensionMismatch,
                "transition matrix must be square and non-empty");
        logs_ = Grid<double>(probs_.rows(), probs_.cols());
        for (std::size_t i = 0; i < probs_.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < probs_.cols(); ++j) {
                const double a = probs_(i, j);
                require(a >= 0.0 && a <= 1.0, ErrorCode::InvalidArgument, "transition probability outside [0, 1]");
                sum += a;
                logs_(i, j) = std::log(a);
            }
            require(std::abs(sum - 1.0) <= 1e-12, ErrorCode::InvalidArgument,
                    "transition row " + std::to_string(i) + " does not sum to 1");
        }
    }

    std::size_t size() const noexcept { return probs_.rows(); }
    double operator()(StateIndex i, StateIndex j) const { return probs_(i, j); }
    double log(StateIndex i, StateIndex j) const { return logs_(i, j); }
    const Grid<double>& probs() const noexcept { return probs_; }

    bool has_zero_diagonal() const {
        for (std::size_t i = 0; i < size(); ++i)
            if (probs_(i, i) != 0.0) return false;
        return true;
    }

    friend bool operator==(const TransitionMatrix& a, const TransitionMatrix& b) {
        return a.probs_ == b.probs_;
    }

private:
    Grid<double> probs_;
    Grid<double> logs_;
};

/// Strict left-to-right chain: state i moves to i + 1. The last row points
/// back to state 0 only to stay stochastic; chain decoding pins the final
/// state, so it is never taken.
inline TransitionMatrix chain_transitions(std::size_t length) {
    require(length >= 1, ErrorCode::InvalidArgument, "chain needs at least one state");
    Grid<double> a(length, length, 0.0);
    for (std::size_t i = 0; i + 1 < length; ++i) a(i, i + 1) = 1.0;
    a(length - 1, 0) = 1.0;
    return TransitionMatrix(std::move(a));
}

enum class TransitionKind {
    /// Frame-level counts; the diagonal holds self-loops.
    hmm,
    /// Counts over the segment-level label sequence; the diagonal is
    /// structurally zero and dwell time lives in the duration model.
    hsmm,
};

/// Accumulates transition pair counts over one or more label sequences.
class TransitionCounter {
public:
    TransitionCounter(std::size_t num_states, TransitionKind kind)
        : kind_(kind), counts_(num_states, num_states, 0.0) {}

    void add(std::span<const StateIndex> labels) {
        for (StateIndex s : labels)
            require(s < counts_.rows(), ErrorCode::InvalidArgument, "label outside the state space");
        if (labels.empty()) return;
        if (kind_ == TransitionKind::hmm) {
            for (std::size_t t = 1; t < labels.size(); ++t) counts_(labels[t - 1], labels[t]) += 1.0;
        } else {
            const auto runs = segment_states(encode_segments(labels));
            for (std::size_t u = 1; u < runs.size(); ++u) counts_(runs[u - 1], runs[u]) += 1.0;
        }
    }

    /// a_ij = count(i -> j) / count(i -> .); empty rows become uniform (over
    /// the off-diagonal for the segment-level kind).
    TransitionMatrix finish() const {
        const std::size_t q = counts_.rows();
        Grid<double> a(q, q, 0.0);
        for (std::size_t i = 0; i < q; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < q; ++j) total += counts_(i, j);
            if (total > 0.0) {
                for (std::size_t j = 0; j < q; ++j) a(i, j) = counts_(i, j) / total;
            } else if (kind_ == TransitionKind::hsmm && q > 1) {
                for (std::size_t j = 0; j < q; ++j) a(i, j) = i == j ? 0.0 : 1.0 / static_cast<double>(q - 1);
            } else {
                // A one-state segment model keeps the lone row stochastic; the
                // segment decoder never takes self transitions anyway.
                for (std::size_t j = 0; j < q; ++j) a(i, j) = 1.0 / static_cast<double>(q);
            }
            auto row = a.row(i);
            const auto normalized = normalize_exact({row.begin(), row.end()});
            std::copy(normalized.begin(), normalized.end(), row.begin());
        }
        return TransitionMatrix(std::move(a));
    }

private:
    TransitionKind kind_;
    Grid<double> counts_;
};

inline TransitionMatrix fit_transitions(std::span<const StateIndex> labels, std::size_t num_states,
                                        TransitionKind kind = TransitionKind::hmm) {
    TransitionCounter counter(num_states, kind);
    counter.add(labels);
    return counter.finish();
}

// ---------------------------------------------------------------------------
// Baseline HMM

struct HmmModel {
    InitialDistribution initial;
    TransitionMatrix transitions;
    EmissionSet emissions;

    std::size_t num_states() const noexcept { return initial.size(); }

    void validate() const {
        require(initial.size() >= 1 && transitions.size() == initial.size() &&
                    emissions.states() == initial.size(),
                ErrorCode::DimensionMismatch, "HMM parameter dimensions disagree");
    }
};

/// log pi(y_1) + sum_t log P(x_t | y_t) + sum_{t>=2} log a(y_{t-1}, y_t).
inline double hmm_joint_log_prob(std::span<const StateIndex> labels, const FeatureStream& stream,
                                 const HmmModel& model) {
    model.validate();
    require(!labels.empty(), ErrorCode::EmptySequence, "no labels");
    require(labels.size() == stream.size(), ErrorCode::LabelMismatch, "label count differs from stream length");
    const Grid<double> emit = emission_table(stream, model.emissions);
    double total = std::log(model.initial[labels[0]]);
    for (std::size_t t = 0; t < labels.size(); ++t) {
        require(labels[t] < model.num_states(), ErrorCode::InvalidArgument, "label outside the state space");
        total += emit(t, labels[t]);
        if (t > 0) total += model.transitions.log(labels[t - 1], labels[t]);
    }
    return total;
}

struct HmmDecodeResult {
    std::vector<StateIndex> labels;
    double log_prob = kNegInf;
};

/// Frame-level Viterbi. Ties go to the lowest state index.
inline HmmDecodeResult hmm_viterbi(const FeatureStream& stream, const HmmModel& model) {
    model.validate();
    require(!stream.empty(), ErrorCode::EmptySequence, "cannot decode an empty stream");
    const std::size_t q = model.num_states();
    const std::size_t n = stream.size();
    const Grid<double> emit = emission_table(stream, model.emissions);

    Grid<double> score(n, q, kNegInf);
    Grid<std::size_t> back(n, q, 0);
    for (StateIndex j = 0; j < q; ++j) score(0, j) = std::log(model.initial[j]) + emit(0, j);
    for (std::size_t t = 1; t < n; ++t)
        for (StateIndex j = 0; j < q; ++j) {
            double best = kNegInf;
            std::size_t arg = 0;
            for (StateIndex i = 0; i < q; ++i) {
                const double cand = score(t - 1, i) + model.transitions.log(i, j);
                if (cand > best) {
                    best = cand;
                    arg = i;
                }
            }
            score(t, j) = best + emit(t, j);
            back(t, j) = arg;
        }

    HmmDecodeResult result;
    StateIndex last = 0;
    for (StateIndex j = 0; j < q; ++j)
        if (score(n - 1, j) > result.log_prob) {
            result.log_prob = score(n - 1, j);
            last = j;
        }
    require(std::isfinite(result.log_prob), ErrorCode::NoFeasiblePath, "every HMM path has zero probability");
    result.labels.assign(n, 0);
    result.labels[n - 1] = last;
    for (std::size_t t = n - 1; t > 0; --t) result.labels[t - 1] = back(t, result.labels[t]);
    return result;
}

}  // namespace posehsmm
