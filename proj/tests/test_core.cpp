#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "posehsmm/distributions.hpp"
#include "test_support.hpp"

using namespace posehsmm;

namespace {

std::vector<StateIndex> zero_based(std::initializer_list<int> one_based) {
    std::vector<StateIndex> out;
    for (int v : one_based) out.push_back(static_cast<StateIndex>(v - 1));
    return out;
}

// Independent normalization oracle for the discretized Gaussian.
double gaussian_oracle(double mu, double sd, Tick max_d, Tick d) {
    double total = 0.0;
    for (Tick k = 1; k <= max_d; ++k) total += std::exp(-(k - mu) * (k - mu) / (2 * sd * sd));
    return std::exp(-(d - mu) * (d - mu) / (2 * sd * sd)) / total;
}

}  // namespace

TEST(PoseLabels, SymbolsAreABijection) {
    std::set<int> symbols;
    for (Pose p : kAllPoses) {
        symbols.insert(pose_symbol(p));
        ASSERT_EQ(pose_from_symbol(pose_symbol(p)), p);
        ASSERT_EQ(parse_pose(pose_name(p)), p);
    }
    EXPECT_EQ(symbols.size(), kPoseCount);
    EXPECT_EQ(kMockIcuPoses.size(), 11u);
    EXPECT_EQ(pose_symbol(Pose::aspiration), 0);
    EXPECT_EQ(pose_symbol(Pose::solU), 1);
    EXPECT_EQ(pose_symbol(Pose::solD), -1);
    EXPECT_EQ(pose_symbol(Pose::fetL), -6);
    EXPECT_FALSE(pose_from_symbol(7).has_value());
}

TEST(StateSpace, SceneDoublingDoublesStates) {
    const auto single = StateSpace::mock_icu(false);
    const auto doubled = StateSpace::mock_icu(true);
    EXPECT_EQ(single.size(), 11u);
    EXPECT_EQ(doubled.size(), 22u);
    for (std::size_t i = 0; i < doubled.size(); ++i) EXPECT_EQ(doubled[i].index, i);
    EXPECT_EQ(doubled.find(Pose::fetL, Scene::DO), 13u);
    EXPECT_FALSE(single.find(Pose::fetL, Scene::DO).has_value());
}

TEST(Segments, EncodeWorkedExample) {
    const auto labels = zero_based({1, 1, 1, 2, 2, 1, 2, 2});
    const Segmentation seg = encode_segments(labels);
    const std::vector<Segment> expected = {{1, 3, 0}, {4, 2, 1}, {6, 1, 0}, {7, 2, 1}};
    EXPECT_EQ(seg.segments, expected);
    EXPECT_EQ(seg.length, 8u);
    EXPECT_EQ(decode_segments(seg), labels);
}

TEST(Segments, EncodeTrivialCases) {
    EXPECT_EQ(encode_segments(zero_based({3})).segments, (std::vector<Segment>{{1, 1, 2}}));
    EXPECT_EQ(encode_segments(zero_based({1, 1})).segments, (std::vector<Segment>{{1, 2, 0}}));
    EXPECT_EQ(decode_segments({{{1, 1, 2}}, 1}), zero_based({3}));
}

TEST(Segments, EmptySequenceIsAnError) {
    try {
        encode_segments(std::vector<StateIndex>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptySequence);
    }
}

TEST(Segments, MalformedSegmentationsAreRejected) {
    auto code_of = [](const Segmentation& s) {
        try {
            decode_segments(s);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    // Adjacent equal states.
    EXPECT_EQ(code_of({{{1, 2, 1}, {3, 2, 1}}, 4}), ErrorCode::MalformedSegmentation);
    // Gap between segments.
    EXPECT_EQ(code_of({{{1, 2, 0}, {4, 1, 1}}, 4}), ErrorCode::MalformedSegmentation);
    // Does not start at 1.
    EXPECT_EQ(code_of({{{2, 2, 0}}, 3}), ErrorCode::MalformedSegmentation);
    // Short cover.
    EXPECT_EQ(code_of({{{1, 2, 0}}, 3}), ErrorCode::MalformedSegmentation);
    // Zero duration.
    EXPECT_EQ(code_of({{{1, 0, 0}, {1, 2, 1}}, 2}), ErrorCode::MalformedSegmentation);
}

TEST(Segments, RandomRoundTripKeepsInvariants) {
    testkit::Rng rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<StateIndex> labels(testkit::pick(rng, 1, 40));
        for (auto& l : labels) l = testkit::pick(rng, 0, 3);
        const Segmentation seg = encode_segments(labels);
        EXPECT_NO_THROW(validate(seg));
        Tick covered = 0;
        for (const auto& s : seg.segments) covered += s.duration;
        EXPECT_EQ(covered, labels.size());
        EXPECT_EQ(decode_segments(seg), labels);
    }
}

TEST(GeometricDuration, ClosedForm) {
    EXPECT_DOUBLE_EQ(geometric_duration_pmf(0.5, 1), 0.5);
    EXPECT_DOUBLE_EQ(geometric_duration_pmf(0.5, 3), 0.125);
    EXPECT_DOUBLE_EQ(geometric_duration_pmf(0.0, 1), 1.0);
    EXPECT_DOUBLE_EQ(geometric_duration_pmf(0.0, 2), 0.0);
}

TEST(GeometricDuration, PartialSumsMatchClosedForm) {
    for (double a : {0.1, 0.5, 0.9}) {
        double sum = 0.0;
        for (Tick d = 1; d <= 50; ++d) sum += geometric_duration_pmf(a, d);
        EXPECT_NEAR(sum, 1.0 - std::pow(a, 50), 1e-12) << "a=" << a;
    }
}

TEST(GeometricDuration, DegenerateSelfLoop) {
    try {
        geometric_duration_pmf(1.0, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateSelfLoop);
    }
}

TEST(GaussianDuration, FlatLimit) {
    const auto m = DurationModel::gaussian({2.0}, {1e6}, 4);
    for (Tick d = 1; d <= 4; ++d) EXPECT_NEAR(gaussian_duration_pmf(m, 0, d), 0.25, 1e-6);
}

TEST(GaussianDuration, ModeAtMean) {
    const auto m = DurationModel::gaussian({3.0}, {0.5}, 5);
    Tick best = 1;
    for (Tick d = 2; d <= 5; ++d)
        if (m.pmf(0, d) > m.pmf(0, best)) best = d;
    EXPECT_EQ(best, 3u);
}

TEST(GaussianDuration, MatchesDirectSummationOracle) {
    const auto m = DurationModel::gaussian({2.5}, {1.0}, 6);
    // Oracle value frozen from direct summation of exp(-(d-2.5)^2/2) over d=1..6.
    const double frozen = 0.35867687935632386;
    EXPECT_NEAR(gaussian_oracle(2.5, 1.0, 6, 2), frozen, 1e-15);
    EXPECT_NEAR(m.pmf(0, 2), frozen, 1e-14);
}

TEST(GaussianDuration, OutOfRange) {
    const auto m = DurationModel::gaussian({2.0}, {1.0}, 4);
    for (Tick d : {Tick{0}, Tick{5}}) {
        try {
            m.pmf(0, d);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::DurationOutOfRange);
        }
    }
}

TEST(GaussianDuration, RandomParametersNormalize) {
    testkit::Rng rng(5);
    for (int trial = 0; trial < 1000; ++trial) {
        const Tick max_d = testkit::pick(rng, 1, 200);
        const double mu = testkit::uniform(rng, -20.0, 250.0);
        const double sd = testkit::uniform(rng, 0.3, 60.0);
        const auto m = DurationModel::gaussian({mu}, {sd}, max_d);
        double sum = 0.0;
        for (Tick d = 1; d <= max_d; ++d) sum += m.pmf(0, d);
        ASSERT_NEAR(sum, 1.0, 1e-12) << mu << " " << sd << " " << max_d;
        const Tick probe = testkit::pick(rng, 1, max_d);
        if (std::abs(probe - mu) / sd < 5.0) {
            ASSERT_NEAR(m.pmf(0, probe), gaussian_oracle(mu, sd, max_d, probe), 1e-12);
        }
    }
}

TEST(InitialDistribution, ReferencePriors) {
    EXPECT_DOUBLE_EQ(raw_pose_prior(Pose::solU, Scene::BC), 0.03);
    EXPECT_DOUBLE_EQ(raw_pose_prior(Pose::fetR, Scene::BC), 0.145);
    double raw = 0.0;
    for (Pose p : kMockIcuPoses)
        for (Scene s : kScenes) raw += raw_pose_prior(p, s);
    EXPECT_NEAR(raw, 1.049, 1e-12);
}

TEST(InitialDistribution, RenormalizedSumsToOneExactly) {
    for (bool doubled : {true, false}) {
        const auto pi = build_initial_distribution(doubled);
        EXPECT_EQ(pi.size(), doubled ? 22u : 11u);
        double sum = 0.0;
        for (double p : pi.probs) {
            EXPECT_GE(p, 0.0);
            sum += p;
        }
        EXPECT_EQ(sum, 1.0);
    }
    const auto pi = build_initial_distribution(true);
    EXPECT_NEAR(pi[0], 0.03 / 1.049, 1e-15);
    // Pooled scenes: fetR = (0.145 + 0.07) / 1.049.
    EXPECT_NEAR(build_initial_distribution(false)[1], 0.215 / 1.049, 1e-15);
    // Relative frequencies survive renormalization.
    EXPECT_NEAR(pi[1] / pi[0], 0.145 / 0.03, 1e-12);
}
