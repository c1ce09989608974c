#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "impforecast/dataio.hpp"
#include "impforecast/error.hpp"
#include "impforecast/pipeline.hpp"
#include "test_util.hpp"

using namespace impforecast;

namespace {

HyperParams quick_hyper() {
    HyperParams h;
    h.dfr.trees = 20;
    h.bdtr.trees = 50;
    h.nnr.epochs = 300;
    return h;
}

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

const StudyResult& quick_study() {
    static const StudyResult result = [] {
        StudyConfig config;
        config.seed = 11;
        config.hyper = quick_hyper();
        return run_study(generate_synthetic_cohort(80, 11), config);
    }();
    return result;
}

}  // namespace

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

TEST(Rmse, HandExamples) {
    EXPECT_EQ(rmse(vec({1, 2, 3}), vec({1, 2, 3})), 0.0);
    EXPECT_NEAR(rmse(vec({0, 0}), vec({1, 2})), std::sqrt(2.5), 1e-15);
    EXPECT_NEAR(rmse(vec({0, 0}), vec({1, 2})), 1.58114, 1e-5);
}

TEST(Rmse, SymmetricAndTranslationInvariant) {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector a = testutil::random_vector(gen, 30);
        const Vector b = testutil::random_vector(gen, 30);
        const Vector shift = Vector::Constant(30, 7.25);
        EXPECT_EQ(rmse(a, b), rmse(b, a));
        EXPECT_NEAR(rmse(a + shift, b + shift), rmse(a, b), 1e-12);
        EXPECT_GE(rmse(a, b), 0.0);
    }
}

TEST(Rmse, ErrorPaths) {
    try {
        rmse(vec({1, 2}), vec({1}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
    try {
        rmse(Vector(0), Vector(0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Empty);
    }
}

TEST(ErrorBands, PublishedRowArithmetic) {
    const auto b = bands_from_counts({14, 8, 2, 0});
    EXPECT_EQ(b.n_test, 24u);
    EXPECT_EQ(b.pct[0], 58.33);
    EXPECT_EQ(b.pct[1], 33.33);
    EXPECT_EQ(b.pct[2], 8.33);
    EXPECT_EQ(b.pct[3], 0.0);
    EXPECT_EQ(b.cum_0_2, 91.67);
    EXPECT_EQ(b.cum_0_3, 100.0);
}

TEST(ErrorBands, BinEdgesAreHalfOpen) {
    const auto b = error_bands(vec({0.5, 1.5, 2.5, 0.2}), Vector::Zero(4));
    EXPECT_EQ(b.counts, (std::array<std::size_t, 4>{2, 1, 1, 0}));
    const auto edges = error_bands(vec({1.0, -2.0, 3.0, 0.999}), Vector::Zero(4));
    EXPECT_EQ(edges.counts, (std::array<std::size_t, 4>{1, 1, 1, 1}));
}

TEST(ErrorBands, PercentagesSumToHundredAndCumulateMonotonically) {
    std::mt19937_64 gen(2);
    for (int trial = 0; trial < 500; ++trial) {
        std::array<std::size_t, 4> counts{};
        for (auto& c : counts) c = static_cast<std::size_t>(testutil::random_int(gen, 0, 30));
        if (counts[0] + counts[1] + counts[2] + counts[3] == 0) counts[0] = 1;
        const auto b = bands_from_counts(counts);
        EXPECT_NEAR(b.pct[0] + b.pct[1] + b.pct[2] + b.pct[3], 100.0, 0.03);
        EXPECT_LE(b.pct[0], b.cum_0_2 + 1e-9);
        EXPECT_LE(b.cum_0_2, b.cum_0_3 + 1e-9);
        EXPECT_LE(b.cum_0_3, 100.0);
    }
}

TEST(ErrorBands, Round2) {
    EXPECT_EQ(round2(58.333333), 58.33);
    EXPECT_EQ(round2(91.666666), 91.67);
    EXPECT_EQ(round2(100.0), 100.0);
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

TEST(PickBest, LowestRmseThenKindOrderThenGroup) {
    std::vector<CandidateScore> c{
        {ModelKind::NNR, FeatureGroup::G2, 0.5, ""},
        {ModelKind::BLR, FeatureGroup::G2, 0.5, ""},
        {ModelKind::BLR, FeatureGroup::G1, 0.5, ""},
        {ModelKind::LR, FeatureGroup::G2, 0.7, ""},
    };
    EXPECT_EQ(pick_best(c), 2u);
    c.push_back({ModelKind::DFR, FeatureGroup::G1, 0.1, ""});
    EXPECT_EQ(pick_best(c), 4u);
}

TEST(PickBest, FailedCandidatesAreSkipped) {
    std::vector<CandidateScore> c{
        {ModelKind::LR, FeatureGroup::G1, std::nullopt, "boom"},
        {ModelKind::NNR, FeatureGroup::G2, 3.0, ""},
    };
    EXPECT_EQ(pick_best(c), 1u);
    c.pop_back();
    try {
        pick_best(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AllCandidatesFailed);
    }
}

TEST(Histogram, PublishedWinnersTally) {
    const std::vector<ModelKind> winners{ModelKind::BLR, ModelKind::DFR, ModelKind::LR,  ModelKind::BLR,
                                         ModelKind::BLR, ModelKind::BLR, ModelKind::BLR, ModelKind::BLR,
                                         ModelKind::BLR, ModelKind::NNR, ModelKind::NNR, ModelKind::BDTR};
    const auto h = tally(winners);
    EXPECT_EQ(h.at(ModelKind::BLR), 7);
    EXPECT_EQ(h.at(ModelKind::NNR), 2);
    EXPECT_EQ(h.at(ModelKind::DFR), 1);
    EXPECT_EQ(h.at(ModelKind::BDTR), 1);
    EXPECT_EQ(h.at(ModelKind::LR), 1);
    EXPECT_EQ(tally(std::vector<ModelKind>{}).at(ModelKind::DFR), 0);
}

TEST(TaskSeed, DistinctAcrossTasks) {
    std::set<std::uint64_t> seen;
    for (ChannelId c : ChannelId::all()) {
        for (ModelKind k : kModelKinds) {
            for (FeatureGroup g : kFeatureGroups) seen.insert(task_seed(42, c, k, g));
        }
    }
    EXPECT_EQ(seen.size(), 120u);
    EXPECT_NE(task_seed(42, ChannelId(1), ModelKind::LR, FeatureGroup::G1),
              task_seed(43, ChannelId(1), ModelKind::LR, FeatureGroup::G1));
}

TEST(Candidate, LinearModelReachesNoiseFloor) {
    SyntheticSpec spec = SyntheticSpec::defaults();
    for (auto& rule : spec.channels) rule.noise_sd = 0.1;
    const Cohort cohort = generate_synthetic_cohort(400, 3, spec);
    const auto split = split_cohort(cohort, SplitSpec{});
    const auto r = evaluate_candidate(ModelKind::LR, FeatureGroup::G2, ChannelId(4), split.train, split.test,
                                      HyperParams{}, 0);
    EXPECT_LE(r.rmse, 0.15);
    EXPECT_EQ(r.bands.n_test, split.test.size());
}

// ---------------------------------------------------------------------------
// Study
// ---------------------------------------------------------------------------

TEST(Study, ShapeOfReport) {
    const auto& r = quick_study().report;
    EXPECT_EQ(r.n_train, 56u);
    EXPECT_EQ(r.n_test, 24u);
    ASSERT_EQ(r.entries.size(), 12u);
    int total = 0;
    for (const auto& [kind, n] : r.histogram) total += n;
    EXPECT_EQ(total, 12);
    EXPECT_EQ(r.histogram.size(), 5u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(r.entries[i].channel.index(), static_cast<int>(i) + 1);
        EXPECT_EQ(r.entries[i].candidates.size(), 10u);
        EXPECT_EQ(r.entries[i].bands.n_test, 24u);
    }
    EXPECT_EQ(quick_study().bundle.models.size(), 12u);
}

TEST(Study, SelectedRmseIsMinimumOverCandidates) {
    for (const auto& e : quick_study().report.entries) {
        for (const auto& c : e.candidates) {
            if (c.rmse) EXPECT_LE(e.rmse, *c.rmse);
        }
        const auto winner = std::find_if(e.candidates.begin(), e.candidates.end(), [&](const CandidateScore& c) {
            return c.kind == e.kind && c.group == e.group;
        });
        ASSERT_NE(winner, e.candidates.end());
        EXPECT_EQ(*winner->rmse, e.rmse);
    }
}

TEST(Study, BundleReproducesReportedRmse) {
    const Cohort cohort = generate_synthetic_cohort(80, 11);
    const auto split = split_cohort(cohort, SplitSpec{});
    const auto& result = quick_study();
    for (std::size_t i = 0; i < 12; ++i) {
        const auto& m = result.bundle.models[i].model;
        const Vector p = predict(m.model, feature_matrix(split.test, m.group));
        EXPECT_EQ(rmse(p, label_vector(split.test, m.channel)), result.report.entries[i].rmse);
        EXPECT_EQ(result.bundle.models[i].study_rmse, result.report.entries[i].rmse);
    }
}

TEST(Study, DeterministicAcrossRunsAndThreads) {
    const Cohort cohort = generate_synthetic_cohort(60, 5);
    StudyConfig config;
    config.hyper = quick_hyper();
    const auto a = run_study(cohort, config);
    config.threads = 4;
    const auto b = run_study(cohort, config);
    EXPECT_EQ(a.report, b.report);
    EXPECT_EQ(a.bundle, b.bundle);
}

TEST(Study, InnerValidationModeRuns) {
    const Cohort cohort = generate_synthetic_cohort(60, 6);
    StudyConfig config;
    config.hyper = quick_hyper();
    config.selection = SelectionMode::InnerValidation;
    const auto r = run_study(cohort, config);
    ASSERT_EQ(r.report.entries.size(), 12u);
    for (const auto& e : r.report.entries) {
        EXPECT_TRUE(std::isfinite(e.rmse));
        EXPECT_EQ(e.bands.n_test, 18u);
    }
    EXPECT_EQ(r.report.config.selection, SelectionMode::InnerValidation);
}

TEST(Study, RejectsUnusableCohorts) {
    const Cohort small = generate_synthetic_cohort(9, 1);
    EXPECT_THROW(run_study(small, StudyConfig{}), Error);

    Cohort unlabeled = generate_synthetic_cohort(20, 1);
    unlabeled.records[3].ei_1m.reset();
    try {
        run_study(unlabeled, StudyConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnlabeledCohort);
    }

    Cohort invalid = generate_synthetic_cohort(20, 1);
    invalid.records[0].ei_intra[2] = -1.0;
    try {
        run_study(invalid, StudyConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidCohort);
    }
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

TEST(Predict, OnePatientGivesTwelveChannels) {
    const Cohort cohort = generate_synthetic_cohort(3, 99);
    const auto preds = predict_one(quick_study().bundle, cohort.records[0]);
    ASSERT_EQ(preds.size(), 12u);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(preds[i].channel.index(), static_cast<int>(i) + 1);
        EXPECT_TRUE(std::isfinite(preds[i].kohm));
        EXPECT_EQ(preds[i].study_rmse, quick_study().report.entries[i].rmse);
    }
}

TEST(Predict, HintShowsTwoDecimals) {
    ChannelPrediction p;
    p.study_rmse = 0.872403;
    EXPECT_EQ(p.hint(), "RMSE 0.87 kΩ");
}

TEST(Predict, IncompatibleBundle) {
    ModelBundle bundle = quick_study().bundle;
    bundle.models.front().model.model.input_dim = 5;
    const Cohort cohort = generate_synthetic_cohort(1, 1);
    try {
        predict_one(bundle, cohort.records[0]);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IncompatibleBundle);
    }
    ModelBundle versioned = quick_study().bundle;
    versioned.format_version = 99;
    EXPECT_THROW(predict_one(versioned, cohort.records[0]), Error);
}
