#include <gtest/gtest.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <set>

#include "pseudosurv/error.hpp"
#include "pseudosurv/random.hpp"
#include "pseudosurv/ssl_engine.hpp"

namespace pseudosurv {
namespace {

SyntheticCohort make_cohort(std::size_t labeled, std::size_t aux, double separation, std::uint64_t seed,
                            std::size_t features = 8, std::size_t noise = 0) {
  SyntheticSpec spec;
  spec.noise_features = noise;
  spec.n_labeled = labeled;
  spec.n_auxiliary = aux;
  spec.n_features = features;
  spec.class_separation = separation;
  return generate_synthetic_cohort(spec, seed);
}

RunConfig knn_config(std::uint64_t seed) {
  RunConfig c;
  c.labeled_path = "<memory>";
  c.hmls = HmlsKind::Knn;
  c.seed = seed;
  return c;
}

FeatureTable empty_like(const FeatureTable& t) {
  FeatureTable e;
  e.feature_names = t.feature_names;
  e.values = Eigen::MatrixXd(0, static_cast<Eigen::Index>(t.cols()));
  return e;
}

TEST(RunConfig, Validation) {
  auto c = knn_config(0);
  EXPECT_NO_THROW(c.validate());
  c.folds = 1;
  EXPECT_THROW(c.validate(), Error);
  c = knn_config(0);
  c.test_fraction = 1.0;
  EXPECT_THROW(c.validate(), Error);
  c = knn_config(0);
  c.strategy = Strategy::SemiSupervised;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingAuxiliary);
  }
  c = knn_config(0);
  c.grid = {SvmParams{}};  // not a member of a knn pipeline
  EXPECT_THROW(c.validate(), Error);
  c.hmls = HmlsKind::Ev;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.grid_for(ClassifierKind::LinearSvm).size(), 1u);
  EXPECT_EQ(c.grid_for(ClassifierKind::Knn), default_grid(ClassifierKind::Knn));
}

TEST(RunConfig, JsonRoundTrip) {
  auto c = knn_config(42);
  c.hmls = HmlsKind::Ev;
  c.grid = {KnnParams{7}, MlpParams{8, 0.1, 50}};
  c.pca = ComponentCount{3};
  c.confidence_threshold = 0.7;
  c.strategy = Strategy::SemiSupervised;
  c.auxiliary_path = "aux.csv";
  const nlohmann::json j = c;
  const auto back = j.get<RunConfig>();
  EXPECT_EQ(nlohmann::json(back), j);
  EXPECT_EQ(settings_hash(back), settings_hash(c));
  c.jobs = 8;  // not part of the echo
  EXPECT_EQ(settings_hash(back), settings_hash(c));
  c.seed = 43;
  EXPECT_NE(settings_hash(back), settings_hash(c));
}

TEST(PseudoLabel, ConstantLabelerKeepsEverything) {
  const auto cohort = make_cohort(1, 30, 2.0, 3, 4);
  const auto scaler = fit_minmax(cohort.auxiliary.values);
  const auto pca = fit_pca(apply_minmax(scaler, cohort.auxiliary.values));
  // a forest fitted on one class-2 row votes class 2 with score 1
  const std::vector<OutcomeLabel> y{OutcomeLabel::Deceased};
  const auto labeler = train_classifier(ForestParams{5, 1, std::nullopt}, Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(pca.n_components())), y, 0);
  for (double threshold : {0.0, 0.5, 0.99, 1.0}) {
    const auto set = pseudo_label(cohort.auxiliary, labeler, scaler, pca, threshold);
    EXPECT_EQ(set.labels.size(), 30u);
    EXPECT_EQ(set.auxiliary_ids.size(), 30u);
    EXPECT_EQ(set.confidences.size(), 30u);
    EXPECT_EQ(set.dropped, 0u);
    for (auto l : set.labels) EXPECT_EQ(l, OutcomeLabel::Deceased);
  }
  const auto none = pseudo_label(empty_like(cohort.auxiliary), labeler, scaler, pca, 0.0);
  EXPECT_TRUE(none.labels.empty());
  EXPECT_FALSE(none.labeler_fingerprint.empty());
}

TEST(PseudoLabel, ThresholdDropsLowConfidenceRows) {
  // 20 trees: 11 always vote 2, 8 vote 2 only for x <= 0, 1 always votes 1
  ForestState forest;
  auto leaf = [](bool positive) { return TreeNode{-1, 0.0, -1, -1, positive}; };
  for (int i = 0; i < 11; ++i) forest.trees.push_back(DecisionTree{{leaf(true)}});
  for (int i = 0; i < 8; ++i) forest.trees.push_back(DecisionTree{{TreeNode{0, 0.0, 1, 2, false}, leaf(true), leaf(false)}});
  forest.trees.push_back(DecisionTree{{leaf(false)}});
  const ClassifierModel labeler(ForestParams{20, 1, std::nullopt}, forest, 1, 0);

  FeatureTable aux;
  aux.sample_ids = {"a", "b"};
  aux.feature_names = {"f"};
  aux.values = Eigen::MatrixXd(2, 1);
  aux.values << -1.0, 1.0;
  const ScalerParams identity{Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1)};
  PcaModel pass;
  pass.mean = Eigen::VectorXd::Zero(1);
  pass.components = Eigen::MatrixXd::Identity(1, 1);
  pass.explained_variance_ratio = Eigen::VectorXd::Ones(1);

  const auto set = pseudo_label(aux, labeler, identity, pass, 0.9);
  ASSERT_EQ(set.auxiliary_ids, std::vector<std::string>{"a"});
  EXPECT_DOUBLE_EQ(set.confidences[0], 0.95);
  EXPECT_EQ(set.dropped, 1u);
  EXPECT_EQ(pseudo_label(aux, labeler, identity, pass, 0.0).labels.size(), 2u);

  FeatureTable wide = aux;
  wide.feature_names = {"f", "g"};
  wide.values = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_THROW(pseudo_label(wide, labeler, identity, pass, 0.0), Error);
}

TEST(Supervised, StructureAndBookkeeping) {
  const auto cohort = make_cohort(120, 0, 2.0, 1);
  const auto r = run_supervised(knn_config(1), cohort.labeled);
  ASSERT_EQ(r.fold_accuracies.size(), 5u);
  EXPECT_NEAR(r.mean_accuracy, mean_of(r.fold_accuracies), 1e-12);
  EXPECT_NEAR(r.std_accuracy, sample_std_of(r.fold_accuracies), 1e-12);
  EXPECT_EQ(r.strategy, Strategy::Supervised);
  EXPECT_EQ(r.hmls_name, "knn");
  EXPECT_GE(r.external_accuracy, 0.0);
  EXPECT_LE(r.external_accuracy, 1.0);
  const nlohmann::json j = r;
  const auto back = j.get<StrategyResult>();
  EXPECT_EQ(back.fold_accuracies, r.fold_accuracies);
  EXPECT_EQ(back.config_hash, r.config_hash);
  EXPECT_EQ(r.partition_hash().size(), 16u);
}

TEST(Supervised, NearSeparableCohortIsEasy) {
  const auto cohort = make_cohort(200, 0, 8.0, 2);
  EXPECT_GE(run_supervised(knn_config(2), cohort.labeled).mean_accuracy, 0.95);
}

TEST(Supervised, PermutedLabelsStayNearChance) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto cohort = make_cohort(200, 0, 3.0, seed);
    Rng rng(derive_seed(seed, {77}));
    rng.shuffle(std::span<OutcomeLabel>(*cohort.labeled.labels));
    const auto r = run_supervised(knn_config(seed), cohort.labeled);
    EXPECT_GE(r.mean_accuracy, 0.35) << seed;
    EXPECT_LE(r.mean_accuracy, 0.65) << seed;
  }
}

TEST(SemiSupervised, EmptyAuxiliaryEqualsSupervised) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto cohort = make_cohort(100, 0, 2.0, seed);
    auto config = knn_config(seed);
    config.hmls = HmlsKind::Ev;
    const auto sl = run_supervised(config, cohort.labeled);
    const auto aux = empty_like(cohort.labeled);
    const auto ssl = run_semi_supervised(config, cohort.labeled, &aux);
    EXPECT_EQ(ssl.fold_accuracies, sl.fold_accuracies);
    EXPECT_EQ(ssl.external_accuracy, sl.external_accuracy);
    EXPECT_EQ(ssl.mean_accuracy, sl.mean_accuracy);
    EXPECT_EQ(ssl.std_accuracy, sl.std_accuracy);
    EXPECT_EQ(ssl.partition_hash(), sl.partition_hash());
  }
  const auto cohort = make_cohort(50, 0, 2.0, 1);
  EXPECT_THROW(run_semi_supervised(knn_config(1), cohort.labeled, nullptr), Error);
}

TEST(SemiSupervised, LeakageAudit) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cohort = make_cohort(80, 60, 2.0, seed);
    auto config = knn_config(seed);
    config.hmls = HmlsKind::Ev;
    config.grid = {KnnParams{3}, MlpParams{4, 0.05, 20}, SvmParams{1.0, 20}};
    RunTrace trace;
    run_semi_supervised(config, cohort.labeled, &cohort.auxiliary, &trace);
    std::set<std::string> external;
    for (auto i : trace.holdout.test_indices) external.insert("L:" + cohort.labeled.sample_ids[i]);
    ASSERT_EQ(trace.phases.size(), 6u);
    const std::set<std::string> stages_seen = [&] {
      std::set<std::string> s;
      for (const auto& st : trace.phases[0].stages) s.insert(st.stage);
      return s;
    }();
    for (const char* required : {"labeler_scaler", "labeler_pca", "labeler", "scaler", "pca", "grid_search"})
      EXPECT_TRUE(stages_seen.count(required)) << required;
    for (std::size_t f = 0; f < trace.phases.size(); ++f) {
      const auto& phase = trace.phases[f];
      const std::set<std::string> eval(phase.evaluation_ids.begin(), phase.evaluation_ids.end());
      std::set<std::string> allowed;
      if (f < trace.folds.k()) {
        for (auto i : trace.folds.training_indices(f)) allowed.insert("L:" + cohort.labeled.sample_ids[i]);
      } else {
        for (auto i : trace.folds.all_indices()) allowed.insert("L:" + cohort.labeled.sample_ids[i]);
      }
      for (const auto& st : phase.stages) {
        EXPECT_FALSE(st.ids.empty()) << phase.phase << " " << st.stage;
        for (const auto& id : st.ids) {
          EXPECT_FALSE(external.count(id)) << phase.phase << " " << st.stage << " " << id;
          EXPECT_FALSE(eval.count(id)) << phase.phase << " " << st.stage << " " << id;
          if (id.rfind("L:", 0) == 0) EXPECT_TRUE(allowed.count(id)) << phase.phase << " " << st.stage << " " << id;
          if (st.stage.rfind("labeler", 0) == 0) EXPECT_EQ(id.rfind("L:", 0), 0u);
        }
      }
    }
  }
}

TEST(SemiSupervised, ResultIndependentOfWorkerCount) {
  const auto cohort = make_cohort(80, 40, 2.0, 4);
  auto config = knn_config(4);
  config.strategy = Strategy::SemiSupervised;
  config.auxiliary_path = "<memory>";
  RunTrace t1, t4;
  const auto a = run_strategy(config, cohort.labeled, &cohort.auxiliary, &t1);
  config.jobs = 4;
  const auto b = run_strategy(config, cohort.labeled, &cohort.auxiliary, &t4);
  EXPECT_EQ(nlohmann::json(a), nlohmann::json(b));
  EXPECT_EQ(nlohmann::json(t1), nlohmann::json(t4));
}

TEST(SemiSupervised, AugmentationHelpsOnSameDistribution) {
  int wins = 0;
  // same pipeline settings as the directional acceptance scenario
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto cohort = make_cohort(200, 400, 2.0, seed, 40, 20);
    auto config = knn_config(seed);
    config.pca = ComponentCount{3};
    config.confidence_threshold = 0.7;
    const auto sl = run_supervised(config, cohort.labeled);
    const auto ssl = run_semi_supervised(config, cohort.labeled, &cohort.auxiliary);
    if (ssl.mean_accuracy >= sl.mean_accuracy) ++wins;
  }
  EXPECT_GE(wins, 8);
}

TEST(SemiSupervised, NoiseAuxiliaryDoesNotWreckAccuracy) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto cohort = make_cohort(200, 0, 2.0, seed);
    FeatureTable noise = empty_like(cohort.labeled);
    Rng rng(derive_seed(seed, {5}));
    noise.values = Eigen::MatrixXd(400, static_cast<Eigen::Index>(cohort.labeled.cols()));
    for (Eigen::Index i = 0; i < noise.values.size(); ++i) noise.values.data()[i] = 3.0 * rng.normal();
    for (int i = 0; i < 400; ++i) noise.sample_ids.push_back("N" + std::to_string(i));
    const auto config = knn_config(seed);
    const auto sl = run_supervised(config, cohort.labeled);
    const auto ssl = run_semi_supervised(config, cohort.labeled, &noise);
    EXPECT_LE(std::abs(ssl.mean_accuracy - sl.mean_accuracy), 0.15) << seed;
  }
}

TEST(CompareStrategies, ConventionsAndGuard) {
  const auto cohort = make_cohort(100, 0, 2.0, 1);
  const auto a = run_supervised(knn_config(1), cohort.labeled);
  const auto same = compare_strategies(a, a);
  EXPECT_EQ(same.p_value, 1.0);
  EXPECT_EQ(*same.degrees_of_freedom, 4.0);
  auto shifted = a;
  for (auto& v : shifted.fold_accuracies) v -= 0.1;
  EXPECT_EQ(compare_strategies(a, shifted).p_value, 0.0);
  const auto other_seed = run_supervised(knn_config(2), cohort.labeled);
  try {
    compare_strategies(a, other_seed);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::FoldMismatch);
  }
  auto fewer = a;
  fewer.fold_accuracies.pop_back();
  EXPECT_THROW(compare_strategies(a, fewer), Error);
}

TEST(Summaries, MeanAndSampleStd) {
  const std::vector<double> v{0.8, 0.9, 0.85, 0.8, 0.9};
  EXPECT_NEAR(mean_of(v), 0.85, 1e-15);
  EXPECT_NEAR(sample_std_of(v), 0.05, 1e-15);
  EXPECT_EQ(sample_std_of(std::vector<double>{0.7}), 0.0);
  EXPECT_THROW(mean_of(std::vector<double>{}), Error);
}

}  // namespace
}  // namespace pseudosurv
