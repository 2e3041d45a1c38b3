// One PASS/FAIL line per acceptance criterion. `--only N` runs a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "oracles.hpp"
#include "pseudosurv/classifiers.hpp"
#include "pseudosurv/dataset.hpp"
#include "pseudosurv/hashing.hpp"
#include "pseudosurv/pca.hpp"
#include "pseudosurv/random.hpp"
#include "pseudosurv/ssl_engine.hpp"
#include "pseudosurv/stats.hpp"
#include "pseudosurv/survival.hpp"
#include "pseudosurv/survival_pipeline.hpp"

namespace fs = std::filesystem;
using namespace pseudosurv;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

SyntheticCohort cohort(std::size_t labeled, std::size_t aux, std::size_t features, std::size_t noise, double separation,
                       std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_labeled = labeled;
  spec.n_auxiliary = aux;
  spec.n_features = features;
  spec.noise_features = noise;
  spec.class_separation = separation;
  return generate_synthetic_cohort(spec, seed);
}

// ---- 1 ------------------------------------------------------------------------

// n_labeled=200, n_auxiliary=400, separation 2, 20 signal + 20 noise features.
// Pipeline settings (KNN, 3 principal components, pseudo-label confidence
// >= 0.7) were chosen on development seeds 101..110, never on 1..10.
Verdict directional_ssl(std::ostream& log) {
  Clock clock;
  Verdict v;
  double total_gain = 0.0;
  int significant = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto c = cohort(200, 400, 40, 20, 2.0, seed);
    RunConfig config;
    config.labeled_path = "<memory>";
    config.hmls = HmlsKind::Knn;
    config.pca = ComponentCount{3};
    config.confidence_threshold = 0.7;
    config.seed = seed;
    const auto sl = run_supervised(config, c.labeled);
    const auto ssl = run_semi_supervised(config, c.labeled, &c.auxiliary);
    const auto t = compare_strategies(ssl, sl);
    const double gain = ssl.mean_accuracy - sl.mean_accuracy;
    total_gain += gain;
    const bool sig = t.p_value < 0.05 && gain > 0;
    significant += sig ? 1 : 0;
    log << fmt("    seed %2d  SL %.4f  SSL %.4f  gain %+.4f  t %+.3f  p %.4f%s\n", static_cast<int>(seed),
               sl.mean_accuracy, ssl.mean_accuracy, gain, t.statistic, t.p_value, sig ? "  *" : "");
  }
  const double mean_gain = total_gain / 10.0;
  const double elapsed = clock.seconds();
  v.pass = mean_gain >= 0.02 && significant >= 7 && elapsed <= 300.0;
  v.detail = fmt("mean gain %.4f (need >= 0.02), p < 0.05 on %d/10 seeds (need >= 7), %.1f s (limit 300)", mean_gain,
                 significant, elapsed);
  return v;
}

// ---- 2 ------------------------------------------------------------------------

Verdict empty_auxiliary(std::ostream& log) {
  Verdict v;
  int runs = 0;
  for (auto hmls : {HmlsKind::Knn, HmlsKind::Mlp, HmlsKind::Svm, HmlsKind::Ev}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto c = cohort(120, 0, 10, 0, 2.0, seed);
      RunConfig config;
      config.labeled_path = "<memory>";
      config.hmls = hmls;
      config.seed = seed;
      FeatureTable empty;
      empty.feature_names = c.labeled.feature_names;
      empty.values = Eigen::MatrixXd(0, static_cast<Eigen::Index>(c.labeled.cols()));
      RunTrace sl_trace, ssl_trace;
      const auto sl = run_supervised(config, c.labeled, &sl_trace);
      const auto ssl = run_semi_supervised(config, c.labeled, &empty, &ssl_trace);
      // strategy and settings hash name the strategy, so they differ by design
      const bool same = sl.fold_accuracies == ssl.fold_accuracies && sl.mean_accuracy == ssl.mean_accuracy &&
                        sl.std_accuracy == ssl.std_accuracy && sl.external_accuracy == ssl.external_accuracy &&
                        sl.partition_hash() == ssl.partition_hash() && sl.seed == ssl.seed &&
                        sl.hmls_name == ssl.hmls_name;
      bool same_models = sl_trace.phases.size() == ssl_trace.phases.size();
      for (std::size_t p = 0; same_models && p < sl_trace.phases.size(); ++p) {
        for (const auto& st : sl_trace.phases[p].stages) {
          const auto& other = ssl_trace.phases[p].stages;
          const auto it = std::find_if(other.begin(), other.end(), [&](const auto& o) { return o.stage == st.stage; });
          if (it == other.end() || it->fingerprint != st.fingerprint) same_models = false;
        }
      }
      ++runs;
      if (!same || !same_models) {
        v.pass = false;
        log << "    mismatch: " << to_string(hmls) << " seed " << seed << '\n';
      }
    }
  }
  v.detail = fmt("%d runs (4 pipelines x 3 seeds) compared on fold, mean, std, external accuracy and model fingerprints",
                 runs);
  return v;
}

// ---- 3 ------------------------------------------------------------------------

Verdict leakage_audit(std::ostream& log) {
  Verdict v;
  std::size_t checked_ids = 0;
  std::set<std::string> stages_seen;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto c = cohort(60, 40, 8, 2, 2.0, seed);
    RunConfig config;
    config.labeled_path = "<memory>";
    config.strategy = Strategy::SemiSupervised;
    config.auxiliary_path = "<memory>";
    config.hmls = HmlsKind::Ev;
    config.seed = seed;
    RunTrace trace;
    run_semi_supervised(config, c.labeled, &c.auxiliary, &trace);
    std::set<std::string> external;
    for (auto i : trace.holdout.test_indices) external.insert("L:" + c.labeled.sample_ids[i]);
    for (std::size_t f = 0; f < trace.phases.size(); ++f) {
      const auto& phase = trace.phases[f];
      std::set<std::string> held_out(phase.evaluation_ids.begin(), phase.evaluation_ids.end());
      for (const auto& st : phase.stages) {
        stages_seen.insert(st.stage.substr(0, st.stage.find(':')));
        for (const auto& id : st.ids) {
          ++checked_ids;
          if (external.count(id) || held_out.count(id)) {
            v.pass = false;
            log << "    seed " << seed << ' ' << phase.phase << ' ' << st.stage << " consumed " << id << '\n';
          }
        }
      }
    }
  }
  for (const char* required : {"labeler_scaler", "labeler_pca", "labeler", "scaler", "pca", "grid_search", "classifier"}) {
    if (!stages_seen.count(required)) {
      v.pass = false;
      log << "    stage never audited: " << required << '\n';
    }
  }
  v.detail = fmt("50 SSL+EV runs, %zu fitting-input ids checked against external and held-out sets", checked_ids);
  return v;
}

// ---- 4 ------------------------------------------------------------------------

Verdict survival_oracles(std::ostream&) {
  Verdict v;
  Rng rng(derive_seed(4, {0}));
  double km_worst = 0.0;
  int c_mismatch = 0;
  double lr_worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<SurvivalRecord> r(n);
    for (auto& rec : r) rec = {1.0 + static_cast<double>(rng.below(5)), rng.bernoulli(0.7)};
    const auto km = kaplan_meier(r);
    const auto ref = oracle::km_product_limit(r);
    if (km.times.size() != ref.size()) {
      km_worst = INFINITY;
      continue;
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (km.times[i] != ref[i].time) km_worst = INFINITY;
      km_worst = std::max(km_worst, std::abs(km.survival[i] - ref[i].survival));
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<SurvivalRecord> r(n);
    std::vector<double> risk(n);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = {1.0 + static_cast<double>(rng.below(15)), rng.bernoulli(0.6)};
      risk[i] = static_cast<double>(rng.below(8)) + (rng.bernoulli(0.5) ? rng.uniform() : 0.0);
    }
    r[0] = {0.5, true};
    if (concordance_index(r, risk) != oracle::c_index_pairs(r, risk)) ++c_mismatch;
  }
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<SurvivalRecord> a(2 + rng.below(20)), b(2 + rng.below(20));
    for (auto& rec : a) rec = {1.0 + static_cast<double>(rng.below(10)), rng.bernoulli(0.7)};
    for (auto& rec : b) rec = {1.0 + static_cast<double>(rng.below(10)), rng.bernoulli(0.7)};
    a[0].event = true;
    const double got = log_rank(a, b).statistic;
    const double want = oracle::log_rank_table(a, b).statistic;
    lr_worst = std::max(lr_worst, std::abs(got - want));
  }
  v.pass = km_worst <= 1e-12 && c_mismatch == 0 && lr_worst <= 1e-9;
  v.detail = fmt("KM max |diff| %.2e (<= 1e-12), C-index mismatches %d/200 (exact), log-rank max |diff| %.2e (<= 1e-9)",
                 km_worst, c_mismatch, lr_worst);
  return v;
}

// ---- 5 ------------------------------------------------------------------------

// One standard-normal covariate with hazard ratio 2 per unit. A binary
// covariate cannot reach C >= 0.65 at this ratio (its ceiling is ~0.58).
Verdict cox_recovery(std::ostream& log) {
  Clock clock;
  const std::size_t n = 2000;
  const double beta = std::numbers::ln2;
  Rng rng(derive_seed(5, {0}));
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  std::vector<double> hazard(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Eigen::Index>(i), 0) = rng.normal();
    hazard[i] = std::exp(beta * x(static_cast<Eigen::Index>(i), 0));
  }
  // exponential censoring clock with expected censored fraction 0.2
  auto censored_fraction = [&](double c) {
    double s = 0.0;
    for (double h : hazard) s += c / (c + h);
    return s / static_cast<double>(n);
  };
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 100; ++it) (censored_fraction(0.5 * (lo + hi)) < 0.2 ? lo : hi) = 0.5 * (lo + hi);
  const double c_rate = 0.5 * (lo + hi);
  std::vector<SurvivalRecord> records(n);
  std::size_t censored = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = rng.exponential(hazard[i]);
    const double c = rng.exponential(c_rate);
    records[i] = {std::min(t, c), t <= c};
    censored += records[i].event ? 0 : 1;
  }
  std::vector<OutcomeLabel> strata(n);
  for (std::size_t i = 0; i < n; ++i) strata[i] = records[i].event ? OutcomeLabel::Deceased : OutcomeLabel::Alive;
  const auto split = stratified_holdout(strata, 0.3, 5);
  std::vector<SurvivalRecord> train, test;
  for (auto i : split.train_indices) train.push_back(records[i]);
  for (auto i : split.test_indices) test.push_back(records[i]);

  const auto full = fit_survival(SurvivalKind::Coxr, x, records, {}, 0);
  const auto& st = std::get<CoxState>(full.state);
  bool ascent = true;
  for (std::size_t i = 1; i < st.log_likelihood_trace.size(); ++i)
    if (st.log_likelihood_trace[i] < st.log_likelihood_trace[i - 1]) ascent = false;
  const auto fitted = fit_survival(SurvivalKind::Coxr, select_rows(x, split.train_indices), train, {}, 0);
  const double c_index = concordance_index(test, predict_risk(fitted, select_rows(x, split.test_indices)));
  const double err = std::abs(st.beta(0) - beta);
  const double elapsed = clock.seconds();
  log << fmt("    censored %.3f, Newton iterations %zu, log-lik %.4f -> %.4f\n",
             static_cast<double>(censored) / static_cast<double>(n), st.iterations, st.log_likelihood_trace.front(),
             st.log_likelihood_trace.back());
  Verdict v;
  v.pass = err < 0.1 && c_index >= 0.65 && ascent && st.converged && elapsed <= 30.0;
  v.detail = fmt("beta %.4f (|err| %.4f < 0.1), held-out C %.4f (>= 0.65), ascent %s, %.2f s (limit 30)", st.beta(0),
                 err, c_index, ascent ? "yes" : "NO", elapsed);
  return v;
}

// ---- 6 ------------------------------------------------------------------------

Verdict survival_analog(std::ostream& log) {
  Verdict v;
  std::string summary;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SyntheticSpec spec;
    spec.n_labeled = 300;
    spec.n_features = 5;
    spec.survival_effect = 2.0;
    spec.censoring_rate = 0.2;
    const auto c = generate_synthetic_cohort(spec, seed);
    for (auto kind : {SurvivalKind::Cwgb, SurvivalKind::Rsf}) {
      SurvivalRunConfig config;
      config.kind = kind;
      config.risk_rule = RiskRule::Median;
      config.seed = seed;
      const auto r = run_survival(config, c.labeled);
      const double p = r.log_rank ? r.log_rank->p_value : 1.0;
      const bool ok = r.mean_c_index >= 0.75 && r.log_rank && p < 0.001;
      v.pass = v.pass && ok;
      log << fmt("    seed %d %-4s mean C %.4f +/- %.4f, external C %.4f, high/low %zu/%zu, log-rank p %.2e%s\n",
                 static_cast<int>(seed), std::string(to_string(kind)).c_str(), r.mean_c_index, r.std_c_index,
                 r.external_c_index, r.n_high, r.n_low, p, ok ? "" : "  <-- fails");
    }
  }
  v.detail = "CWGB and RSF on 3 seeded cohorts (n=300, effect 2, 20% censoring): mean C >= 0.75 and log-rank p < 0.001";
  return v;
}

// ---- 7 ------------------------------------------------------------------------

Verdict pca_correctness(std::ostream&) {
  double ortho = 0.0, oracle_gap = 0.0, recon = 0.0, offdiag = 0.0;
  Rng rng(derive_seed(7, {0}));
  const std::vector<std::pair<int, int>> shapes{{6, 4}, {5, 4}, {20, 8}, {10, 30}, {50, 12}};
  int instances = 0;
  for (const auto& [n, p] : shapes) {
    for (int rep = 0; rep < 10; ++rep, ++instances) {
      Eigen::MatrixXd x(n, p);
      for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i) x(i, j) = rng.normal() * (1.0 + 0.5 * static_cast<double>(j % 5));
      const auto m = fit_pca(x, VarianceThreshold{1.0});
      const auto q = m.components.rows();
      const Eigen::MatrixXd gram = m.components * m.components.transpose();
      ortho = std::max(ortho, (gram - Eigen::MatrixXd::Identity(q, q)).cwiseAbs().maxCoeff());
      recon = std::max(recon, (inverse_transform_pca(m, transform_pca(m, x)) - x).cwiseAbs().maxCoeff());
      const Eigen::MatrixXd z = transform_pca(m, x);
      Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(n - 1);
      const double scale = cov.diagonal().maxCoeff();
      cov.diagonal().setZero();
      offdiag = std::max(offdiag, cov.cwiseAbs().maxCoeff() / scale);
      if (p < n) {  // covariance oracle is well conditioned when every eigenvalue is distinct and nonzero
        const auto ref = oracle::covariance_pca(x);
        for (Eigen::Index k = 0; k < q; ++k)
          oracle_gap = std::max(oracle_gap, (m.components.row(k).transpose() - ref.vectors.col(k)).cwiseAbs().maxCoeff());
      }
    }
  }
  Verdict v;
  v.pass = ortho <= 1e-8 && oracle_gap <= 1e-8 && recon <= 1e-8 && offdiag <= 1e-8;
  v.detail = fmt("%d matrices: orthonormality %.1e, oracle gap %.1e, reconstruction %.1e, score off-diagonal %.1e x max var"
                 " (all <= 1e-8)",
                 instances, ortho, oracle_gap, recon, offdiag);
  return v;
}

// ---- 8 ------------------------------------------------------------------------

Verdict mlp_gradient(std::ostream& log) {
  double worst = 0.0;
  for (std::uint64_t net = 1; net <= 20; ++net) {
    Rng rng(derive_seed(8, {net}));
    const Eigen::Index n = 4 + static_cast<Eigen::Index>(rng.below(8));
    const Eigen::Index inputs = 2 + static_cast<Eigen::Index>(rng.below(5));
    const Eigen::Index hidden = 2 + static_cast<Eigen::Index>(rng.below(6));
    Eigen::MatrixXd x(n, inputs);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    Eigen::VectorXd targets(n);
    for (Eigen::Index i = 0; i < n; ++i) targets(i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const auto w = init_mlp(inputs, hidden, net);
    const Eigen::VectorXd analytic = mlp_loss_gradient(w, x, targets).gradient.flatten();
    const Eigen::VectorXd numeric = oracle::mlp_numeric_gradient(w, x, targets, 1e-5);
    const double rel = (analytic - numeric).norm() / std::max({analytic.norm(), numeric.norm(), 1e-12});
    worst = std::max(worst, rel);
    log << fmt("    net %2d  %dx%d hidden %d  relative error %.2e\n", static_cast<int>(net), static_cast<int>(n),
               static_cast<int>(inputs), static_cast<int>(hidden), rel);
  }
  Verdict v;
  v.pass = worst <= 1e-4;
  v.detail = fmt("worst relative error %.2e over 20 networks (<= 1e-4)", worst);
  return v;
}

// ---- 9 ------------------------------------------------------------------------

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index p, Rng& rng, double shift) {
  Eigen::MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() + shift;
  return m;
}

Verdict hdts_calibration(std::ostream& log) {
  Clock clock;
  int rejections = 0;
  for (std::uint64_t rep = 0; rep < 500; ++rep) {
    Rng rng(derive_seed(9, {0, rep}));
    const auto xa = gaussian(20, 50, rng, 0.0);
    const auto xb = gaussian(20, 50, rng, 0.0);
    HdtsOptions opts;
    opts.permutations = 199;
    opts.seed = rep;
    if (hdts_test(xa, xb, opts).p_value <= 0.05) ++rejections;
  }
  const double null_rate = rejections / 500.0;
  int detected = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    Rng rng(derive_seed(9, {1, rep}));
    const auto xa = gaussian(20, 50, rng, 0.0);
    const auto xb = gaussian(20, 50, rng, 2.0);
    HdtsOptions opts;
    opts.permutations = 199;
    opts.seed = rep;
    if (hdts_test(xa, xb, opts).p_value < 0.01) ++detected;
  }
  const double power = detected / 100.0;
  int exact_mismatch = 0;
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    Rng rng(derive_seed(9, {2, rep}));
    const auto xa = gaussian(2, 1, rng, 0.0);
    const auto xb = gaussian(2, 1, rng, 1.0);
    HdtsOptions opts;
    opts.exhaustive = true;
    if (hdts_test(xa, xb, opts).p_value != oracle::hotelling_exhaustive_p(xa, xb, 0.1)) ++exact_mismatch;
  }
  const double elapsed = clock.seconds();
  log << fmt("    null rejections %d/500, power %d/100 at p < 0.01\n", rejections, detected);
  Verdict v;
  v.pass = null_rate >= 0.02 && null_rate <= 0.08 && power >= 0.9 && exact_mismatch == 0 && elapsed <= 180.0;
  v.detail = fmt("null rate %.3f in [0.02, 0.08], power %.2f >= 0.9 (n=40, p=50), exhaustive mismatches %d/50, %.1f s"
                 " (limit 180)",
                 null_rate, power, exact_mismatch, elapsed);
  return v;
}

// ---- 10 -----------------------------------------------------------------------

std::map<std::string, std::string> hash_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = fnv1a_hex(ss.str());
  }
  return out;
}

Verdict determinism(std::ostream& log) {
  const fs::path root = fs::temp_directory_path() / "pseudosurv_acceptance_10";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path fixtures = PSEUDOSURV_FIXTURE_DIR;
  const std::string labeled = (fixtures / "cohort" / "labeled.csv").string();
  const std::string aux = (fixtures / "cohort" / "auxiliary.csv").string();

  struct Command {
    std::string name;
    std::vector<std::string> args;
    bool jobs;
  };
  const std::vector<Command> commands{
      {"validate", {"validate", "--features", labeled, "--labels", "--survival"}, false},
      {"synth", {"synth", "--n-labeled", "50", "--n-auxiliary", "20", "--survival-effect", "1", "--seed", "4"}, false},
      {"classify-sl", {"classify", "--features", labeled, "--mode", "sl", "--model", "ev", "--seed", "6"}, true},
      {"classify-ssl",
       {"classify", "--features", labeled, "--aux", aux, "--mode", "ssl", "--model", "knn", "--seed", "6", "--svg"},
       true},
      {"survive", {"survive", "--features", labeled, "--model", "rsf", "--risk-rule", "median", "--seed", "6", "--svg"}, true},
      {"hdts", {"hdts", "--features", labeled, "--group-by", "label", "--permutations", "199", "--seed", "6"}, false},
      {"km", {"km", "--features", labeled, "--group-by", "risk", "--risk-rule", "mean", "--svg"}, false},
  };

  Verdict v;
  int compared = 0;
  auto run_into = [&](const Command& c, const std::string& tag, int jobs) {
    auto args = c.args;
    const fs::path out = root / (c.name + "-" + tag);
    args.insert(args.end(), {"--out", out.string()});
    if (c.jobs) args.insert(args.end(), {"--jobs", std::to_string(jobs)});
    std::ostringstream so, se;
    const int code = cli::run(args, so, se);
    if (code != cli::kExitOk) {
      v.pass = false;
      log << "    " << c.name << " exited " << code << ": " << se.str();
    }
    auto hashes = hash_tree(out);
    // stdout names the output directory, so only its shape is compared
    hashes["<exit>"] = std::to_string(code);
    return hashes;
  };
  for (const auto& c : commands) {
    const auto first = run_into(c, "a", 1);
    const auto again = run_into(c, "b", 1);
    const auto wide = run_into(c, "c", 4);
    ++compared;
    if (first != again || first != wide || first.size() < 2) {
      v.pass = false;
      log << "    " << c.name << ": outputs differ or are missing\n";
    } else {
      log << "    " << c.name << ": " << first.size() - 1 << " files identical across reruns"
          << (c.jobs ? " and --jobs 1/4" : "") << '\n';
    }
  }
  // compare reads two reports produced above
  const Command cmp{"compare",
                    {"compare", "--report-a", (root / "classify-sl-a" / "report.json").string(), "--report-b",
                     (root / "classify-sl-c" / "report.json").string()},
                    false};
  const auto ca = run_into(cmp, "a", 1);
  const auto cb = run_into(cmp, "b", 1);
  ++compared;
  if (ca != cb || ca.size() < 2) {
    v.pass = false;
    log << "    compare: outputs differ or are missing\n";
  } else {
    log << "    compare: " << ca.size() - 1 << " files identical across reruns\n";
  }
  fs::remove_all(root);
  v.detail = fmt("%d subcommand invocations hashed file-by-file (FNV-1a)", compared);
  return v;
}

// ---- 11 -----------------------------------------------------------------------

Verdict chance_guard(std::ostream& log) {
  Verdict v;
  double lo = 1.0, hi = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = cohort(600, 0, 10, 0, 3.0, seed);
    Rng shuffle(derive_seed(seed, {11}));
    shuffle.shuffle(std::span<OutcomeLabel>(*c.labeled.labels));
    std::vector<std::pair<std::string, double>> results;
    for (auto hmls : {HmlsKind::Knn, HmlsKind::Mlp, HmlsKind::Svm, HmlsKind::Ev}) {
      RunConfig config;
      config.labeled_path = "<memory>";
      config.hmls = hmls;
      config.seed = seed;
      const auto r = run_supervised(config, c.labeled);
      results.emplace_back(std::string(to_string(hmls)) + " cv", r.mean_accuracy);
      results.emplace_back(std::string(to_string(hmls)) + " external", r.external_accuracy);
    }
    // the random-forest pseudo-labeler on a plain holdout
    const auto split = stratified_holdout(*c.labeled.labels, 0.3, seed);
    std::vector<OutcomeLabel> ytr, yte;
    for (auto i : split.train_indices) ytr.push_back((*c.labeled.labels)[i]);
    for (auto i : split.test_indices) yte.push_back((*c.labeled.labels)[i]);
    const auto forest = train_classifier(ForestParams{}, select_rows(c.labeled.values, split.train_indices), ytr, seed);
    results.emplace_back("rf holdout", accuracy(predict(forest, select_rows(c.labeled.values, split.test_indices)), yte));
    for (const auto& [name, acc] : results) {
      lo = std::min(lo, acc);
      hi = std::max(hi, acc);
      if (acc < 0.35 || acc > 0.65) {
        v.pass = false;
        log << fmt("    seed %d %s accuracy %.4f outside [0.35, 0.65]\n", static_cast<int>(seed), name.c_str(), acc);
      }
    }
  }
  v.detail = fmt("20 seeds x (4 pipelines cv+external, forest holdout), accuracy range [%.4f, %.4f] within [0.35, 0.65]",
                 lo, hi);
  return v;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Verdict(std::ostream&)> check;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "directional SSL superiority", directional_ssl},
      {2, "empty-auxiliary reduction", empty_auxiliary},
      {3, "leakage audit", leakage_audit},
      {4, "survival statistics match oracles", survival_oracles},
      {5, "Cox recovery", cox_recovery},
      {6, "survival C-index analog", survival_analog},
      {7, "PCA correctness", pca_correctness},
      {8, "MLP gradient check", mlp_gradient},
      {9, "HDTS calibration and power", hdts_calibration},
      {10, "CLI determinism", determinism},
      {11, "chance-level guard", chance_guard},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::stoi(argv[++i]);
    } else {
      std::cerr << "usage: pseudosurv_acceptance [--only N]\n";
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(criteria.size())) {
    std::cerr << "no criterion " << only << '\n';
    return 2;
  }
  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Verdict v;
    try {
      v = c.check(std::cout);
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (v.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << v.detail << std::endl;
    failed += v.pass ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
