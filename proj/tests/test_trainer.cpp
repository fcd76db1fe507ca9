#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>

#include "helpers.hpp"
#include "subrl/envs.hpp"
#include "subrl/errors.hpp"
#include "subrl/optimizer.hpp"
#include "subrl/trainer.hpp"

using namespace subrl;

namespace {

Smdp coverage_grid() { return build_grid({5, 5, 6, 0.0, std::make_pair(2, 2)}); }

RewardPtr coverage_reward() { return WeightedCoverage::on_grid(5, 5, std::vector<double>(25, 1.0), 1); }

std::string curve_without_timing(const LearningCurve& c) {
  std::string out;
  for (const auto& r : c.rows) {
    char line[160];
    std::snprintf(line, sizeof line, "%d %a %a %a\n", r.epoch, r.mean_J, r.std_J, r.mean_entropy);
    out += line;
  }
  return out;
}

}  // namespace

TEST_CASE("SGD step") {
  Sgd sgd;
  std::vector<double> theta{1.0, -2.0};
  const std::vector<double> g{0.5, 4.0};
  sgd.step(theta, g, 0.1);
  CHECK(theta[0] == doctest::Approx(1.05));
  CHECK(theta[1] == doctest::Approx(-1.6));
}

TEST_CASE("Adam first steps move each coordinate by about lr in the gradient direction") {
  Adam adam(3);
  std::vector<double> theta(3, 0.0);
  const std::vector<double> g{2.0, -0.001, 0.0};
  adam.step(theta, g, 0.01);
  const double first = 0.01 * 2.0 / (2.0 + 1e-8);
  CHECK(theta[0] == doctest::Approx(first).epsilon(1e-12));
  CHECK(theta[1] == doctest::Approx(-0.01).epsilon(1e-4));
  CHECK(theta[2] == 0.0);
  // Hand-computed second step with a changed gradient.
  const std::vector<double> g2{1.0, -0.001, 0.0};
  adam.step(theta, g2, 0.01);
  const double m = 0.9 * 0.1 * 2.0 + 0.1 * 1.0, v = 0.999 * 0.001 * 4.0 + 0.001 * 1.0;
  const double mhat = m / (1 - 0.81), vhat = v / (1 - 0.999 * 0.999);
  CHECK(theta[0] == doctest::Approx(first + 0.01 * mhat / (std::sqrt(vhat) + 1e-8)).epsilon(1e-12));
  CHECK(adam.steps() == 2);
  CHECK(optimizer_from_string("adam") == OptimizerKind::adam);
  CHECK_THROWS_AS(optimizer_from_string("rmsprop"), ConfigError);
}

TEST_CASE("zero reward leaves parameters unchanged") {
  const Smdp m = coverage_grid();
  const auto zero = std::make_shared<ModularReward>(std::vector<double>(25, 0.0));
  TabularSoftmaxPolicy pi(25, 5, 6);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.learning_rate = 0.1;
  for (auto opt : {OptimizerKind::sgd, OptimizerKind::adam}) {
    cfg.optimizer = opt;
    train(m, zero, pi, cfg);
    for (double t : pi.params()) CHECK(t == 0.0);
  }
}

TEST_CASE("curve has one row per epoch and reproduces exactly") {
  const Smdp m = build_grid({5, 5, 6, 0.1, std::nullopt});
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.seed = 77;
  cfg.entropy_coef = 0.01;
  MlpPolicy a({ObservationKind::one_hot_state_time, 25, 6, 1}, 8, 8, 5);
  a.initialize(3);
  MlpPolicy b = a;
  const auto ra = train(m, coverage_reward(), a, cfg);
  cfg.execution = Execution::serial;
  const auto rb = train(m, coverage_reward(), b, cfg);
  REQUIRE(ra.curve.rows.size() == 12);
  for (int i = 0; i < 12; ++i) CHECK(ra.curve.rows[static_cast<std::size_t>(i)].epoch == i);
  CHECK(curve_without_timing(ra.curve) == curve_without_timing(rb.curve));
  CHECK(std::vector<double>(a.params().begin(), a.params().end()) ==
        std::vector<double>(b.params().begin(), b.params().end()));
  CHECK(ra.final_eval.mean == rb.final_eval.mean);
  CHECK(ra.curve.to_csv().rfind(LearningCurve::kHeader, 0) == 0);
}

TEST_CASE("epoch-mean J trends upward on 5x5 coverage") {
  const Smdp m = coverage_grid();
  const auto f = coverage_reward();
  int up = 0, windows = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    TabularSoftmaxPolicy pi(25, 5, 6);
    TrainConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 0.01;
    cfg.seed = seed;
    const auto curve = train(m, f, pi, cfg).curve;
    std::vector<double> means;
    for (std::size_t w = 0; w + 20 <= curve.rows.size(); w += 20) {
      double s = 0.0;
      for (std::size_t i = w; i < w + 20; ++i) s += curve.rows[i].mean_J;
      means.push_back(s / 20.0);
    }
    for (std::size_t i = 1; i < means.size(); ++i, ++windows)
      if (means[i] >= means[i - 1]) ++up;
  }
  MESSAGE("nondecreasing windows: " << up << " / " << windows);
  CHECK(up >= 0.9 * windows);
}

TEST_CASE("a non-finite gradient aborts training") {
  const Smdp m = coverage_grid();
  const auto bad = std::make_shared<SetFunctionReward>(25, [](std::span<const StateId> s) {
    return s.size() > 1 ? std::numeric_limits<double>::quiet_NaN() : 1.0;
  });
  TabularSoftmaxPolicy pi(25, 5, 6);
  TrainConfig cfg;
  cfg.epochs = 3;
  CHECK_THROWS_AS(train(m, bad, pi, cfg), NumericalError);
}

TEST_CASE("invalid configurations are rejected") {
  TrainConfig cfg;
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.entropy_coef = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  const Smdp m = coverage_grid();
  TabularSoftmaxPolicy wrong(9, 5, 6);
  CHECK_THROWS_AS(train(m, coverage_reward(), wrong, TrainConfig{}), ConfigError);
  TabularSoftmaxPolicy pi(25, 5, 6);
  CHECK_THROWS_AS(evaluate_policy(m, *coverage_reward(), pi, 0, 1), ConfigError);
}

TEST_CASE("ModPO training logs the submodular objective") {
  const Smdp m = coverage_grid();
  TabularSoftmaxPolicy pi(25, 5, 6);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.estimator = EstimatorKind::modpo;
  const auto res = train(m, coverage_reward(), pi, cfg);
  for (const auto& r : res.curve.rows) {
    CHECK(r.mean_J >= 9.0);  // the start patch alone covers 9 cells
    CHECK(r.mean_J <= 25.0);
  }
}
