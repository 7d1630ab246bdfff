#include "mlpgrad/trainer.hpp"

#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "mlpgrad/gradcheck.hpp"
#include "mlpgrad/io.hpp"
#include "mlpgrad/verify.hpp"

namespace mlpgrad {
namespace {

const char kXor[] = "0,0,0\n0,1,1\n1,0,1\n1,1,0\n";
constexpr std::uint64_t kXorSeed = 27;

TEST(ErrorValueTest, Examples) {
  EXPECT_EQ(error_value(std::vector<double>{1, 2}, std::vector<double>{1, 2}), 0.0);
  EXPECT_EQ(error_value(std::vector<double>{0}, std::vector<double>{1}), 0.5);
  EXPECT_EQ(error_value(std::vector<double>{1, 2}, std::vector<double>{0, 0}), 2.5);
  EXPECT_THROW(error_value(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(TotalErrorTest, Additive) {
  const Topology t = build_topology({2, 3, 1});
  const Activations phi{Activation::tanh, Activation::identity};
  const WeightVector w = init_weights(t, 5);
  Dataset one{2, 1, {}};
  one.add({0.5, 1}, {2});
  const double single = error_value(forward(t, w, one.samples[0].x, phi), one.samples[0].d);
  EXPECT_EQ(total_error(t, w, one, phi), single);

  Dataset two = one;
  two.add({0.5, 1}, {2});
  EXPECT_EQ(total_error(t, w, two, phi), 2 * single);

  Dataset fitted{2, 1, {}};
  for (double a : {-1.0, 0.0, 2.0}) fitted.add({a, 1 - a}, forward(t, w, std::vector<double>{a, 1 - a}, phi).output());
  EXPECT_EQ(total_error(t, w, fitted, phi), 0.0);

  Dataset wrong{3, 1, {}};
  wrong.add({1, 2, 3}, {0});
  EXPECT_THROW(total_error(t, w, wrong, phi), std::invalid_argument);
}

TEST(TotalGradientTest, SumOfSampleGradientsMatchesFiniteDifferences) {
  const Topology t = build_topology({2, 4, 2});
  const Activations phi{Activation::sigmoid, Activation::tanh};
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const WeightVector w = init_weights(t, gen());
    Dataset ds{2, 2, {}};
    for (int k = 0; k < 5; ++k)
      ds.add({uniform(gen, -1, 1), uniform(gen, -1, 1)}, {uniform(gen, -1, 1), uniform(gen, -1, 1)});

    Gradient summed(t.weight_count(), 0.0);
    for (const Sample& s : ds.samples) {
      const Gradient g = bp_reg(t, w, s.x, s.d, phi);
      for (std::size_t k = 0; k < g.size(); ++k) summed[k] += g[k];
    }
    EXPECT_LE(compare_values(total_gradient(t, w, ds, phi), summed, 1e-12).max_relative_error, 1e-12);

    // Central differences of the total error, written out here.
    const double h = 1e-5;
    WeightVector probe = w;
    Gradient fd(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) {
      probe[k] = w[k] + h;
      const double plus = total_error(t, probe, ds, phi);
      probe[k] = w[k] - h;
      const double minus = total_error(t, probe, ds, phi);
      probe[k] = w[k];
      fd[k] = (plus - minus) / (2 * h);
    }
    EXPECT_TRUE(compare_values(summed, fd, 1e-6).passed());
  }
}

TEST(SgdStepTest, Examples) {
  const WeightVector w{1, -2, 3};
  EXPECT_EQ(sgd_step(w, Gradient{0, 0, 0}, 0.1), w);
  EXPECT_EQ(sgd_step(WeightVector{1}, Gradient{2}, 0.5), (WeightVector{0}));
  EXPECT_THROW(sgd_step(w, Gradient{1}, 0.1), std::invalid_argument);
}

TEST(SgdStepTest, ForwardThenBackwardRoundTrip) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    WeightVector w(10);
    Gradient g(10);
    for (auto& v : w) v = uniform(gen, -2, 2);
    for (auto& v : g) v = uniform(gen, -2, 2);
    const double lr = uniform(gen, 1e-4, 1);
    const WeightVector back = sgd_step(sgd_step(w, g, lr), g, -lr);
    // Not exact in general: w - lr*g rounds, adding lr*g back rounds again.
    for (std::size_t k = 0; k < w.size(); ++k) EXPECT_LE(relative_error(back[k], w[k]), 1e-15);
  }
}

TEST(SgdStepTest, SmallStepDoesNotIncreaseSampleError) {
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance inst = random_instance(3, 5, gen());
    const auto& [t, phi, w, x, d, seed] = inst;
    const double before = error_value(forward(t, w, x, phi), d);
    const WeightVector next = sgd_step(w, bp_reg(t, w, x, d, phi), 1e-4);
    EXPECT_LE(error_value(forward(t, next, x, phi), d), before) << describe(inst);
  }
}

TEST(EpochOrderTest, ShuffledPermutation) {
  const auto a = epoch_order(10, 3, 0, true);
  EXPECT_EQ(a, epoch_order(10, 3, 0, true));
  EXPECT_NE(a, epoch_order(10, 3, 1, true));
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, epoch_order(10, 3, 0, false));
}

TEST(TrainTest, RejectsBadInput) {
  const Topology t = build_topology({2, 1});
  EXPECT_THROW(train(t, Dataset{2, 1, {}}, {}, {}), std::invalid_argument);
  Dataset ds{2, 1, {}};
  ds.add({0, 0}, {0});
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(train(t, ds, cfg, {}), std::invalid_argument);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(train(t, ds, cfg, {}), std::invalid_argument);
  EXPECT_THROW(train(build_topology({3, 1}), ds, {}, {}), std::invalid_argument);
}

TEST(TrainTest, AlreadyFittedDataLeavesWeightsUnchanged) {
  const Topology t = build_topology({2, 3, 1});
  const Activations phi{Activation::tanh, Activation::identity};
  TrainConfig cfg{0.1, 5, 77, true};
  const WeightVector w0 = init_weights(t, cfg.seed);
  Dataset ds{2, 1, {}};
  for (double a : {-1.0, 0.25, 1.0}) ds.add({a, 2 * a}, forward(t, w0, std::vector<double>{a, 2 * a}, phi).output());
  const TrainResult r = train(t, ds, cfg, phi);
  EXPECT_EQ(r.weights, w0);
  ASSERT_EQ(r.history.epoch_error.size(), 5u);
  for (double e : r.history.epoch_error) EXPECT_EQ(e, 0.0);
}

// One sample (x, d) and a single affine unit b + w x. Gradient descent from
// (b0, w0) moves along (1, x), so it converges to the projection of (b0, w0)
// onto the line b + w x = d.
TEST(TrainTest, AffineFitConvergesToProjection) {
  const Topology t = build_topology({1, 1});
  const Activations phi{Activation::identity, Activation::identity};
  const double x = 2, d = 3;
  Dataset ds{1, 1, {}};
  ds.add({x}, {d});
  TrainConfig cfg{0.1, 200, 4, false};
  const WeightVector w0 = init_weights(t, cfg.seed);
  const double initial = total_error(t, w0, ds, phi);
  const TrainResult r = train(t, ds, cfg, phi);

  const double residual = d - (w0[0] + w0[1] * x);
  const double step = residual / (1 + x * x);
  EXPECT_NEAR(r.weights[0], w0[0] + step, 1e-12);
  EXPECT_NEAR(r.weights[1], w0[1] + step * x, 1e-12);
  EXPECT_LT(r.history.epoch_error.back(), initial);
  EXPECT_LT(r.history.epoch_error.back(), 1e-20);
}

TEST(TrainTest, XorRegressionWithPinnedSeed) {
  const Topology t = build_topology({2, 2, 1});
  const Activations phi{Activation::tanh, Activation::identity};
  const Dataset ds = load_dataset(kXor, 2, 1);
  const TrainConfig cfg{0.5, 2000, kXorSeed, true};
  const double initial = total_error(t, init_weights(t, cfg.seed), ds, phi);
  EXPECT_GT(initial, 0.1);
  const TrainResult a = train(t, ds, cfg, phi);
  EXPECT_LT(a.history.epoch_error.back(), 0.05);

  const TrainResult b = train(t, ds, cfg, phi);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.history.epoch_error, b.history.epoch_error);
}

}  // namespace
}  // namespace mlpgrad
