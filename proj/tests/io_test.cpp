#include "mlpgrad/io.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "gtest/gtest.h"

namespace mlpgrad {
namespace {

std::string error_of(auto&& fn) {
  try {
    fn();
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

TEST(FormatTest, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.5), "2.5");
  EXPECT_EQ(format_double(-0.0), "-0");
  std::mt19937_64 gen(1);
  for (int k = 0; k < 2000; ++k) {
    const double v = std::bit_cast<double>(gen());
    if (!std::isfinite(v)) continue;
    double back = 0;
    ASSERT_TRUE(parse_double(format_double(v), back));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back), std::bit_cast<std::uint64_t>(v));
  }
}

TEST(ParseTest, StrictNumbers) {
  double v = 0;
  EXPECT_TRUE(parse_double(" 1.5 ", v));
  EXPECT_EQ(v, 1.5);
  EXPECT_TRUE(parse_double("+2", v));
  EXPECT_EQ(v, 2);
  EXPECT_FALSE(parse_double("1.5x", v));
  EXPECT_FALSE(parse_double("", v));
  EXPECT_FALSE(parse_double("abc", v));
  EXPECT_EQ(parse_number_list("1, -2,3e1"), (std::vector<double>{1, -2, 30}));
  EXPECT_THROW(parse_number_list("1,,2"), FormatError);
}

TEST(DatasetTest, LoadsXor) {
  const Dataset ds = load_dataset("0,0,0\n0,1,1\n1,0,1\n1,1,0", 2, 1);
  ASSERT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.samples[1].x, (std::vector<double>{0, 1}));
  EXPECT_EQ(ds.samples[1].d, (std::vector<double>{1}));
  EXPECT_EQ(ds.samples[3].x, (std::vector<double>{1, 1}));
  EXPECT_EQ(ds.samples[3].d, (std::vector<double>{0}));
}

TEST(DatasetTest, EmptyAndHeader) {
  EXPECT_TRUE(load_dataset("", 2, 1).empty());
  const Dataset ds = load_dataset("a,b,y\r\n1,2,3\r\n\r\n4,5,6\r\n", 2, 1, true);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples[1].d, (std::vector<double>{6}));
}

TEST(DatasetTest, ReportsRowNumber) {
  EXPECT_NE(error_of([] { load_dataset("1,2", 2, 1); }).find("row 1"), std::string::npos);
  const std::string msg = error_of([] { load_dataset("1,2,3\n4,x,6\n", 2, 1); });
  EXPECT_NE(msg.find("row 2"), std::string::npos);
  EXPECT_NE(msg.find("'x'"), std::string::npos);
}

TEST(ModelTest, RoundTripIsBitExact) {
  std::mt19937_64 gen(42);
  const Activation all[] = {Activation::identity, Activation::sigmoid, Activation::tanh, Activation::relu};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> widths(2 + gen() % 4);
    for (auto& h : widths) h = 1 + gen() % 6;
    const Topology t(widths);
    WeightVector w(t.weight_count());
    for (auto& v : w) v = std::ldexp(uniform(gen, -1, 1), static_cast<int>(gen() % 40) - 20);
    const Activations phi{all[gen() % 4], all[gen() % 4]};

    const Model back = load_model(save_model(t, phi, w));
    EXPECT_EQ(back.topology, t);
    EXPECT_EQ(back.activations, phi);
    ASSERT_EQ(back.weights.size(), w.size());
    for (std::size_t k = 0; k < w.size(); ++k)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(back.weights[k]), std::bit_cast<std::uint64_t>(w[k]));
    EXPECT_EQ(save_model(back), save_model(t, phi, w));
  }
}

TEST(ModelTest, FileLayout) {
  const Topology t = build_topology({1, 1});
  EXPECT_EQ(save_model(t, {Activation::tanh, Activation::identity}, WeightVector{0.5, 2}),
            "layers: 1 1\nhidden_activation: tanh\noutput_activation: identity\n0.5\n2\n");
}

TEST(ModelTest, DistinctErrors) {
  const Topology t = build_topology({2, 3, 2, 1});
  const std::string good = save_model(t, {}, WeightVector(20, 0.25));

  std::string short_file = good.substr(0, good.rfind("0.25"));
  EXPECT_NE(error_of([&] { load_model(short_file); }).find("weight count mismatch"), std::string::npos);

  std::string bad_activation = good;
  bad_activation.replace(bad_activation.find("tanh"), 4, "softsign");
  EXPECT_NE(error_of([&] { load_model(bad_activation); }).find("unknown activation 'softsign'"), std::string::npos);

  std::string bad_header = good;
  bad_header.replace(0, 6, "layer ");
  EXPECT_NE(error_of([&] { load_model(bad_header); }).find("malformed header"), std::string::npos);

  EXPECT_NE(error_of([] { load_model("layers: 3\nhidden_activation: tanh\noutput_activation: tanh\n"); })
                .find("malformed header"),
            std::string::npos);
  EXPECT_NE(error_of([] { load_model("layers: 1 1\n"); }).find("malformed header"), std::string::npos);
  EXPECT_NE(error_of([] { load_model("layers: 1 1\nhidden_activation: tanh\noutput_activation: tanh\n1\nnope\n"); })
                .find("bad weight"),
            std::string::npos);
}

}  // namespace
}  // namespace mlpgrad
