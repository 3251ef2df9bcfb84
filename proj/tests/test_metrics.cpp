#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "odl/error.hpp"
#include "odl/metrics.hpp"

using namespace odl;

TEST(Mae, HandComputed) {
  const std::vector<Pose4> p{{1, 0, 0, 0}, {0, 0, 0, 0}}, t{{0, 0, 0, 0}, {0, 0, 0, 0}};
  const auto m = mae(p, t);
  EXPECT_DOUBLE_EQ(m.per_output[0], 0.5);
  EXPECT_DOUBLE_EQ(m.sum, 0.5);
  EXPECT_DOUBLE_EQ(m.mean, 0.125);
  const std::vector<Pose4> one{{1, 0, 0, 0}}, zero{{0, 0, 0, 0}};
  EXPECT_DOUBLE_EQ(mae(one, zero).mean, 0.25);
}

TEST(Mae, WrapsYaw) {
  const double pi = std::numbers::pi;
  const std::vector<Pose4> p{{0, 0, 0, pi - 0.1}}, t{{0, 0, 0, -pi + 0.1}};
  EXPECT_NEAR(mae(p, t).per_output[3], 0.2, 1e-12);
  EXPECT_THROW(mae(std::vector<Pose4>{}, std::vector<Pose4>{}), ContractViolation);
  EXPECT_THROW(mae(p, std::vector<Pose4>{}), ContractViolation);
}

TEST(R2, PerfectMeanAndWorse) {
  std::vector<Pose4> t;
  for (int k = 0; k < 20; ++k) t.push_back({1.0 + 0.1 * k, std::sin(k), 0.05 * k, 0.1 * k - 1.0});
  const auto perfect = r2(t, t);
  for (double v : perfect.per_output) EXPECT_NEAR(v, 100.0, 1e-9);
  EXPECT_NEAR(perfect.mean, 100.0, 1e-9);

  Pose4 mean{};
  for (const auto& p : t) {
    mean.x += p.x / 20;
    mean.y += p.y / 20;
    mean.z += p.z / 20;
    mean.yaw += p.yaw / 20;
  }
  const std::vector<Pose4> constant(20, mean);
  const auto dummy = r2(constant, t);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(dummy.per_output[c], 0.0, 1e-6);
  // Yaw spread is taken around the circular mean, which differs slightly.
  EXPECT_NEAR(dummy.per_output[3], 0.0, 1.0);

  std::vector<Pose4> bad = t;
  for (auto& p : bad) p.x += 5.0;
  EXPECT_LT(r2(bad, t).per_output[0], 0.0);
}

TEST(R2, UndefinedForConstantTarget) {
  const std::vector<Pose4> t(5, Pose4{1, 2, 3, 0.5});
  std::vector<Pose4> p = t;
  p[0].x = 2;
  const auto r = r2(p, t);
  for (bool d : r.defined) EXPECT_FALSE(d);
  EXPECT_TRUE(std::isnan(r.per_output[0]));
}

TEST(R2, ShiftInvariantInCommonFrame) {
  std::vector<Pose4> t, p;
  for (int k = 0; k < 30; ++k) {
    t.push_back({2.0 + 0.03 * k, 0.1 * std::cos(k), 0.01 * k, 0.5 * std::sin(0.3 * k)});
    p.push_back({t.back().x + 0.05 * std::sin(k), t.back().y, t.back().z - 0.02, t.back().yaw + 0.01 * k});
  }
  auto ts = t, ps = p;
  for (auto* v : {&ts, &ps}) {
    for (auto& q : *v) {
      q.x += 7;
      q.y -= 3;
      q.z += 1;
      q.yaw = wrap_angle(q.yaw + 3.0);  // pushes some samples across the wrap
    }
  }
  const auto a = r2(p, t), b = r2(ps, ts);
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(a.per_output[c], b.per_output[c], 1e-6) << c;
}

TEST(MeanCi, StudentT) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto ci = mean_ci95(v);
  EXPECT_DOUBLE_EQ(ci.mean, 3.0);
  // t_{0.975,4} = 2.7764, s = sqrt(2.5)
  EXPECT_NEAR(ci.half_width, 2.7764451 * std::sqrt(2.5) / std::sqrt(5.0), 1e-6);
  EXPECT_EQ(ci.n, 5u);
  EXPECT_DOUBLE_EQ(mean_ci95(std::vector<double>{4.0}).half_width, 0.0);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(R2Matrix, CsvLayout) {
  std::vector<Pose4> t;
  for (int k = 0; k < 4; ++k) t.push_back({1.0 + k, 0.5 * k, 0.0 + 0.1 * k, 0.2 * k});
  const std::vector<R2Cell> cells{{"s1", "s2", r2(t, t)}};
  std::ostringstream out;
  write_r2_matrix(out, cells);
  const auto s = out.str();
  EXPECT_EQ(s.rfind("finetune_subject,test_subject,output,r2\n", 0), 0u);
  EXPECT_NE(s.find("s1,s2,x,100"), std::string::npos);
  EXPECT_NE(s.find("s1,s2,mean,100"), std::string::npos);
}
