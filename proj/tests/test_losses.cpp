#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "odl/error.hpp"
#include "odl/losses.hpp"

using namespace odl;

namespace {

constexpr double kPi = std::numbers::pi;

Pose4 random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2, 2);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  return {u(rng) + 3.0, u(rng), u(rng), ang(rng)};
}

void expect_pose(const Pose4& a, const Pose4& b, double tol = 1e-12) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(a.z, b.z, tol);
  EXPECT_NEAR(wrap_angle(a.yaw - b.yaw), 0.0, tol);
}

}  // namespace

TEST(TaskLoss, Examples) {
  const std::vector<Pose4> p{{1, 0, 0, 0}}, t{{0, 0, 0, 0}};
  EXPECT_DOUBLE_EQ(task_loss(p, t), 1.0);
  EXPECT_DOUBLE_EQ(task_loss(t, t), 0.0);
  // 1 m and 1 rad weigh the same.
  const std::vector<Pose4> py{{0, 0, 0, 1}};
  EXPECT_DOUBLE_EQ(task_loss(py, t), 1.0);
  EXPECT_THROW(task_loss(std::vector<Pose4>{}, std::vector<Pose4>{}), UndefinedTermError);
}

TEST(PropagateTarget, HandComposed) {
  expect_pose(propagate_target({2, 0, 0, 0}, Pose4::identity()), {2, 0, 0, 0});
  expect_pose(propagate_target({2, 0, 0, 0}, {1, 0, 0, 0}), {1, 0, 0, 0});
  expect_pose(propagate_target({2, 0, 0, 0}, {0, 0, 0, kPi / 2}), {0, -2, 0, -kPi / 2});
}

TEST(ScLoss, Examples) {
  EXPECT_DOUBLE_EQ(sc_loss(Pose4::identity(), Pose4::identity(), Pose4::identity(), Pose4::identity()), 0.0);
  EXPECT_NEAR(sc_loss({2, 0, 0, 0}, {1, 0, 0, 0}, {1, 0, 0, 0}, Pose4::identity()), 0.0, 1e-15);
}

TEST(ScLoss, ZeroAtGroundTruthWithMovingSubject) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Pose4 Di = random_pose(rng), Dj = random_pose(rng), Hi = random_pose(rng), Hj = random_pose(rng);
    const Pose4 pi = compose(invert(Di), Hi), pj = compose(invert(Dj), Hj);
    const Pose4 odom = compose(invert(Di), Dj);
    const Pose4 subj = compose(invert(Hi), Hj);
    EXPECT_NEAR(sc_loss(pi, pj, odom, subj), 0.0, 1e-9);
    // Time reversal maps the zero-loss pair to a zero-loss pair.
    EXPECT_NEAR(sc_loss(pj, pi, invert(odom), invert(subj)), 0.0, 1e-9);
    // The inverse convention compares with the inverted motion instead.
    EXPECT_NEAR(sc_loss(pi, pj, odom, invert(subj), TargetConvention::inverse), 0.0, 1e-9);
  }
}

TEST(ScLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const Pose4 pi = random_pose(rng), pj = random_pose(rng), o = random_pose(rng), s = random_pose(rng);
    const auto g = sc_loss_grad(pi, pj, o, s);
    for (int c = 0; c < 4; ++c) {
      auto num = [&](bool first) {
        auto a = (first ? pi : pj).as_array(), b = a;
        a[c] += h;
        b[c] -= h;
        const Pose4 A{a[0], a[1], a[2], a[3]}, B{b[0], b[1], b[2], b[3]};
        const double fp = first ? sc_loss(A, pj, o, s) : sc_loss(pi, A, o, s);
        const double fm = first ? sc_loss(B, pj, o, s) : sc_loss(pi, B, o, s);
        return (fp - fm) / (2 * h);
      };
      const double ni = num(true), nj = num(false);
      EXPECT_LT(std::abs(ni - g.grad_i[c]) / std::max({std::abs(ni), std::abs(g.grad_i[c]), 1e-6}), 1e-4);
      EXPECT_LT(std::abs(nj - g.grad_j[c]) / std::max({std::abs(nj), std::abs(g.grad_j[c]), 1e-6}), 1e-4);
    }
  }
}

TEST(CombinedLoss, LinearityAndOmission) {
  auto sc = LossScenario::parse("t(a)+sc(a,dD,dH)");
  const std::vector<TaskTerm> tasks{{{1.3, 0, 0, 0}, {1, 0, 0, 0}}};  // 0.3
  const std::vector<PairTerm> pairs{{Pose4::identity(), {0.2, 0, 0, 0}, Pose4::identity(), Pose4::identity()}};
  EXPECT_NEAR(combined_loss(sc, tasks, pairs).value, 0.5, 1e-12);
  for (double lambda : {0.0, 0.5, 2.0, 3.0}) {
    sc.lambda_sc = lambda;
    EXPECT_NEAR(combined_loss(sc, tasks, pairs).value - 0.3, lambda * 0.2, 1e-12);
  }
  EXPECT_NEAR(combined_loss(sc, tasks, {}).value, 0.3, 1e-12);
  EXPECT_FALSE(combined_loss(sc, tasks, {}).has_sc);
  EXPECT_THROW(combined_loss(sc, {}, {}), ConfigError);
}

TEST(CombinedLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  auto sc = LossScenario::parse("t(a)+sc(a,dD,dH)", 2.0, 0.7);
  std::vector<TaskTerm> tasks(3);
  std::vector<PairTerm> pairs(2);
  for (auto& t : tasks) t = {random_pose(rng), random_pose(rng)};
  for (auto& p : pairs) p = {random_pose(rng), random_pose(rng), random_pose(rng), random_pose(rng)};
  const auto base = combined_loss(sc, tasks, pairs);
  const double h = 1e-6;
  auto perturbed = [&](auto mutate) {
    auto t2 = tasks;
    auto p2 = pairs;
    mutate(t2, p2);
    return combined_loss(sc, t2, p2).value;
  };
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    for (int c = 0; c < 4; ++c) {
      auto bump = [&](double d) {
        return perturbed([&](auto& t2, auto&) {
          auto a = t2[k].prediction.as_array();
          a[c] += d;
          t2[k].prediction = {a[0], a[1], a[2], a[3]};
        });
      };
      EXPECT_NEAR((bump(h) - bump(-h)) / (2 * h), base.task_grad[k][c], 1e-6);
    }
  }
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    for (int c = 0; c < 4; ++c) {
      auto bump = [&](double d, bool first) {
        return perturbed([&](auto&, auto& p2) {
          Pose4& q = first ? p2[k].pred_i : p2[k].pred_j;
          auto a = q.as_array();
          a[c] += d;
          q = {a[0], a[1], a[2], a[3]};
        });
      };
      EXPECT_NEAR((bump(h, true) - bump(-h, true)) / (2 * h), base.pair_grad_i[k][c], 1e-6);
      EXPECT_NEAR((bump(h, false) - bump(-h, false)) / (2 * h), base.pair_grad_j[k][c], 1e-6);
    }
  }
}

TEST(Scenario, ParsesLabels) {
  const auto a = LossScenario::parse("t(a)");
  EXPECT_EQ(a.task_set, SampleSet::all);
  EXPECT_FALSE(a.has_sc());
  const auto b = LossScenario::parse("sc(a,dD~,H?)");
  EXPECT_FALSE(b.has_task());
  EXPECT_EQ(b.sc_drone, DroneMode::noisy_odometry);
  EXPECT_EQ(b.sc_subject, SubjectMode::unknown);
  const auto c = LossScenario::parse("t(s32)+sc(s128,dD~,H?)");
  EXPECT_EQ(c.task_set, SampleSet::still_subset);
  EXPECT_EQ(c.task_subset_size, 32);
  EXPECT_EQ(c.sc_subset_size, 128);
  EXPECT_EQ(c.task_drone, DroneMode::noisy_odometry);  // inherited
  const auto d = LossScenario::parse("t(s32,D)+sc(s128,dD~,H?)");
  EXPECT_EQ(d.task_drone, DroneMode::absolute);
}

TEST(Scenario, RejectsBadLabels) {
  for (const char* s : {"", "t()", "x(a)", "sc(a,dD)", "sc(q,dD,dH)", "t(s0)", "t(a)+", "t(a)t(a)", "sc(a,dX,dH)",
                        "t(a)+t(a)", "t(a,D,H?)"}) {
    EXPECT_THROW(LossScenario::parse(s), ConfigError) << s;
  }
  EXPECT_THROW(LossScenario::parse("t(a)", 0.0), ConfigError);
}

namespace {

struct Track {
  std::vector<Pose4> drone, subject;
};

Track straight_track(int n) {
  Track t;
  for (int k = 0; k < n; ++k) {
    t.drone.push_back({0.05 * k, 0, 0, 0.01 * k});
    t.subject.push_back({3.0, 0.02 * k, 0, 0});
  }
  return t;
}

}  // namespace

TEST(BuildPairs, CountsAndFields) {
  const auto tr = straight_track(512);
  PairSource src;
  src.rate_hz = 4.0;
  for (int k = 0; k < 512; ++k) src.frames.push_back(k);
  src.drone = tr.drone;
  src.subject = tr.subject;
  const auto sc = LossScenario::parse("sc(a,dD,dH)");
  const auto pairs = build_pairs(src, 2.0, sc, 1);
  ASSERT_EQ(pairs.size(), 504u);
  EXPECT_EQ(pairs[0].i, 0);
  EXPECT_EQ(pairs[0].j, 8);
  expect_pose(pairs[3].odometry, compose(invert(tr.drone[3]), tr.drone[11]));
  expect_pose(pairs[3].subject_motion, compose(invert(tr.subject[3]), tr.subject[11]));
  const auto unknown = build_pairs(src, 2.0, LossScenario::parse("sc(a,dD,H?)"), 1);
  EXPECT_EQ(unknown[5].subject_motion, Pose4::identity());
  EXPECT_TRUE(build_pairs(src, 128.0, sc, 1).empty());
  EXPECT_THROW(build_pairs(src, 0.3, sc, 1), ConfigError);
  EXPECT_TRUE(build_pairs(src, 2.0, LossScenario::parse("t(a)"), 1).empty());
}

TEST(BuildPairs, StillSubsetLimitedToRuns) {
  const auto tr = straight_track(400);
  PairSource src;
  src.rate_hz = 4.0;
  for (int k = 0; k < 400; ++k) src.frames.push_back(k);
  src.drone = tr.drone;
  src.subject = tr.subject;
  src.still_run.assign(400, -1);
  for (int k = 10; k < 120; ++k) src.still_run[static_cast<std::size_t>(k)] = 0;
  for (int k = 200; k < 300; ++k) src.still_run[static_cast<std::size_t>(k)] = 1;
  const auto pairs = build_pairs(src, 2.0, LossScenario::parse("sc(s128,dD,dH)"), 4);
  EXPECT_EQ(pairs.size(), 128u);
  for (const auto& p : pairs) {
    EXPECT_GE(src.still_run[static_cast<std::size_t>(p.i)], 0);
    EXPECT_EQ(src.still_run[static_cast<std::size_t>(p.i)], src.still_run[static_cast<std::size_t>(p.j)]);
  }
  const auto again = build_pairs(src, 2.0, LossScenario::parse("sc(s128,dD,dH)"), 4);
  ASSERT_EQ(again.size(), pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) EXPECT_EQ(again[k].i, pairs[k].i);
}

TEST(BuildPairs, SubsampledFrames) {
  const auto tr = straight_track(256);
  PairSource src;
  src.rate_hz = 1.0;
  for (int k = 0; k < 256; k += 4) src.frames.push_back(k);
  src.drone = tr.drone;
  src.subject = tr.subject;
  const auto pairs = build_pairs(src, 2.0, LossScenario::parse("sc(a,dD,dH)"), 1);
  ASSERT_EQ(pairs.size(), 62u);
  EXPECT_EQ(pairs[0].j - pairs[0].i, 8);
}
