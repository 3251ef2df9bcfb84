#include <gtest/gtest.h>

#include <set>
#include <stdexcept>

#include "odl/error.hpp"
#include "odl/experiment.hpp"
#include "odl/synth.hpp"

using namespace odl;

TEST(Plan, CrossValidationRows) {
  const auto plan = ExperimentPlan::cross_validation(3, 3, 10);
  ASSERT_EQ(plan.runs.size(), 9u);
  std::set<std::uint64_t> seeds;
  for (const auto& r : plan.runs) seeds.insert(r.seed);
  EXPECT_EQ(seeds.size(), 9u);
  EXPECT_EQ(plan.runs[4].subject, 1);
  EXPECT_EQ(plan.runs[4].fold, 1);
  EXPECT_EQ(ExperimentPlan::cross_validation(3, 3, 10).runs[7].seed, plan.runs[7].seed);
  EXPECT_THROW(ExperimentPlan::cross_validation(0, 3, 1), ConfigError);
}

TEST(Plan, RunPlanKeepsOrderAcrossThreads) {
  const auto plan = ExperimentPlan::cross_validation(4, 5, 1);
  auto fn = [](const RunSpec& s) -> std::vector<double> {
    if (s.subject == 2 && s.fold == 3) throw std::runtime_error("boom");
    return {static_cast<double>(s.subject * 10 + s.fold), static_cast<double>(s.seed % 1000)};
  };
  const auto serial = run_plan(plan, fn, 1);
  const auto threaded = run_plan(plan, fn, 4);
  ASSERT_EQ(serial.size(), 20u);
  for (std::size_t k = 0; k < serial.size(); ++k) {
    EXPECT_EQ(serial[k].ok, threaded[k].ok);
    EXPECT_EQ(serial[k].values, threaded[k].values);
    EXPECT_EQ(threaded[k].spec.seed, plan.runs[k].seed);
  }
  EXPECT_FALSE(serial[13].ok);
  EXPECT_EQ(serial[13].error, "boom");
  const auto ci = aggregate(serial, 0);
  EXPECT_EQ(ci.n, 19u);
  EXPECT_NEAR(ci.mean, (340.0 - 23.0) / 19.0, 1e-9);
}

TEST(Scenario, StillSubsetLabelsAndPairs) {
  SynthConfig cfg;
  cfg.pretrain_samples = 1;
  cfg.subjects = 1;
  cfg.flight_seconds = 300.0;
  const auto data = synth_generate(cfg, 5);
  const Sequence& seq = data.domain_b[0];
  const auto acq = acquire_finetune_set(seq, FinetuneSetSpec{}, 2);

  const auto all = build_scenario_data(seq, acq, 4.0, LossScenario::parse("t(a)+sc(a,dD,dH)"), 1);
  EXPECT_EQ(all.tasks.size(), 512u);
  EXPECT_EQ(all.pairs.size(), 504u);

  // Exact odometry propagates the run-start label without error.
  const auto exact = build_scenario_data(seq, acq, 4.0, LossScenario::parse("t(s32,dD)"), 1);
  EXPECT_EQ(exact.tasks.size(), 32u);
  EXPECT_TRUE(exact.pairs.empty());
  for (const auto& t : exact.tasks) {
    const Pose4 truth = seq.records[static_cast<std::size_t>(t.index)].relative();
    EXPECT_NEAR(t.target.x, truth.x, 1e-9);
    EXPECT_NEAR(t.target.y, truth.y, 1e-9);
    EXPECT_NEAR(wrap_angle(t.target.yaw - truth.yaw), 0.0, 1e-9);
  }
  const auto noisy = build_scenario_data(seq, acq, 4.0, LossScenario::parse("t(s32)+sc(s128,dD~,H?)"), 1);
  EXPECT_EQ(noisy.tasks.size(), 32u);
  EXPECT_EQ(noisy.pairs.size(), 128u);
  for (const auto& p : noisy.pairs) EXPECT_EQ(p.subject_motion, Pose4::identity());
}
