#include <gtest/gtest.h>

#include "odl/cost_model.hpp"
#include "odl/error.hpp"

using namespace odl;

namespace {

// Independent recount for the reference network: per conv stage
// (in_ch, out_ch, k, stride, input h x w).
struct Stage {
  int cin, cout, k, s, h, w;
};
constexpr Stage kStages[] = {{1, 32, 5, 2, 96, 160}, {32, 32, 3, 2, 24, 40}, {32, 32, 3, 1, 12, 20},
                             {32, 64, 3, 2, 12, 20}, {64, 64, 3, 1, 6, 10},  {64, 128, 3, 2, 6, 10},
                             {128, 128, 3, 1, 3, 5}};

std::uint64_t out_elems(const Stage& s) {
  return static_cast<std::uint64_t>(s.cout) * (s.h / s.s) * (s.w / s.s);
}

}  // namespace

TEST(CostModel, ForwardMacsByHand) {
  std::uint64_t macs = 0;
  for (const auto& s : kStages) macs += out_elems(s) * s.k * s.k * s.cin;
  macs += 1920 * 4;
  EXPECT_EQ(forward_macs(reference_descriptor()), macs);
  EXPECT_EQ(macs, 14138880u);
}

TEST(CostModel, FcOnlyTrainStepByHand) {
  // Forward plus fc weight gradient plus fc bias gradient.
  EXPECT_EQ(train_step_macs(reference_descriptor(), UpdateStrategy::fc_wb()), 14138880u + 1920u * 4u + 4u);
}

TEST(CostModel, TableWithinTolerance) {
  const auto a = reference_descriptor();
  struct Row {
    UpdateStrategy s;
    double params_k, mmac, act_kb;
  };
  const Row rows[] = {{UpdateStrategy::all_wb(), 304.4, 53.1, 217.5},
                      {UpdateStrategy::fc_wb(), 7.7, 14.3, 1.9},
                      {UpdateStrategy::bn_wb(), 1.0, 38.8, 146.2},
                      {UpdateStrategy::bias_only(), 0.5, 38.7, 0.8}};
  for (const auto& r : rows) {
    const auto rep = cost_report(a, r.s);
    EXPECT_NEAR(rep.params_selected / 1000.0, r.params_k, 0.05 * r.params_k) << r.s.name();
    EXPECT_NEAR(rep.train_step_macs / 1e6, r.mmac, 0.10 * r.mmac) << r.s.name();
    // Float activations counted in Ki-elements.
    const double act = rep.footprint.activation_elements / 1024.0;
    if (r.s.name() != UpdateStrategy::bias_only().name()) {
      EXPECT_NEAR(act, r.act_kb, 0.10 * r.act_kb) << r.s.name();
    } else {
      EXPECT_EQ(act, 0.0);  // exact gradients with frozen bn keep no float activations
    }
  }
}

TEST(CostModel, EmptyDescriptorIsZero) {
  ArchDescriptor empty;
  EXPECT_EQ(forward_macs(empty), 0u);
  EXPECT_EQ(backward_macs(empty, UpdateStrategy::all_wb()), 0u);
  const auto rep = cost_report(empty, UpdateStrategy::all_wb());
  EXPECT_EQ(rep.params_total, 0u);
  EXPECT_EQ(rep.footprint.activation_elements, 0u);
}

TEST(CostModel, NoSelectionMeansForwardOnly) {
  const auto a = reference_descriptor();
  EXPECT_EQ(train_step_macs(a, UpdateStrategy::none()), forward_macs(a));
  EXPECT_EQ(activation_footprint(a, UpdateStrategy::none()).activation_elements, 0u);
}

TEST(RuntimeModel, CalibrationReproducesAnchor) {
  const auto a = reference_descriptor();
  const auto macs = train_step_macs(a, UpdateStrategy::all_wb());
  EXPECT_NEAR(estimate_time(macs, 512, 5, gap9_profile()), 123.0, 1e-9);
  EXPECT_NEAR(estimate_time(macs, 512, 5, gap8_profile()), 86 * 60 + 51.0, 1e-6);
  // Hand calibration: MACs / (seconds * f).
  const double eff = 5.0 * 512 * static_cast<double>(macs) / (123.0 * 370e6);
  EXPECT_NEAR(gap9_profile().effective_mac_per_cycle, eff, 1e-12);
}

TEST(RuntimeModel, LinearInSetSizeAndEpochs) {
  const auto p = gap9_profile();
  EXPECT_DOUBLE_EQ(estimate_time(1000, 512, 5, p) / estimate_time(1000, 128, 5, p), 4.0);
  EXPECT_DOUBLE_EQ(estimate_time(1000, 128, 10, p) / estimate_time(1000, 128, 5, p), 2.0);
}

TEST(RuntimeModel, RejectsBadProfiles) {
  SocProfile p = gap9_profile();
  p.frequency_hz = 0;
  EXPECT_THROW(estimate_time(1, 1, 1, p), ConfigError);
  EXPECT_THROW(calibrate_mac_per_cycle(1, 1, 1, 0.0, 1e6, 1.0), ConfigError);
}

TEST(MemoryFraction, BatchOf32) {
  // 146.2 Ki per frame x 32 frames of an 8 MiB memory.
  EXPECT_NEAR(batch_memory_fraction(146.25, 32, 8192.0), 0.571, 0.001);
}
