#include "odl/metrics.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "odl/error.hpp"

namespace odl {

namespace {

void check_inputs(std::span<const Pose4> p, std::span<const Pose4> t, const char* what) {
  if (p.size() != t.size()) throw ContractViolation(std::string(what) + ": predictions/targets size mismatch");
  if (p.empty()) throw ContractViolation(std::string(what) + ": empty input");
}

}  // namespace

MaeResult mae(std::span<const Pose4> predictions, std::span<const Pose4> targets) {
  check_inputs(predictions, targets, "mae");
  MaeResult m;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    const auto r = residual(predictions[k], targets[k]);
    for (int c = 0; c < 4; ++c) m.per_output[c] += std::abs(r[c]);
  }
  const double n = static_cast<double>(predictions.size());
  for (auto& v : m.per_output) v /= n;
  m.sum = m.per_output[0] + m.per_output[1] + m.per_output[2] + m.per_output[3];
  m.mean = m.sum / 4.0;
  return m;
}

R2Result r2(std::span<const Pose4> predictions, std::span<const Pose4> targets) {
  check_inputs(predictions, targets, "r2");
  const double n = static_cast<double>(targets.size());
  std::array<double, 4> centre{};
  double s = 0.0, c = 0.0;
  for (const auto& t : targets) {
    centre[0] += t.x;
    centre[1] += t.y;
    centre[2] += t.z;
    s += std::sin(t.yaw);
    c += std::cos(t.yaw);
  }
  for (int k = 0; k < 3; ++k) centre[k] /= n;
  centre[3] = std::atan2(s, c);

  std::array<double, 4> ss_res{}, ss_tot{};
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto r = residual(predictions[k], targets[k]);
    const auto t = targets[k].as_array();
    for (int o = 0; o < 4; ++o) {
      ss_res[o] += r[o] * r[o];
      const double d = o == 3 ? wrap_angle(t[o] - centre[3]) : t[o] - centre[o];
      ss_tot[o] += d * d;
    }
  }
  R2Result out;
  double acc = 0.0;
  int defined = 0;
  for (int o = 0; o < 4; ++o) {
    if (ss_tot[o] <= 0.0) {
      out.per_output[o] = std::numeric_limits<double>::quiet_NaN();
      out.defined[o] = false;
      continue;
    }
    out.defined[o] = true;
    out.per_output[o] = 100.0 * (1.0 - ss_res[o] / ss_tot[o]);
    acc += out.per_output[o];
    ++defined;
  }
  out.mean = defined ? acc / defined : std::numeric_limits<double>::quiet_NaN();
  return out;
}

MeanCi mean_ci95(std::span<const double> values) {
  MeanCi r;
  r.n = values.size();
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  boost::math::students_t dist(static_cast<double>(values.size() - 1));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.half_width = t * sd / std::sqrt(static_cast<double>(values.size()));
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

void write_r2_matrix(std::ostream& out, std::span<const R2Cell> cells) {
  static const char* const names[] = {"x", "y", "z", "yaw"};
  out << "finetune_subject,test_subject,output,r2\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  for (const auto& c : cells) {
    for (int o = 0; o < 4; ++o) {
      out << c.finetune_subject << ',' << c.test_subject << ',' << names[o] << ','
          << (c.r2.defined[o] ? num(c.r2.per_output[o]) : "nan") << '\n';
    }
    out << c.finetune_subject << ',' << c.test_subject << ",mean," << num(c.r2.mean) << '\n';
  }
}

}  // namespace odl
