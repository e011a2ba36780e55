#include "mabmdp/regret.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mabmdp {

namespace {

// Neumaier-compensated running sum; keeps long regret sums accurate to a
// few ulps so the decomposition identity can be checked at 1e-12.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      carry_ += (sum_ - t) + x;
    else
      carry_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

std::size_t best_index(std::span<const double> gaps) {
  for (std::size_t e = 0; e < gaps.size(); ++e)
    if (gaps[e] == 0.0) return e;
  throw std::invalid_argument("no expert has a zero gap");
}

void check_sizes(std::span<const double> a, std::span<const double> b, const char* who) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument(std::string(who) + ": per-expert inputs must be non-empty and equally sized");
}

std::vector<double> profile_field(std::span<const MixingProfile> profiles, double MixingProfile::*field) {
  std::vector<double> out;
  out.reserve(profiles.size());
  for (const auto& p : profiles) out.push_back(p.*field);
  return out;
}

}  // namespace

RegretCurve cumulative_regret(const RunLog& log, double r_star) {
  std::vector<double> r(log.size(), r_star);
  auto curve = cumulative_regret(log, r);
  curve.r_star = r_star;
  return curve;
}

RegretCurve cumulative_regret(const RunLog& log, std::span<const double> r_star_by_iteration) {
  if (r_star_by_iteration.size() != log.size())
    throw std::invalid_argument("cumulative_regret: one benchmark value per iteration required");
  RegretCurve curve;
  curve.values.reserve(log.size() + 1);
  curve.values.push_back(0.0);
  CompensatedSum acc;
  for (std::size_t m = 0; m < log.size(); ++m) {
    acc.add(r_star_by_iteration[m] - log.records[m].avg_reward);
    curve.values.push_back(acc.value());
  }
  curve.r_star = r_star_by_iteration.empty() ? 0.0 : r_star_by_iteration.back();
  return curve;
}

RegretCurve regret_since(const RunLog& log, std::size_t from, double r_star) {
  if (from > log.size()) throw std::out_of_range("regret_since: start beyond the log");
  RegretCurve curve;
  curve.r_star = r_star;
  curve.values.reserve(log.size() - from + 1);
  curve.values.push_back(0.0);
  CompensatedSum acc;
  for (std::size_t m = from; m < log.size(); ++m) {
    acc.add(r_star - log.records[m].avg_reward);
    curve.values.push_back(acc.value());
  }
  return curve;
}

DecompositionTerms decomposition_terms(const RunLog& log, std::span<const double> steady_rewards) {
  const GapReport g = gaps(steady_rewards);
  const double r_star = steady_rewards[g.best];
  DecompositionTerms out;
  out.selection.reserve(log.size() + 1);
  out.suboptimal.reserve(log.size() + 1);
  out.optimal.reserve(log.size() + 1);
  out.selection.push_back(0.0);
  out.suboptimal.push_back(0.0);
  out.optimal.push_back(0.0);
  CompensatedSum sel, sub, opt;
  for (const auto& rec : log.records) {
    if (rec.expert >= steady_rewards.size())
      throw std::out_of_range("decomposition_terms: log names an unknown expert");
    sel.add(g.gaps[rec.expert]);
    if (rec.expert == g.best)
      opt.add(r_star - rec.avg_reward);
    else
      sub.add(steady_rewards[rec.expert] - rec.avg_reward);
    out.selection.push_back(sel.value());
    out.suboptimal.push_back(sub.value());
    out.optimal.push_back(opt.value());
  }
  return out;
}

DecompositionTerms decomposition_terms(const RunLog& log, std::span<const MixingProfile> profiles) {
  const auto rewards = profile_field(profiles, &MixingProfile::steady_reward);
  return decomposition_terms(log, rewards);
}

double harmonic_sum(const HorizonSchedule& schedule, std::size_t n) {
  CompensatedSum acc;
  for (std::size_t m = 0; m < n; ++m) acc.add(1.0 / static_cast<double>(horizon(schedule, m)));
  return acc.value();
}

double decomposition_bound(std::span<const double> expected_pulls, std::span<const double> gaps,
                           std::span<const double> k_constants, const HorizonSchedule& schedule,
                           std::size_t n) {
  check_sizes(gaps, k_constants, "decomposition_bound");
  check_sizes(expected_pulls, gaps, "decomposition_bound");
  const std::size_t best = best_index(gaps);
  const double t0 = static_cast<double>(schedule.t0);
  double total = 0.0;
  for (std::size_t e = 0; e < gaps.size(); ++e)
    if (e != best) total += expected_pulls[e] * (gaps[e] + k_constants[e] / t0);
  return total + k_constants[best] * harmonic_sum(schedule, n);
}

double decomposition_bound(std::span<const double> expected_pulls, std::span<const MixingProfile> profiles,
                           const HorizonSchedule& schedule, std::size_t n) {
  return decomposition_bound(expected_pulls, profile_field(profiles, &MixingProfile::gap),
                             profile_field(profiles, &MixingProfile::k_const), schedule, n);
}

GapTooSmallError::GapTooSmallError(std::size_t expert, double gap, double threshold)
    : std::runtime_error("expert " + std::to_string(expert) + " has gap " + std::to_string(gap) +
                         " <= 2K_e/T0 = " + std::to_string(threshold) + "; the UCB regret bound does not apply"),
      expert_(expert) {}

std::size_t gap_precondition_violation(std::span<const double> gaps, std::span<const double> k_constants,
                                       std::size_t t0) {
  check_sizes(gaps, k_constants, "gap_precondition_violation");
  const std::size_t best = best_index(gaps);
  for (std::size_t e = 0; e < gaps.size(); ++e)
    if (e != best && !(gaps[e] > 2.0 * k_constants[e] / static_cast<double>(t0))) return e;
  return static_cast<std::size_t>(-1);
}

double ucb_regret_bound(std::span<const double> gaps, std::span<const double> k_constants,
                        const HorizonSchedule& schedule, std::size_t n) {
  check_sizes(gaps, k_constants, "ucb_regret_bound");
  if (n == 0) throw std::invalid_argument("ucb_regret_bound: n must be at least 1");
  const std::size_t bad = gap_precondition_violation(gaps, k_constants, schedule.t0);
  const double t0 = static_cast<double>(schedule.t0);
  if (bad != static_cast<std::size_t>(-1)) throw GapTooSmallError(bad, gaps[bad], 2.0 * k_constants[bad] / t0);

  const std::size_t best = best_index(gaps);
  const double log_n = std::log(static_cast<double>(n));
  constexpr double kPiSqOver3 = std::numbers::pi * std::numbers::pi / 3.0;
  double total = 0.0;
  for (std::size_t e = 0; e < gaps.size(); ++e) {
    if (e == best) continue;
    const double margin = gaps[e] - 2.0 * k_constants[e] / t0;
    total += (32.0 * log_n / (margin * margin) + 1.0 + kPiSqOver3) * (gaps[e] + k_constants[e] / t0);
  }
  const double c = schedule.slope;
  const double nn = static_cast<double>(n);
  if (c == 0.0) return total + k_constants[best] * nn / t0;
  return total + k_constants[best] / c * std::log((t0 + c * nn - c) / t0);
}

double ucb_regret_bound(std::span<const MixingProfile> profiles, const HorizonSchedule& schedule, std::size_t n) {
  return ucb_regret_bound(profile_field(profiles, &MixingProfile::gap),
                          profile_field(profiles, &MixingProfile::k_const), schedule, n);
}

HarmonicSumCheck harmonic_sum_check(const HorizonSchedule& schedule, std::size_t n) {
  if (!(schedule.slope > 0.0))
    throw std::invalid_argument("harmonic_sum_check: slope must be positive (use n/T0 for a constant schedule)");
  if (n == 0) throw std::invalid_argument("harmonic_sum_check: n must be at least 1");
  const double t0 = static_cast<double>(schedule.t0);
  const double c = schedule.slope;
  const double nn = static_cast<double>(n);
  HarmonicSumCheck out;
  out.exact_sum = harmonic_sum(schedule, n);
  out.bound = std::log((t0 + c * nn - c) / t0) / c;
  out.slack = nn * c / (2.0 * t0 * t0);
  return out;
}

AggregateCurve aggregate_runs(std::span<const std::vector<double>> curves) {
  if (curves.empty()) throw std::invalid_argument("aggregate_runs: no curves");
  const std::size_t len = curves.front().size();
  for (const auto& c : curves)
    if (c.size() != len) throw std::invalid_argument("aggregate_runs: curves have different lengths");
  AggregateCurve out;
  out.mean.assign(len, 0.0);
  out.std.assign(len, 0.0);
  const double k = static_cast<double>(curves.size());
  for (std::size_t i = 0; i < len; ++i) {
    double m = 0.0;
    for (const auto& c : curves) m += c[i];
    m /= k;
    double ss = 0.0;
    for (const auto& c : curves) ss += (c[i] - m) * (c[i] - m);
    out.mean[i] = m;
    out.std[i] = curves.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  }
  return out;
}

AggregateCurve aggregate_runs(std::span<const RegretCurve> curves) {
  std::vector<std::vector<double>> values;
  values.reserve(curves.size());
  for (const auto& c : curves) values.push_back(c.values);
  return aggregate_runs(std::span<const std::vector<double>>(values));
}

LogFit fit_log_growth(std::span<const double> curve, std::size_t from, std::size_t to, std::size_t origin) {
  if (from <= origin || to < from || to >= curve.size())
    throw std::invalid_argument("fit_log_growth: need origin < from <= to < curve length");
  const double count = static_cast<double>(to - from + 1);
  double sx = 0.0, sy = 0.0;
  for (std::size_t n = from; n <= to; ++n) {
    sx += std::log(static_cast<double>(n - origin));
    sy += curve[n];
  }
  const double mx = sx / count, my = sy / count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t n = from; n <= to; ++n) {
    const double dx = std::log(static_cast<double>(n - origin)) - mx;
    const double dy = curve[n] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LogFit fit;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t n = from; n <= to; ++n) {
    const double pred = fit.slope * std::log(static_cast<double>(n - origin)) + fit.intercept;
    ss_res += (curve[n] - pred) * (curve[n] - pred);
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace mabmdp
