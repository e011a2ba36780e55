#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mabmdp/bandit.hpp"
#include "mabmdp/chain.hpp"

namespace mabmdp {

// Cumulative regret r(n) = n R* - sum_{m<n} R_m for n = 0..N; values[0] = 0.
struct RegretCurve {
  std::vector<double> values;
  double r_star = 0.0;

  std::size_t iterations() const { return values.empty() ? 0 : values.size() - 1; }
};

RegretCurve cumulative_regret(const RunLog& log, double r_star);
// Piecewise benchmark: iteration m is charged r_star_by_iteration[m] - R_m.
// RegretCurve::r_star is set to the last entry.
RegretCurve cumulative_regret(const RunLog& log, std::span<const double> r_star_by_iteration);
// Regret of iterations [from, N) only, against r_star; values[0] = 0.
RegretCurve regret_since(const RunLog& log, std::size_t from, double r_star);

// The three-way split of r(n), per prefix n = 0..N:
//   selection:   sum_e T_e(n) Delta_e
//   suboptimal:  sum over iterations of experts e != e* of (Rbar^e - R_m)
//   optimal:     sum over iterations of e* of (R* - R_m)
// selection + suboptimal + optimal == r(n) exactly in real arithmetic.
struct DecompositionTerms {
  std::vector<double> selection;
  std::vector<double> suboptimal;
  std::vector<double> optimal;
};

DecompositionTerms decomposition_terms(const RunLog& log, std::span<const double> steady_rewards);
DecompositionTerms decomposition_terms(const RunLog& log, std::span<const MixingProfile> profiles);

// sum_{m<n} 1/T_m with T_m from the schedule.
double harmonic_sum(const HorizonSchedule& schedule, std::size_t n);

// sum_{e != e*} E[T_e(n)] (Delta_e + K_e/T0) + K_* sum_{m<n} 1/T_m
double decomposition_bound(std::span<const double> expected_pulls, std::span<const double> gaps,
                           std::span<const double> k_constants, const HorizonSchedule& schedule,
                           std::size_t n);
double decomposition_bound(std::span<const double> expected_pulls, std::span<const MixingProfile> profiles,
                           const HorizonSchedule& schedule, std::size_t n);

class GapTooSmallError : public std::runtime_error {
 public:
  GapTooSmallError(std::size_t expert, double gap, double threshold);
  std::size_t expert() const { return expert_; }

 private:
  std::size_t expert_;
};

// Expected-regret bound for UCB after n >= 1 iterations:
//   sum_{e != e*} (32 ln n / (Delta_e - 2 K_e/T0)^2 + 1 + pi^2/3)(Delta_e + K_e/T0)
//   + (K_*/c) ln((T0 + c n - c)/T0)      (K_* n / T0 when c == 0)
// Requires Delta_e > 2 K_e / T0 for every suboptimal expert.
double ucb_regret_bound(std::span<const double> gaps, std::span<const double> k_constants,
                        const HorizonSchedule& schedule, std::size_t n);
double ucb_regret_bound(std::span<const MixingProfile> profiles, const HorizonSchedule& schedule,
                        std::size_t n);
// First suboptimal expert violating Delta_e > 2 K_e / T0, or npos.
std::size_t gap_precondition_violation(std::span<const double> gaps, std::span<const double> k_constants,
                                       std::size_t t0);

struct HarmonicSumCheck {
  double exact_sum = 0.0;
  double bound = 0.0;  // (1/c) ln((T0 + c n - c)/T0)
  double slack = 0.0;  // n c / (2 T0^2), allowance for rounding T_k to integers

  bool holds() const { return exact_sum <= bound + slack; }
};

// Requires c > 0 and n >= 1.
HarmonicSumCheck harmonic_sum_check(const HorizonSchedule& schedule, std::size_t n);

struct AggregateCurve {
  std::vector<double> mean;
  std::vector<double> std;  // sample standard deviation; 0 for a single curve
};

AggregateCurve aggregate_runs(std::span<const RegretCurve> curves);
AggregateCurve aggregate_runs(std::span<const std::vector<double>> curves);

// Least-squares fit y(n) ~ a ln(n - origin) + b over n in [from, to].
struct LogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

LogFit fit_log_growth(std::span<const double> curve, std::size_t from, std::size_t to,
                      std::size_t origin = 0);

}  // namespace mabmdp
