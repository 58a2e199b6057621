#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "stackstep/objective.hpp"

namespace stackstep {

enum class ScheduleKind { thm1, thm2, constant, uniform };

/// Learning-rate pair (alpha_k, beta_k) plus the auxiliary rate zeta_k.
///   thm1:     alpha_k = alpha0 / (k+1)^{3/5},   beta_k = beta0 / (k+1)^{2/5}
///   thm2:     alpha_k = alpha0 / (k+h+1),       beta_k = beta0 / (k+h+1)^{2/3}
///   constant: alpha_k = alpha0,                 beta_k = beta0
///   uniform:  alpha_k = beta_k = alpha0
/// zeta_k decays at the beta_k order in all decaying kinds.
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::thm1;
  double alpha0 = 0.1;
  double beta0 = 0.5;
  double zeta0 = 0.5;
  double h = 0.0;  // offset, thm2 only

  double alpha(long k) const {
    switch (kind) {
      case ScheduleKind::thm1: return alpha0 / std::pow(static_cast<double>(k) + 1.0, 0.6);
      case ScheduleKind::thm2: return alpha0 / (static_cast<double>(k) + h + 1.0);
      case ScheduleKind::constant: return alpha0;
      case ScheduleKind::uniform: return alpha0;
    }
    return alpha0;
  }

  double beta(long k) const {
    switch (kind) {
      case ScheduleKind::thm1: return beta0 / std::pow(static_cast<double>(k) + 1.0, 0.4);
      case ScheduleKind::thm2: return beta0 / std::pow(static_cast<double>(k) + h + 1.0, 2.0 / 3.0);
      case ScheduleKind::constant: return beta0;
      case ScheduleKind::uniform: return alpha0;
    }
    return beta0;
  }

  double zeta(long k) const {
    switch (kind) {
      case ScheduleKind::thm1: return zeta0 / std::pow(static_cast<double>(k) + 1.0, 0.4);
      case ScheduleKind::thm2: return zeta0 / std::pow(static_cast<double>(k) + h + 1.0, 2.0 / 3.0);
      case ScheduleKind::constant: return zeta0;
      case ScheduleKind::uniform: return alpha0;
    }
    return zeta0;
  }

  /// Raise h until alpha_k <= 1 and alpha_0 <= beta_0-rate at k = 0 where
  /// achievable: the documented remedy when alpha0 must be large.
  void tune_h() {
    if (kind != ScheduleKind::thm2) return;
    if (alpha0 > 1.0) h = std::max(h, std::ceil(alpha0) - 1.0);
  }

  static ScheduleKind parse_kind(const std::string& s) {
    if (s == "thm1") return ScheduleKind::thm1;
    if (s == "thm2") return ScheduleKind::thm2;
    if (s == "constant") return ScheduleKind::constant;
    if (s == "uniform") return ScheduleKind::uniform;
    throw std::invalid_argument("unknown schedule kind: " + s);
  }

  std::string kind_name() const {
    switch (kind) {
      case ScheduleKind::thm1: return "thm1";
      case ScheduleKind::thm2: return "thm2";
      case ScheduleKind::constant: return "constant";
      case ScheduleKind::uniform: return "uniform";
    }
    return "?";
  }
};

struct ScheduleCondition {
  std::string name;
  bool satisfied = false;
  double margin = 0.0;  // slack; negative when violated
  std::string detail;
};

struct ScheduleReport {
  std::vector<ScheduleCondition> conditions;
  bool all_satisfied() const {
    for (const auto& c : conditions)
      if (!c.satisfied) return false;
    return true;
  }
};

/// Check the step-size validity conditions of the chosen schedule kind
/// against the supplied constants. Report-only; never mutates the schedule.
ScheduleReport validate_schedule(const StepSchedule& sched, const ProblemConstants& consts,
                                 long iters);

}  // namespace stackstep
