#include "stackstep/schedule.hpp"

#include <limits>
#include <sstream>

namespace stackstep {

namespace {

ScheduleCondition make_cond(const std::string& name, double lhs, double rhs) {
  // Condition lhs <= rhs; margin is the slack rhs - lhs.
  ScheduleCondition c;
  c.name = name;
  c.margin = rhs - lhs;
  c.satisfied = lhs <= rhs;
  std::ostringstream os;
  os << lhs << " <= " << rhs;
  c.detail = os.str();
  return c;
}

}  // namespace

ScheduleReport validate_schedule(const StepSchedule& sched, const ProblemConstants& consts,
                                 long iters) {
  ScheduleReport rep;
  const double inf = std::numeric_limits<double>::infinity();
  const double beta_cap =
      consts.lambda > 0.0 && consts.L > 0.0
          ? std::min(consts.lambda / (2.0 * consts.L * consts.L), 2.0 / consts.lambda)
          : inf;

  switch (sched.kind) {
    case ScheduleKind::thm1:
      rep.conditions.push_back(make_cond("alpha0 <= beta0", sched.alpha0, sched.beta0));
      rep.conditions.push_back(make_cond("beta0 <= 1", sched.beta0, 1.0));
      rep.conditions.push_back(
          make_cond("beta0 <= min(lambda/(2 L^2), 2/lambda)", sched.beta0, beta_cap));
      break;
    case ScheduleKind::thm2: {
      // alpha_k / beta_k is decreasing in k, so the k = 0 check suffices.
      rep.conditions.push_back(
          make_cond("alpha_k <= beta_k (at k = 0)", sched.alpha(0), sched.beta(0)));
      rep.conditions.push_back(make_cond("beta_k <= 1 (at k = 0)", sched.beta(0), 1.0));
      rep.conditions.push_back(make_cond("alpha_k <= 1 (at k = 0)", sched.alpha(0), 1.0));
      rep.conditions.push_back(
          make_cond("beta_k <= min(lambda/(2 L^2), 2/lambda)", sched.beta(0), beta_cap));
      if (consts.lambda_phi > 0.0) {
        rep.conditions.push_back(make_cond("alpha0/beta0 <= 2 lambda / lambda_phi",
                                           sched.alpha0 / sched.beta0,
                                           2.0 * consts.lambda / consts.lambda_phi));
        rep.conditions.push_back(
            make_cond("8 / lambda_phi <= alpha0", 8.0 / consts.lambda_phi, sched.alpha0));
        if (8.0 / consts.lambda_phi > 1.0 && sched.h < 8.0 / consts.lambda_phi - 1.0) {
          ScheduleCondition c;
          c.name = "h offset large enough for alpha_k <= 1 with alpha0 >= 8/lambda_phi";
          c.satisfied = false;
          c.margin = sched.h - (8.0 / consts.lambda_phi - 1.0);
          c.detail = "raise h to at least " + std::to_string(8.0 / consts.lambda_phi - 1.0);
          rep.conditions.push_back(c);
        }
      }
      break;
    }
    case ScheduleKind::constant:
    case ScheduleKind::uniform:
      rep.conditions.push_back(make_cond("alpha0 <= 1", sched.alpha0, 1.0));
      break;
  }
  (void)iters;
  return rep;
}

}  // namespace stackstep
