#include "ctiforge/cost.hpp"

#include "ctiforge/errors.hpp"

namespace ctiforge {

void validate(const CostModel &model) {
  if (model.scu_price.is_negative() || model.compute_hourly.is_negative() || model.deployments.is_negative() ||
      model.hours.is_negative()) {
    fail(ErrorCode::InvalidArgument, "cost model fields must be nonnegative");
  }
}

CostEstimate estimate_cost(const std::vector<UsageRecord> &usages, const CostModel &model) {
  validate(model);
  CostEstimate out;
  for (const auto &u : usages) out.scu_total += u.scu_estimate;
  const Decimal scu_cost = out.scu_total * model.scu_price;
  const Decimal compute_cost = model.deployments * model.compute_hourly * model.hours;
  out.scu_cost = scu_cost.round_half_even(2);
  out.compute_cost = compute_cost.round_half_even(2);
  out.total = (scu_cost + compute_cost).round_half_even(2);
  return out;
}

Decimal estimate_scu(std::size_t prompt_chars, const Decimal &base_rate) {
  return Decimal::from_integer(static_cast<long long>(prompt_chars)) * Decimal::parse("0.00025") * base_rate;
}

}  // namespace ctiforge
