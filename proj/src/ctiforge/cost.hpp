#pragma once

#include "ctiforge/decimal.hpp"
#include "ctiforge/model.hpp"

#include <vector>

namespace ctiforge {

struct CostModel {
  Decimal scu_price = Decimal::parse("5.60");       // per SCU
  Decimal compute_hourly = Decimal::parse("0.20");  // per hour per deployment
  Decimal deployments = Decimal::from_integer(2);
  Decimal hours = Decimal::from_integer(0);
};

// Throws InvalidArgument when a field is negative.
void validate(const CostModel &model);

struct CostEstimate {
  Decimal scu_total;     // sum of scu_estimate, unrounded
  Decimal scu_cost;      // cents
  Decimal compute_cost;  // cents
  Decimal total;         // cents
};

// scu_cost = sum(scu_estimate) * scu_price, compute_cost = deployments *
// compute_hourly * hours; exact arithmetic, half-even rounding to cents only
// on the final three figures.
CostEstimate estimate_cost(const std::vector<UsageRecord> &usages, const CostModel &model);

// prompt_chars / 4000 * base_rate, exact.
Decimal estimate_scu(std::size_t prompt_chars, const Decimal &base_rate);

// Default base_rate: four ~4000-character prompts cost 3.3 SCU.
inline const Decimal kDefaultScuBaseRate = Decimal::parse("0.825");

}  // namespace ctiforge
