#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "marketlab/analysis_harness.hpp"

namespace marketlab {

inline constexpr const char* kStatCsvHeader =
    "scenario,point,estimator,source,mean,bias,se,rmse,ci_lo,ci_hi,gte_true,reps,seed";

/// Shortest decimal form that round-trips.
std::string format_number(double x);

void write_stat_csv(std::ostream& out, const std::vector<StatRow>& rows);

/// JSON mirror of the CSV with the bootstrap intervals of se and rmse and any
/// per-point errors.
void write_stat_json(std::ostream& out, const std::vector<StatRow>& rows,
                     const std::vector<PointError>& errors = {});

}  // namespace marketlab
