#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctrap/abm.hpp"
#include "ctrap/analysis.hpp"
#include "ctrap/meanfield.hpp"
#include "ctrap/strategy.hpp"

namespace ctrap {

// CSV dialect: comma separator, '.' decimal point, LF line endings, header
// row always present, reals printed with 9 significant digits.

std::string format_real(double x);

void write_portrait_csv(std::ostream& os, const PhasePortrait& portrait);
void write_diagram_csv(std::ostream& os, const std::vector<DiagramCell>& cells);
/// Writes every `stride`-th sample plus the final one.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::size_t stride = 1);
void write_sweep_csv(std::ostream& os, const std::vector<SweepPoint>& points);
void write_ensemble_csv(std::ostream& os, const EnsembleSummary& summary);
void write_finals_csv(std::ostream& os, const EnsembleSummary& summary);

nlohmann::json to_json(const Strategy& s);
nlohmann::json to_json(const Breakpoints& b);
nlohmann::json to_json(const CycleReport& c);
/// {coefficients, std_errors, t_stats, p_values, r_squared, n_obs,
/// skipped_rows}. Infinite t statistics serialize as null.
nlohmann::json to_json(const FitResult& fit, int skipped_rows = 0);

}  // namespace ctrap
