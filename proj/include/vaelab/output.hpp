#pragma once

#include <string>
#include <vector>

#include "vaelab/analysis.hpp"

namespace vaelab {

/// 17 significant digits; non-finite values become "inf", "-inf" or "nan".
std::string format_number(double v);

struct CsvRow {
    double alpha = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
    SummaryStatistics stats;
    AsymptoticMetrics metrics;
    std::string phase;
    bool converged = false;
};

CsvRow csv_row(const SweepRow& row, double m_tol = 1e-6, double q_tol = 1e-6);
CsvRow csv_row(const PhasePoint& cell);
/// Closed-form row for alpha = infinity.
CsvRow csv_row_large_alpha(double beta, double lambda, double rho, double eta);

/// Header alpha,beta,lambda,m,Q,E,R_stat,b,eps_g,rate,distortion,phase,converged.
std::string sweep_csv(const std::vector<CsvRow>& rows);

struct SvgSeries {
    std::string label;
    std::vector<RDPoint> points;
};

/// Self-contained SVG line chart of rate against distortion.
std::string rd_svg(const std::vector<SvgSeries>& series, const std::string& title);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace vaelab
