#include "vaelab/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vaelab/error.hpp"

namespace vaelab {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvRow csv_row(const SweepRow& row, double m_tol, double q_tol) {
    CsvRow r;
    r.alpha = row.point.alpha;
    r.beta = row.point.beta;
    r.lambda = row.point.lambda;
    r.stats = row.result.stats;
    r.metrics = row.metrics;
    r.phase = to_string(classify_phase(row.result.stats, m_tol, q_tol));
    r.converged = row.result.converged;
    return r;
}

CsvRow csv_row(const PhasePoint& cell) {
    CsvRow r = csv_row(cell.row);
    r.phase = to_string(cell.phase);
    return r;
}

CsvRow csv_row_large_alpha(double beta, double lambda, double rho, double eta) {
    const LargeAlphaLimit lim = large_alpha_limit(beta, rho, eta);
    CsvRow r;
    r.alpha = std::numeric_limits<double>::infinity();
    r.beta = beta;
    r.lambda = lambda;
    r.stats = lim.stats;
    r.metrics = {lim.eps_g, lim.rate, lim.distortion};
    r.phase = to_string(classify_phase(lim.stats, 0.0, 0.0));
    r.converged = true;
    return r;
}

std::string sweep_csv(const std::vector<CsvRow>& rows) {
    std::ostringstream os;
    os << "alpha,beta,lambda,m,Q,E,R_stat,b,eps_g,rate,distortion,phase,converged\n";
    for (const CsvRow& r : rows) {
        const double vals[] = {r.alpha,     r.beta,    r.lambda,          r.stats.m,       r.stats.Q,
                               r.stats.E,   r.stats.R, r.stats.b,         r.metrics.eps_g, r.metrics.rate,
                               r.metrics.distortion};
        for (double v : vals) os << format_number(v) << ',';
        os << r.phase << ',' << (r.converged ? "true" : "false") << '\n';
    }
    return os.str();
}

std::string rd_svg(const std::vector<SvgSeries>& series, const std::string& title) {
    constexpr double W = 640, H = 480, left = 70, right = 20, top = 40, bottom = 60;
    double dmax = 0.0, rmax = 0.0;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            if (std::isfinite(p.distortion)) dmax = std::max(dmax, p.distortion);
            if (std::isfinite(p.rate)) rmax = std::max(rmax, p.rate);
        }
    dmax = dmax > 0.0 ? 1.05 * dmax : 1.0;
    rmax = rmax > 0.0 ? 1.05 * rmax : 1.0;
    auto sx = [&](double d) { return left + (W - left - right) * d / dmax; };
    auto sy = [&](double r) { return H - bottom - (H - top - bottom) * r / rmax; };
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << title << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double d = dmax * i / 5, r = rmax * i / 5;
        os << "<text x=\"" << sx(d) << "\" y=\"" << H - bottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << d << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << sy(r) + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << r << "</text>\n";
    }
    os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 15
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">distortion</text>\n";
    os << "<text x=\"18\" y=\"" << (top + H - bottom) / 2 << "\" transform=\"rotate(-90 18 " << (top + H - bottom) / 2
       << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">rate</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        std::vector<RDPoint> pts;
        for (const auto& p : series[k].points)
            if (std::isfinite(p.distortion) && std::isfinite(p.rate)) pts.push_back(p);
        std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) { return a.distortion < b.distortion; });
        const char* color = palette[k % (sizeof palette / sizeof *palette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (const auto& p : pts) os << sx(p.distortion) << ',' << sy(p.rate) << ' ';
        os << "\"/>\n";
        const double ly = top + 16.0 * (k + 1);
        os << "<line x1=\"" << W - right - 150 << "\" y1=\"" << ly - 4 << "\" x2=\"" << W - right - 125 << "\" y2=\""
           << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - right - 120 << "\" y=\"" << ly
           << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[k].label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << content;
    if (!os) throw Error("write failed: " + path);
}

}  // namespace vaelab
