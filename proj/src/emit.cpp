#include "scarcealloc/emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "scarcealloc/errors.hpp"

namespace scarcealloc {

namespace {

/// Shortest round-tripping decimal form.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Compact form for SVG coordinates and labels.
std::string fmt_coord(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 25.0;
constexpr double kMarginTop = 30.0;
constexpr double kMarginBottom = 55.0;

struct Viewport {
    double x0 = kMarginLeft;
    double y0 = kMarginTop;
    double w = kWidth - kMarginLeft - kMarginRight;
    double h = kHeight - kMarginTop - kMarginBottom;
};

/// Round tick spacing to 1/2/5 * 10^k covering the range with ~5 ticks.
std::vector<double> nice_ticks(double lo, double hi) {
    if (!(hi > lo)) hi = lo + 1.0;
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    }
    std::vector<double> ticks;
    for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    return ticks;
}

void open_svg(std::ostringstream& svg, const std::string& title) {
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
        << "\">\n"
        << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "  <text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"14\" font-weight=\"bold\">"
        << xml_escape(title) << "</text>\n";
}

void draw_axes(std::ostringstream& svg, const Viewport& vp,
               const std::vector<double>& y_ticks, double y_lo, double y_hi,
               const std::string& y_label) {
    auto map_y = [&](double v) {
        return vp.y0 + (1.0 - (v - y_lo) / (y_hi - y_lo)) * vp.h;
    };
    svg << "  <g stroke=\"#444\" stroke-width=\"1\">\n"
        << "    <line x1=\"" << vp.x0 << "\" y1=\"" << vp.y0 << "\" x2=\"" << vp.x0
        << "\" y2=\"" << vp.y0 + vp.h << "\"/>\n"
        << "    <line x1=\"" << vp.x0 << "\" y1=\"" << vp.y0 + vp.h << "\" x2=\""
        << vp.x0 + vp.w << "\" y2=\"" << vp.y0 + vp.h << "\"/>\n"
        << "  </g>\n";
    svg << "  <g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double t : y_ticks) {
        const double y = map_y(t);
        svg << "    <line x1=\"" << vp.x0 - 4 << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
            << vp.x0 << "\" y2=\"" << fmt_coord(y) << "\" stroke=\"#444\"/>\n"
            << "    <line x1=\"" << vp.x0 << "\" y1=\"" << fmt_coord(y) << "\" x2=\""
            << vp.x0 + vp.w << "\" y2=\"" << fmt_coord(y)
            << "\" stroke=\"#ddd\" stroke-dasharray=\"3,3\"/>\n"
            << "    <text x=\"" << vp.x0 - 8 << "\" y=\"" << fmt_coord(y + 4)
            << "\" text-anchor=\"end\">" << fmt_coord(t) << "</text>\n";
    }
    svg << "    <text x=\"16\" y=\"" << vp.y0 + vp.h / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << vp.y0 + vp.h / 2
        << ")\">" << xml_escape(y_label) << "</text>\n"
        << "  </g>\n";
}

void write_file(const std::string& text, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace

std::string experiment_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "run,policy,realized_utility,high_severity_denied,auroc\n";
    for (const RunRecord& row : report.rows())
        out << row.run << ',' << row.policy << ',' << fmt(row.realized_utility) << ','
            << row.high_severity_denied << ',' << fmt(row.auroc) << '\n';
    return out.str();
}

std::string sweep_csv(const SweepReport& report) {
    std::ostringstream out;
    out << "ratio,policy,mean_utility,std_utility,advantage_pct\n";
    for (const SweepRatioResult& row : report.rows)
        for (const auto& [policy, summary] : row.per_policy)
            out << fmt(row.ratio) << ',' << policy << ',' << fmt(summary.mean) << ','
                << fmt(summary.stddev) << ',' << fmt(row.advantage_pct) << '\n';
    return out.str();
}

std::string metrics_csv(const MetricReport& report) {
    std::ostringstream out;
    out << "cau_mean,cau_std,evi,evi_stderr,aer\n"
        << fmt(report.cau_mean) << ',' << fmt(report.cau_std) << ',' << fmt(report.evi)
        << ',' << fmt(report.evi_stderr) << ',' << fmt(report.aer) << '\n';
    return out.str();
}

std::string experiment_chart_svg(const ExperimentReport& report) {
    std::ostringstream svg;
    open_svg(svg, "Realized utility by policy (mean +/- 1 std, " +
                      std::to_string(report.run_aurocs.size()) + " runs)");
    const Viewport vp;

    double lo = 0.0, hi = 1.0;
    if (!report.policies.empty()) {
        lo = 0.0;
        hi = -std::numeric_limits<double>::infinity();
        for (const auto& [name, s] : report.per_policy) {
            lo = std::min(lo, s.mean - s.stddev);
            hi = std::max(hi, s.mean + s.stddev);
        }
        if (!(hi > lo)) hi = lo + 1.0;
        hi += (hi - lo) * 0.08;
    }
    const auto ticks = nice_ticks(lo, hi);
    draw_axes(svg, vp, ticks, lo, hi, "realized utility");
    auto map_y = [&](double v) { return vp.y0 + (1.0 - (v - lo) / (hi - lo)) * vp.h; };

    const std::size_t n = report.policies.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& name = report.policies[k];
        const PolicySummary& s = report.per_policy.at(name);
        const double slot = vp.w / static_cast<double>(n);
        const double cx = vp.x0 + slot * (static_cast<double>(k) + 0.5);
        const double bw = slot * 0.5;
        const double y_top = map_y(std::max(s.mean, 0.0));
        const double y_zero = map_y(std::min(std::max(0.0, lo), hi));
        const double y_mean = map_y(s.mean);
        svg << "  <rect x=\"" << fmt_coord(cx - bw / 2) << "\" y=\""
            << fmt_coord(std::min(y_top, y_zero)) << "\" width=\"" << fmt_coord(bw)
            << "\" height=\"" << fmt_coord(std::abs(y_zero - y_mean))
            << "\" fill=\"#4e79a7\" fill-opacity=\"0.85\"/>\n";
        const double y_hi = map_y(s.mean + s.stddev);
        const double y_lo2 = map_y(s.mean - s.stddev);
        svg << "  <g stroke=\"#222\" stroke-width=\"1.5\">\n"
            << "    <line x1=\"" << fmt_coord(cx) << "\" y1=\"" << fmt_coord(y_hi)
            << "\" x2=\"" << fmt_coord(cx) << "\" y2=\"" << fmt_coord(y_lo2) << "\"/>\n"
            << "    <line x1=\"" << fmt_coord(cx - 7) << "\" y1=\"" << fmt_coord(y_hi)
            << "\" x2=\"" << fmt_coord(cx + 7) << "\" y2=\"" << fmt_coord(y_hi)
            << "\"/>\n"
            << "    <line x1=\"" << fmt_coord(cx - 7) << "\" y1=\"" << fmt_coord(y_lo2)
            << "\" x2=\"" << fmt_coord(cx + 7) << "\" y2=\"" << fmt_coord(y_lo2)
            << "\"/>\n"
            << "  </g>\n";
        svg << "  <text x=\"" << fmt_coord(cx) << "\" y=\"" << vp.y0 + vp.h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << xml_escape(name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string sweep_chart_svg(const SweepReport& report) {
    std::ostringstream svg;
    open_svg(svg, "Greedy advantage over threshold vs capacity-to-demand ratio");
    const Viewport vp;

    double lo = 0.0, hi = 1.0;
    double x_lo = 0.0, x_hi = 1.0;
    if (!report.rows.empty()) {
        lo = std::numeric_limits<double>::infinity();
        hi = -lo;
        for (const auto& row : report.rows) {
            lo = std::min(lo, row.advantage_pct);
            hi = std::max(hi, row.advantage_pct);
        }
        lo = std::min(lo, 0.0);
        if (!(hi > lo)) hi = lo + 1.0;
        hi += (hi - lo) * 0.08;
        x_lo = 0.0;
        x_hi = report.rows.back().ratio * 1.05;
    }
    const auto ticks = nice_ticks(lo, hi);
    draw_axes(svg, vp, ticks, lo, hi, "advantage (%)");
    auto map_x = [&](double v) { return vp.x0 + (v - x_lo) / (x_hi - x_lo) * vp.w; };
    auto map_y = [&](double v) { return vp.y0 + (1.0 - (v - lo) / (hi - lo)) * vp.h; };

    if (!report.rows.empty()) {
        svg << "  <polyline fill=\"none\" stroke=\"#e15759\" stroke-width=\"2\" points=\"";
        for (const auto& row : report.rows)
            svg << fmt_coord(map_x(row.ratio)) << ',' << fmt_coord(map_y(row.advantage_pct))
                << ' ';
        svg << "\"/>\n";
        for (const auto& row : report.rows) {
            svg << "  <circle cx=\"" << fmt_coord(map_x(row.ratio)) << "\" cy=\""
                << fmt_coord(map_y(row.advantage_pct))
                << "\" r=\"3.5\" fill=\"#e15759\"/>\n";
            svg << "  <text x=\"" << fmt_coord(map_x(row.ratio)) << "\" y=\""
                << vp.y0 + vp.h + 18
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                   "font-size=\"11\">" << fmt_coord(row.ratio) << "</text>\n";
        }
    }
    svg << "  <text x=\"" << vp.x0 + vp.w / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
           "capacity-to-demand ratio</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string meta_text(const ExperimentReport& report) {
    std::ostringstream out;
    out << "scarcealloc " << SCARCEALLOC_VERSION << "\n\n[config]\n"
        << config_to_string(report.config) << "\n[results]\n";
    for (const auto& name : report.policies) {
        const PolicySummary& s = report.per_policy.at(name);
        out << name << ".mean=" << fmt(s.mean) << '\n'
            << name << ".std=" << fmt(s.stddev) << '\n';
    }
    const bool has_greedy = report.per_policy.count("greedy") > 0;
    if (has_greedy && report.per_policy.count("threshold"))
        out << "gain_greedy_vs_threshold_pct="
            << fmt(report.relative_gain_pct("greedy", "threshold")) << '\n';
    if (has_greedy && report.per_policy.count("random"))
        out << "gain_greedy_vs_random_pct="
            << fmt(report.relative_gain_pct("greedy", "random")) << '\n';
    double auroc_sum = 0.0;
    for (double a : report.run_aurocs) auroc_sum += a;
    if (!report.run_aurocs.empty())
        out << "mean_achieved_auroc="
            << fmt(auroc_sum / static_cast<double>(report.run_aurocs.size())) << '\n';
    return out.str();
}

std::string meta_text(const SweepReport& report) {
    std::ostringstream out;
    out << "scarcealloc " << SCARCEALLOC_VERSION << "\n\n[config]\n"
        << config_to_string(report.config) << "\n[sweep]\n"
        << "runs_per_ratio=" << report.runs_per_ratio << '\n';
    for (const auto& row : report.rows) {
        out << "ratio_" << fmt_coord(row.ratio) << ".capacities=";
        for (std::size_t j = 0; j < row.capacities.size(); ++j) {
            if (j) out << ',';
            out << row.capacities[j];
        }
        out << '\n'
            << "ratio_" << fmt_coord(row.ratio) << ".advantage_pct="
            << fmt(row.advantage_pct) << '\n';
    }
    return out.str();
}

void emit_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    write_file(experiment_csv(report), path);
}
void emit_csv(const SweepReport& report, const std::filesystem::path& path) {
    write_file(sweep_csv(report), path);
}
void emit_csv(const MetricReport& report, const std::filesystem::path& path) {
    write_file(metrics_csv(report), path);
}
void emit_chart(const ExperimentReport& report, const std::filesystem::path& path) {
    write_file(experiment_chart_svg(report), path);
}
void emit_chart(const SweepReport& report, const std::filesystem::path& path) {
    write_file(sweep_chart_svg(report), path);
}
void write_text_file(const std::string& text, const std::filesystem::path& path) {
    write_file(text, path);
}

} // namespace scarcealloc
