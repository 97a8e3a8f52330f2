#include "phaseret/harness.hpp"

#include "phaseret/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace phaseret {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

struct Frame {
    double left = 70, right = 150, top = 40, bottom = 50;
    double width, height;
    double x0, x1, y0, y1;
    bool log_y = false;

    double px(double x) const {
        const double span = x1 > x0 ? x1 - x0 : 1.0;
        return left + (x - x0) / span * (width - left - right);
    }
    double py(double y) const {
        double a = y0, b = y1, v = y;
        if (log_y) {
            a = std::log10(y0);
            b = std::log10(y1);
            v = std::log10(std::max(y, y0));
        }
        const double span = b > a ? b - a : 1.0;
        return height - bottom - (v - a) / span * (height - top - bottom);
    }
};

void open_svg(std::ostringstream& os, const PlotStyle& style, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
       << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << fmt(style.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";
}

void axes(std::ostringstream& os, const Frame& f, const std::vector<int>& ks,
          const std::vector<double>& yticks, const std::string& ylabel) {
    const double xa = f.left, xb = f.width - f.right;
    const double ya = f.height - f.bottom, yb = f.top;
    os << "<g stroke=\"black\" stroke-width=\"1\" fill=\"none\">\n"
       << "<line x1=\"" << fmt(xa) << "\" y1=\"" << fmt(ya) << "\" x2=\"" << fmt(xb) << "\" y2=\"" << fmt(ya)
       << "\"/>\n"
       << "<line x1=\"" << fmt(xa) << "\" y1=\"" << fmt(ya) << "\" x2=\"" << fmt(xa) << "\" y2=\"" << fmt(yb)
       << "\"/>\n</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
    for (int k : ks) {
        const double x = f.px(k);
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(ya) << "\" x2=\"" << fmt(x) << "\" y2=\""
           << fmt(ya + 4) << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(ya + 16) << "\" text-anchor=\"middle\">" << k
           << "</text>\n";
    }
    for (double t : yticks) {
        const double y = f.py(t);
        char label[32];
        if (f.log_y) {
            std::snprintf(label, sizeof label, "1e%d", static_cast<int>(std::lround(std::log10(t))));
        } else {
            std::snprintf(label, sizeof label, "%.1f", t);
        }
        os << "<line x1=\"" << fmt(xa - 4) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(xa) << "\" y2=\""
           << fmt(y) << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << fmt(xa - 7) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">" << label
           << "</text>\n";
    }
    os << "<text x=\"" << fmt((xa + xb) / 2) << "\" y=\"" << fmt(f.height - 12)
       << "\" text-anchor=\"middle\" font-size=\"13\">k</text>\n"
       << "<text x=\"16\" y=\"" << fmt((ya + yb) / 2) << "\" text-anchor=\"middle\" font-size=\"13\" "
       << "transform=\"rotate(-90 16 " << fmt((ya + yb) / 2) << ")\">" << escape(ylabel) << "</text>\n"
       << "</g>\n";
}

void legend(std::ostringstream& os, const Frame& f, const std::vector<std::string>& names) {
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const double x = f.width - f.right + 12;
        const double y = f.top + 10 + 18.0 * static_cast<double>(i);
        os << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x + 20) << "\" y2=\"" << fmt(y)
           << "\" stroke=\"" << kPalette[i % 6] << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << fmt(x + 26) << "\" y=\"" << fmt(y + 4) << "\">" << escape(names[i]) << "</text>\n";
    }
    os << "</g>\n";
}

std::vector<std::string> solvers_of(const Summary& s) {
    std::vector<std::string> out;
    for (const auto& c : s.cells) {
        if (std::find(out.begin(), out.end(), c.solver) == out.end()) out.push_back(c.solver);
    }
    return out;
}

std::vector<int> ks_of(const std::vector<const SummaryCell*>& cells) {
    std::set<int> ks;
    for (const auto* c : cells) ks.insert(c->k);
    return {ks.begin(), ks.end()};
}

std::string polyline(const Frame& f, const std::vector<std::pair<double, double>>& pts, const char* colour) {
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        os << (i ? " " : "") << fmt(f.px(pts[i].first)) << ',' << fmt(f.py(pts[i].second));
    }
    os << "\"/>\n";
    for (const auto& [x, y] : pts) {
        os << "<circle cx=\"" << fmt(f.px(x)) << "\" cy=\"" << fmt(f.py(y)) << "\" r=\"2.5\" fill=\"" << colour
           << "\"/>\n";
    }
    return os.str();
}

std::string sigma_tag(double sigma) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0e", sigma);
    return buf;
}

std::string recovery_svg(const Summary& s, const PlotStyle& style) {
    double sigma = std::numeric_limits<double>::infinity();
    for (const auto& c : s.cells) sigma = std::min(sigma, c.sigma);
    std::vector<const SummaryCell*> cells;
    for (const auto& c : s.cells) {
        if (c.sigma == sigma) cells.push_back(&c);
    }
    const std::vector<int> ks = ks_of(cells);
    Frame f;
    f.width = style.width;
    f.height = style.height;
    f.x0 = ks.front();
    f.x1 = ks.back();
    f.y0 = 0.0;
    f.y1 = 1.0;

    std::ostringstream os;
    std::string title = style.title.empty() ? "Recovery rate" : style.title + ": recovery rate";
    if (sigma > 0.0) title += " (sigma = " + sigma_tag(sigma) + ")";
    open_svg(os, style, title);
    axes(os, f, ks, {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}, "rate");
    const auto names = solvers_of(s);
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (const auto* c : cells) {
            if (c->solver == names[i]) pts.emplace_back(c->k, c->success_rate);
        }
        os << polyline(f, pts, kPalette[i % 6]);
    }
    legend(os, f, names);
    os << "</svg>\n";
    return os.str();
}

std::string error_svg(const Summary& s, double sigma, const PlotStyle& style) {
    std::vector<const SummaryCell*> cells;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& c : s.cells) {
        if (c.sigma != sigma) continue;
        cells.push_back(&c);
        for (double v : {c.q1, c.median, c.q3}) {
            if (v > 0.0) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
    }
    if (!(hi > 0.0)) {
        lo = 1e-16;
        hi = 1.0;
    }
    const std::vector<int> ks = ks_of(cells);
    Frame f;
    f.width = style.width;
    f.height = style.height;
    f.x0 = ks.front();
    f.x1 = ks.back();
    f.log_y = true;
    f.y0 = std::pow(10.0, std::floor(std::log10(lo)));
    f.y1 = std::pow(10.0, std::ceil(std::log10(hi)));
    if (f.y1 <= f.y0) f.y1 = f.y0 * 10.0;
    std::vector<double> ticks;
    const int d0 = static_cast<int>(std::lround(std::log10(f.y0)));
    const int d1 = static_cast<int>(std::lround(std::log10(f.y1)));
    const int step = std::max(1, (d1 - d0) / 6);
    for (int d = d0; d <= d1; d += step) ticks.push_back(std::pow(10.0, d));

    std::ostringstream os;
    const std::string what = "Median relative error, sigma = " + sigma_tag(sigma);
    open_svg(os, style, style.title.empty() ? what : style.title + ": " + what);
    axes(os, f, ks, ticks, "rel. error");
    const auto names = solvers_of(s);
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::vector<const SummaryCell*> mine;
        for (const auto* c : cells) {
            if (c->solver == names[i]) mine.push_back(c);
        }
        if (mine.empty()) continue;
        os << "<polygon fill=\"" << kPalette[i % 6] << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t j = 0; j < mine.size(); ++j) {
            os << (j ? " " : "") << fmt(f.px(mine[j]->k)) << ',' << fmt(f.py(mine[j]->q3));
        }
        for (std::size_t j = mine.size(); j-- > 0;) os << ' ' << fmt(f.px(mine[j]->k)) << ',' << fmt(f.py(mine[j]->q1));
        os << "\"/>\n";
        std::vector<std::pair<double, double>> pts;
        for (const auto* c : mine) pts.emplace_back(c->k, c->median);
        os << polyline(f, pts, kPalette[i % 6]);
    }
    legend(os, f, names);
    os << "</svg>\n";
    return os.str();
}

} // namespace

std::vector<std::pair<std::string, std::string>> render_plots(const Summary& summary, const PlotStyle& style) {
    if (summary.cells.empty()) throw InvalidArgument("cannot plot an empty summary");
    if (style.width < 200 || style.height < 150) throw InvalidArgument("plot too small");
    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("recovery.svg", recovery_svg(summary, style));
    std::set<double> sigmas;
    for (const auto& c : summary.cells) {
        if (c.sigma > 0.0) sigmas.insert(c.sigma);
    }
    for (auto it = sigmas.rbegin(); it != sigmas.rend(); ++it) {
        files.emplace_back("error_sigma_" + sigma_tag(*it) + ".svg", error_svg(summary, *it, style));
    }
    return files;
}

std::vector<std::filesystem::path> emit_plots(const Summary& summary, const PlotStyle& style,
                                              const std::filesystem::path& out_dir) {
    const auto files = render_plots(summary, style);
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [name, text] : files) {
        const auto path = out_dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        if (!out) throw IoError("write failed for " + path.string());
        written.push_back(path);
    }
    return written;
}

} // namespace phaseret
