#include "shapeshot/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "shapeshot/errors.hpp"

namespace shapeshot {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) throw FormatError("not a number: '" + s + "'");
    return v;
}

}  // namespace

std::string format_number(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string eval_csv(const EvalReport& report) {
    return "mean,ci95\n" + format_number(report.mean_accuracy) + "," + format_number(report.ci95_halfwidth) + "\n";
}

std::string eval_text(const EvalReport& report) {
    std::ostringstream os;
    os << "tasks              " << report.n_tasks() << "\n"
       << "episode            " << report.config.episode.n_way << "-way " << report.config.episode.k_shot << "-shot, "
       << report.config.episode.q_queries << " queries per class\n"
       << "support augments   " << report.config.tta.n_support_aug << "\n"
       << "query augments     " << report.config.tta.n_query_aug << "\n"
       << "mean accuracy      " << fixed(report.mean_accuracy, 4) << "\n"
       << "ci95 half-width    " << fixed(report.ci95_halfwidth, 4) << "\n";
    return os.str();
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
    std::string out = "source,p,support_tta,query_tta,mean,ci95,n_tasks\n";
    for (const auto& c : cells) {
        out += to_string(c.source) + "," + format_number(c.p) + "," + (c.support_tta ? "1" : "0") + "," +
               (c.query_tta ? "1" : "0") + "," + format_number(c.report.mean_accuracy) + "," +
               format_number(c.report.ci95_halfwidth) + "," + std::to_string(c.report.n_tasks()) + "\n";
    }
    return out;
}

std::string ablation_text(const std::vector<AblationCell>& cells) {
    std::ostringstream os;
    os << "training     p     support-TTA  query-TTA  accuracy (%)\n";
    for (const auto& c : cells) {
        char line[128];
        std::snprintf(line, sizeof line, "%-12s %-5s %-12s %-10s %.2f +- %.2f\n", to_string(c.source).c_str(),
                      fixed(c.p, 2).c_str(), c.support_tta ? "yes" : "no", c.query_tta ? "yes" : "no",
                      100.0 * c.report.mean_accuracy, 100.0 * c.report.ci95_halfwidth);
        os << line;
    }
    return os.str();
}

std::vector<CurvePoint> curve_of(const std::vector<SweepPoint>& points) {
    std::vector<CurvePoint> out;
    for (const auto& pt : points) out.push_back({pt.p, pt.report.mean_accuracy, pt.report.ci95_halfwidth, pt.report.n_tasks()});
    return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
    std::string out = "p,mean,ci95,n_tasks\n";
    for (const auto& c : curve_of(points)) {
        out += format_number(c.p) + "," + format_number(c.mean) + "," + format_number(c.ci95) + "," +
               std::to_string(c.n_tasks) + "\n";
    }
    return out;
}

std::string sweep_text(const std::vector<SweepPoint>& points) {
    std::ostringstream os;
    os << "p     accuracy (%)\n";
    for (const auto& c : curve_of(points)) {
        char line[96];
        std::snprintf(line, sizeof line, "%-5s %.2f +- %.2f\n", fixed(c.p, 2).c_str(), 100.0 * c.mean, 100.0 * c.ci95);
        os << line;
    }
    return os.str();
}

std::vector<CurvePoint> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "p,mean,ci95,n_tasks") throw FormatError("sweep csv: unexpected header");
    std::vector<CurvePoint> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_line(line);
        if (f.size() != 4) throw FormatError("sweep csv: expected 4 fields in '" + line + "'");
        const double n = parse_double(f[3]);
        if (n < 0 || n != std::floor(n)) throw FormatError("sweep csv: bad task count '" + f[3] + "'");
        out.push_back({parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), static_cast<std::size_t>(n)});
    }
    return out;
}

std::string sweep_svg(const std::vector<CurvePoint>& curve_in) {
    auto curve = curve_in;
    std::sort(curve.begin(), curve.end(), [](const CurvePoint& a, const CurvePoint& b) { return a.p < b.p; });
    constexpr double W = 480, H = 320, L = 60, R = 20, T = 20, B = 50;
    double x0 = 0.0, x1 = 1.0, y0 = 1.0, y1 = 0.0;
    if (!curve.empty()) {
        x0 = std::min(0.0, curve.front().p);
        x1 = std::max(1.0, curve.back().p);
        for (const auto& c : curve) {
            y0 = std::min(y0, c.mean - c.ci95);
            y1 = std::max(y1, c.mean + c.ci95);
        }
    } else {
        y0 = 0.0;
    }
    const double pad = std::max(0.01, 0.1 * (y1 - y0));
    y0 = std::max(0.0, y0 - pad);
    y1 = std::min(1.0, y1 + pad);
    if (y1 <= y0) y1 = y0 + 0.01;
    auto sx = [&](double p) { return L + (p - x0) / (x1 - x0) * (W - L - R); };
    auto sy = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
    auto num = [](double v) { return fixed(v, 2); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << " " << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double p = x0 + (x1 - x0) * i / 5.0;
        const double v = y0 + (y1 - y0) * i / 5.0;
        os << "<text x=\"" << num(sx(p)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fixed(p, 1)
           << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << num(sy(v) + 4) << "\" text-anchor=\"end\">" << fixed(100.0 * v, 1)
           << "</text>\n";
    }
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\">stylized episode probability p</text>\n";
    os << "<text x=\"14\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
       << (T + H - B) / 2 << ")\">test accuracy (%)</text>\n";
    if (!curve.empty()) {
        os << "<polygon fill=\"#4c72b0\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
        for (const auto& c : curve) os << num(sx(c.p)) << "," << num(sy(c.mean + c.ci95)) << " ";
        for (auto it = curve.rbegin(); it != curve.rend(); ++it)
            os << num(sx(it->p)) << "," << num(sy(it->mean - it->ci95)) << " ";
        os << "\"/>\n";
        os << "<polyline fill=\"none\" stroke=\"#4c72b0\" stroke-width=\"2\" points=\"";
        for (const auto& c : curve) os << num(sx(c.p)) << "," << num(sy(c.mean)) << " ";
        os << "\"/>\n";
        for (const auto& c : curve)
            os << "<circle cx=\"" << num(sx(c.p)) << "\" cy=\"" << num(sy(c.mean)) << "\" r=\"3\" fill=\"#4c72b0\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string train_log_csv(const TrainResult& result) {
    std::string out = "step,loss,lr,source\n";
    for (const auto& s : result.log) {
        out += std::to_string(s.step) + "," + format_number(s.loss) + "," + format_number(s.lr) + "," +
               (s.source == EpisodeSource::stylized ? "stylized" : "unstylized") + "\n";
    }
    return out;
}

std::string validation_csv(const TrainResult& result) {
    std::string out = "step,accuracy\n";
    for (const auto& v : result.validations) out += std::to_string(v.step) + "," + format_number(v.accuracy) + "\n";
    return out;
}

}  // namespace shapeshot
