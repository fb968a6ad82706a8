#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

using nlohmann::json;

namespace voxfuse {

void MetricsReport::set_scalar(const std::string& name, double value) { metrics[name] = value; }

void MetricsReport::set_distribution(const std::string& name, Distribution d) {
    d.check_consistent();
    metrics[name] = std::move(d);
}

std::string MetricsReport::to_json() const {
    json m = json::object();
    for (const auto& [name, value] : metrics) {
        if (std::holds_alternative<double>(value)) {
            m[name] = json{{"kind", "scalar"}, {"value", std::get<double>(value)}};
        } else {
            const Distribution& d = std::get<Distribution>(value);
            m[name] = json{{"kind", "distribution"},
                           {"samples", d.samples},
                           {"mean", d.mean},
                           {"stddev", d.stddev}};
        }
    }
    json root{{"provenance",
               json{{"volume_id", provenance.volume_id},
                    {"samples", provenance.samples},
                    {"cube", provenance.cube},
                    {"seed", provenance.seed},
                    {"two_dimensional", provenance.two_dimensional}}},
              {"metrics", m}};
    return root.dump(2);
}

MetricsReport MetricsReport::from_json(const std::string& text) {
    json root = json::parse(text, nullptr, false);
    require(!root.is_discarded(), Errc::format, "malformed metrics report JSON");
    MetricsReport r;
    const json& p = root.at("provenance");
    r.provenance.volume_id = p.at("volume_id").get<std::string>();
    r.provenance.samples = p.at("samples").get<int64_t>();
    r.provenance.cube = p.at("cube").get<int64_t>();
    r.provenance.seed = p.at("seed").get<uint64_t>();
    r.provenance.two_dimensional = p.at("two_dimensional").get<bool>();
    for (const auto& [name, value] : root.at("metrics").items()) {
        const std::string kind = value.at("kind").get<std::string>();
        if (kind == "scalar") {
            r.metrics[name] = value.at("value").get<double>();
        } else if (kind == "distribution") {
            Distribution d =
                Distribution::from_samples(value.at("samples").get<std::vector<double>>());
            // Stored mean/std must match the samples they rode in with.
            require(std::abs(d.mean - value.at("mean").get<double>()) <= 1e-9 &&
                        std::abs(d.stddev - value.at("stddev").get<double>()) <= 1e-9,
                    Errc::format, "metric '" + name + "': stored moments disagree with samples");
            r.metrics[name] = std::move(d);
        } else {
            fail(Errc::format, "metric '" + name + "': unknown kind '" + kind + "'");
        }
    }
    return r;
}

void MetricsReport::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
    out << to_json() << '\n';
    require(out.good(), Errc::io, "short write to '" + path + "'");
}

MetricsReport MetricsReport::load(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char c : s) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted += '"';
}

} // namespace

void MetricsReport::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
    out << "metric,kind,value_or_mean,stddev,samples\n";
    for (const auto& [name, value] : metrics) {
        if (std::holds_alternative<double>(value))
            out << csv_field(name) << ",scalar," << fmt(std::get<double>(value)) << ",,\n";
        else {
            const Distribution& d = std::get<Distribution>(value);
            out << csv_field(name) << ",distribution," << fmt(d.mean) << ',' << fmt(d.stddev)
                << ',' << d.samples.size() << '\n';
        }
    }
    require(out.good(), Errc::io, "short write to '" + path + "'");
}

void CurveSet::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
    out << csv_field(x_label);
    for (const auto& [label, ys] : series) {
        require(ys.size() == x.size(), Errc::invalid_argument,
                "curve '" + label + "' length differs from the x grid");
        out << ',' << csv_field(label);
    }
    out << '\n';
    for (size_t i = 0; i < x.size(); ++i) {
        out << fmt(x[i]);
        for (const auto& [label, ys] : series) {
            (void)label;
            out << ',' << fmt(ys[i]);
        }
        out << '\n';
    }
    require(out.good(), Errc::io, "short write to '" + path + "'");
}

namespace {

// One CSV record honoring quoted fields; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in, line)) return false;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"')
                quoted = false;
            else
                field += c;
        } else if (c == '"')
            quoted = true;
        else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else
            field += c;
    }
    fields.push_back(std::move(field));
    return true;
}

} // namespace

CurveSet CurveSet::read_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), Errc::io, "cannot open '" + path + "'");
    std::vector<std::string> header;
    require(read_record(in, header) && header.size() >= 2, Errc::format,
            "'" + path + "' is not a curve table");
    CurveSet c;
    c.x_label = header[0];
    std::vector<std::string> order(header.begin() + 1, header.end());
    for (const auto& label : order) c.series[label] = {};
    std::vector<std::string> row;
    while (read_record(in, row)) {
        if (row.size() == 1 && row[0].empty()) continue;
        require(row.size() == header.size(), Errc::format,
                "'" + path + "': ragged row with " + std::to_string(row.size()) + " fields");
        c.x.push_back(std::stod(row[0]));
        for (size_t i = 0; i < order.size(); ++i) c.series[order[i]].push_back(std::stod(row[i + 1]));
    }
    return c;
}

namespace {

const char* k_colors[] = {"#3565a0", "#c8542c", "#3c8d4f", "#8550a0", "#a0852c", "#527d8d"};

// Gaussian kernel density over `points` evaluation sites between lo and hi.
std::vector<double> density_profile(const std::vector<double>& samples, double lo, double hi,
                                    int points) {
    std::vector<double> dens(size_t(points), 0.0);
    const double n = double(samples.size());
    double mean = 0.0, var = 0.0;
    for (double s : samples) mean += s;
    mean /= n;
    for (double s : samples) var += (s - mean) * (s - mean);
    var = samples.size() > 1 ? var / (n - 1.0) : 0.0;
    double bw = 1.06 * std::sqrt(var) * std::pow(n, -0.2);
    if (bw <= 0.0) bw = std::max(1e-12, (hi - lo) / 100.0);
    for (int i = 0; i < points; ++i) {
        const double t = lo + (hi - lo) * double(i) / double(points - 1);
        double acc = 0.0;
        for (double s : samples) {
            const double u = (t - s) / bw;
            acc += std::exp(-0.5 * u * u);
        }
        dens[size_t(i)] = acc / (n * bw);
    }
    return dens;
}

struct SvgWriter {
    std::ostringstream body;
    double width, height;

    SvgWriter(double w, double h) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const char* color, double sw = 1.0) {
        body << "<line x1='" << x1 << "' y1='" << y1 << "' x2='" << x2 << "' y2='" << y2
             << "' stroke='" << color << "' stroke-width='" << sw << "'/>\n";
    }
    void text(double x, double y, const std::string& s, int size = 11,
              const char* anchor = "middle", const char* color = "#222222") {
        body << "<text x='" << x << "' y='" << y << "' font-size='" << size
             << "' font-family='sans-serif' text-anchor='" << anchor << "' fill='" << color
             << "'>" << escape(s) << "</text>\n";
    }
    void polygon(const std::vector<std::pair<double, double>>& pts, const char* fill,
                 double opacity) {
        body << "<polygon points='";
        for (const auto& [x, y] : pts) body << x << ',' << y << ' ';
        body << "' fill='" << fill << "' fill-opacity='" << opacity << "' stroke='" << fill
             << "' stroke-width='0.8'/>\n";
    }
    void polyline(const std::vector<std::pair<double, double>>& pts, const char* color,
                  double sw = 1.5) {
        body << "<polyline points='";
        for (const auto& [x, y] : pts) body << x << ',' << y << ' ';
        body << "' fill='none' stroke='" << color << "' stroke-width='" << sw << "'/>\n";
    }
    void plus_marker(double x, double y, double r, const char* color) {
        line(x - r, y, x + r, y, color, 2.0);
        line(x, y - r, x, y + r, color, 2.0);
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
            }
        }
        return out;
    }

    void save(const std::string& path) {
        std::ofstream out(path, std::ios::trunc);
        require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
        out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
            << height << "' viewBox='0 0 " << width << ' ' << height << "'>\n"
            << "<rect width='" << width << "' height='" << height << "' fill='white'/>\n"
            << body.str() << "</svg>\n";
        require(out.good(), Errc::io, "short write to '" + path + "'");
    }
};

} // namespace

void emit_violin_figure(const std::vector<std::pair<std::string, const MetricsReport*>>& sources,
                        const std::vector<std::string>& metric_names, const std::string& title,
                        const std::string& svg_path) {
    require(!sources.empty() && !metric_names.empty(), Errc::invalid_argument,
            "violin figure needs at least one source and one metric");

    const double panel_w = 90.0 * double(sources.size()) + 70.0;
    const double panel_h = 260.0;
    const double top = 50.0, left = 20.0, gap = 24.0;
    const double width = left + (panel_w + gap) * double(metric_names.size());
    const double height = top + panel_h + 70.0;
    SvgWriter svg(width, height);
    svg.text(width / 2.0, 24.0, title, 15);

    for (size_t mi = 0; mi < metric_names.size(); ++mi) {
        const std::string& metric = metric_names[mi];
        const double px = left + (panel_w + gap) * double(mi);
        // Value range across all sources carrying this metric.
        double lo = 0.0, hi = 0.0;
        bool seen = false;
        for (const auto& [label, report] : sources) {
            (void)label;
            auto it = report->metrics.find(metric);
            if (it == report->metrics.end()) continue;
            auto grow = [&](double v) {
                lo = seen ? std::min(lo, v) : v;
                hi = seen ? std::max(hi, v) : v;
                seen = true;
            };
            if (std::holds_alternative<double>(it->second))
                grow(std::get<double>(it->second));
            else
                for (double s : std::get<Distribution>(it->second).samples) grow(s);
        }
        require(seen, Errc::invalid_argument,
                "metric '" + metric + "' appears in no source");
        if (hi - lo < 1e-12) {
            const double pad = std::max(1e-6, std::abs(hi) * 0.05);
            lo -= pad;
            hi += pad;
        } else {
            const double pad = (hi - lo) * 0.08;
            lo -= pad;
            hi += pad;
        }
        auto to_y = [&](double v) { return top + panel_h * (1.0 - (v - lo) / (hi - lo)); };

        // Panel frame and scale.
        svg.line(px + 46, top, px + 46, top + panel_h, "#444444");
        svg.line(px + 46, top + panel_h, px + panel_w, top + panel_h, "#444444");
        svg.text(px + 42, to_y(lo) + 4, fmt(lo), 9, "end");
        svg.text(px + 42, to_y(hi) + 4, fmt(hi), 9, "end");
        svg.text(px + panel_w / 2.0, top + panel_h + 34.0, metric, 11);

        for (size_t si = 0; si < sources.size(); ++si) {
            const auto& [label, report] = sources[si];
            auto it = report->metrics.find(metric);
            if (it == report->metrics.end()) continue;
            const char* color = k_colors[si % 6];
            const double cx = px + 46 + 90.0 * (double(si) + 0.55);
            if (std::holds_alternative<double>(it->second)) {
                svg.plus_marker(cx, to_y(std::get<double>(it->second)), 7.0, color);
            } else {
                const Distribution& d = std::get<Distribution>(it->second);
                const int pts = 48;
                const auto dens = density_profile(d.samples, lo, hi, pts);
                const double peak = *std::max_element(dens.begin(), dens.end());
                const double half_w = 34.0;
                std::vector<std::pair<double, double>> poly;
                for (int i = 0; i < pts; ++i) {
                    const double v = lo + (hi - lo) * double(i) / double(pts - 1);
                    poly.emplace_back(cx - half_w * dens[size_t(i)] / peak, to_y(v));
                }
                for (int i = pts - 1; i >= 0; --i) {
                    const double v = lo + (hi - lo) * double(i) / double(pts - 1);
                    poly.emplace_back(cx + half_w * dens[size_t(i)] / peak, to_y(v));
                }
                svg.polygon(poly, color, 0.35);
                svg.line(cx - 10, to_y(d.mean), cx + 10, to_y(d.mean), color, 2.0);
            }
            if (mi == 0)
                svg.text(px + 46 + 90.0 * (double(si) + 0.55), top + panel_h + 50.0, label, 10,
                         "middle", color);
        }
    }
    svg.save(svg_path);
}

void emit_curve_figure(const CurveSet& curves, const std::string& title,
                       const std::string& svg_path) {
    require(!curves.series.empty() && !curves.x.empty(), Errc::invalid_argument,
            "curve figure needs data");
    const double width = 560, height = 360, left = 64, top = 44, pw = width - left - 24,
                 ph = height - top - 64;
    double xlo = curves.x.front(), xhi = curves.x.back();
    if (xhi - xlo < 1e-12) xhi = xlo + 1.0;
    double ylo = 0.0, yhi = 0.0;
    bool seen = false;
    for (const auto& [label, ys] : curves.series) {
        require(ys.size() == curves.x.size(), Errc::invalid_argument,
                "curve '" + label + "' length differs from the x grid");
        for (double v : ys) {
            ylo = seen ? std::min(ylo, v) : v;
            yhi = seen ? std::max(yhi, v) : v;
            seen = true;
        }
    }
    if (yhi - ylo < 1e-12) {
        ylo -= 0.5;
        yhi += 0.5;
    } else {
        const double pad = (yhi - ylo) * 0.06;
        ylo -= pad;
        yhi += pad;
    }
    SvgWriter svg(width, height);
    svg.text(width / 2.0, 24.0, title, 14);
    auto to_x = [&](double v) { return left + pw * (v - xlo) / (xhi - xlo); };
    auto to_y = [&](double v) { return top + ph * (1.0 - (v - ylo) / (yhi - ylo)); };
    svg.line(left, top, left, top + ph, "#444444");
    svg.line(left, top + ph, left + pw, top + ph, "#444444");
    svg.text(left - 6, to_y(ylo) + 4, fmt(ylo), 9, "end");
    svg.text(left - 6, to_y(yhi) + 4, fmt(yhi), 9, "end");
    svg.text(to_x(xlo), top + ph + 16, fmt(xlo), 9);
    svg.text(to_x(xhi), top + ph + 16, fmt(xhi), 9);
    svg.text(left + pw / 2.0, top + ph + 34, curves.x_label, 11);
    svg.text(16, top + ph / 2.0, curves.y_label, 11, "middle");

    size_t si = 0;
    for (const auto& [label, ys] : curves.series) {
        const char* color = k_colors[si % 6];
        std::vector<std::pair<double, double>> pts;
        for (size_t i = 0; i < curves.x.size(); ++i)
            pts.emplace_back(to_x(curves.x[i]), to_y(ys[i]));
        svg.polyline(pts, color);
        svg.text(left + pw - 8, top + 14 + 14 * double(si), label, 10, "end", color);
        ++si;
    }
    svg.save(svg_path);
}

void write_comparison_csv(
    const std::vector<std::pair<std::string, const MetricsReport*>>& sources,
    const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), Errc::io, "cannot open '" + path + "' for writing");
    out << "source,metric,kind,value_or_mean,stddev,samples\n";
    for (const auto& [label, report] : sources) {
        for (const auto& [name, value] : report->metrics) {
            out << csv_field(label) << ',' << csv_field(name) << ',';
            if (std::holds_alternative<double>(value))
                out << "scalar," << fmt(std::get<double>(value)) << ",,\n";
            else {
                const Distribution& d = std::get<Distribution>(value);
                out << "distribution," << fmt(d.mean) << ',' << fmt(d.stddev) << ','
                    << d.samples.size() << '\n';
            }
        }
    }
    require(out.good(), Errc::io, "short write to '" + path + "'");
}

} // namespace voxfuse
