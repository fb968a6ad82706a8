#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "metrics.hpp"

namespace voxfuse {

// One evaluated data source: named scalar or sampled-distribution metrics
// plus the sampling provenance. Round-trips through JSON and summarizes to
// CSV.
struct MetricsReport {
    struct Provenance {
        std::string volume_id;
        int64_t samples = 0;
        int64_t cube = 0;
        uint64_t seed = 0;
        bool two_dimensional = false; // source was a 2D slice
    };

    using Value = std::variant<double, Distribution>;

    Provenance provenance;
    std::map<std::string, Value> metrics;

    void set_scalar(const std::string& name, double value);
    void set_distribution(const std::string& name, Distribution d);

    std::string to_json() const;
    static MetricsReport from_json(const std::string& text);

    void save(const std::string& path) const;        // JSON
    static MetricsReport load(const std::string& path);
    void write_csv(const std::string& path) const;   // summary table
};

// One sampled curve (correlation, chord-length, spectral profile).
struct CurveSet {
    std::string x_label;
    std::string y_label;
    std::vector<double> x;
    std::map<std::string, std::vector<double>> series; // label -> y values

    void write_csv(const std::string& path) const;
    static CurveSet read_csv(const std::string& path);
};

// Comparison figure across named reports: distributions render as violins,
// scalars from 2D sources as point markers. Writes an SVG.
void emit_violin_figure(const std::vector<std::pair<std::string, const MetricsReport*>>& sources,
                        const std::vector<std::string>& metric_names, const std::string& title,
                        const std::string& svg_path);

// Multi-series line figure for curves. Writes an SVG.
void emit_curve_figure(const CurveSet& curves, const std::string& title,
                       const std::string& svg_path);

// Cross-source summary table: one row per metric per source.
void write_comparison_csv(
    const std::vector<std::pair<std::string, const MetricsReport*>>& sources,
    const std::string& path);

} // namespace voxfuse
