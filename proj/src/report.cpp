#include "rlab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace rlab {

namespace fs = std::filesystem;

std::string fmt_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

void write_runs_csv(const std::string& path, const std::vector<RunResult>& runs) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("report: cannot open " + path + " for writing");
    f << "study,variant,env,capacity,oldest_age,ratio,seed,final_score\n";
    for (const RunResult& r : runs) {
        f << r.study << ',' << r.variant << ',' << r.env << ',' << r.capacity << ','
          << r.oldest_age << ',' << fmt_value(r.ratio) << ',' << r.seed_index << ','
          << fmt_value(r.final_score) << '\n';
    }
    if (!f) throw std::runtime_error("report: write failed for " + path);
}

void write_runs_jsonl(const std::string& path, const std::vector<RunResult>& runs) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("report: cannot open " + path + " for writing");
    for (const RunResult& r : runs) {
        nlohmann::json j;
        j["study"] = r.study;
        j["variant"] = r.variant;
        j["env"] = r.env;
        j["seed"] = r.seed_index;
        j["rng_seed"] = r.rng_seed;
        j["capacity"] = r.capacity;
        j["oldest_age"] = r.oldest_age;
        j["ratio"] = r.ratio;
        j["eval_returns"] = r.eval_returns;
        j["final_score"] = r.final_score;
        j["env_steps"] = r.env_steps;
        j["gradient_steps"] = r.gradient_steps;
        j["episodes"] = r.episodes;
        j["failed"] = r.failed;
        j["diagnostic"] = r.diagnostic;
        f << j.dump() << '\n';
    }
    if (!f) throw std::runtime_error("report: write failed for " + path);
}

void write_summary_csv(const std::string& path, const std::string& study,
                       const std::vector<ComparisonRow>& rows) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("report: cannot open " + path + " for writing");
    f << "study,label,capacity,oldest_age,ratio,skipped,median,p25,p75,boot_mean,boot_std,"
         "ci_lo,ci_hi,n_envs,excluded_envs\n";
    for (const ComparisonRow& r : rows) {
        std::string excluded;
        for (size_t i = 0; i < r.stats.excluded_envs.size(); ++i) {
            if (i) excluded += ';';
            excluded += r.stats.excluded_envs[i];
        }
        f << study << ',' << r.label << ',' << r.capacity << ',' << r.oldest_age << ','
          << fmt_value(r.ratio) << ',' << (r.skipped ? 1 : 0) << ','
          << fmt_value(r.stats.median) << ',' << fmt_value(r.stats.p25) << ','
          << fmt_value(r.stats.p75) << ',' << fmt_value(r.stats.boot.mean) << ','
          << fmt_value(r.stats.boot.stddev) << ',' << fmt_value(r.stats.boot.ci_lo) << ','
          << fmt_value(r.stats.boot.ci_hi) << ',' << r.stats.per_env.size() << ','
          << excluded << '\n';
    }
    if (!f) throw std::runtime_error("report: write failed for " + path);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("report: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::string cur;
        for (char c : line) {
            if (c == ',') {
                row.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        row.push_back(cur);
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

struct SvgCanvas {
    std::ostringstream body;
    int width, height;

    SvgCanvas(int w, int h) : width(w), height(h) {}

    void rect(double x, double y, double w, double h, const std::string& fill,
              const std::string& stroke = "none") {
        body << "<rect x=\"" << fmt_value(x) << "\" y=\"" << fmt_value(y) << "\" width=\""
             << fmt_value(w) << "\" height=\"" << fmt_value(h) << "\" fill=\"" << fill
             << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke,
              double width_px = 1.0, const std::string& extra = "") {
        body << "<line x1=\"" << fmt_value(x1) << "\" y1=\"" << fmt_value(y1) << "\" x2=\""
             << fmt_value(x2) << "\" y2=\"" << fmt_value(y2) << "\" stroke=\"" << stroke
             << "\" stroke-width=\"" << fmt_value(width_px) << "\"" << extra << "/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 11,
              const std::string& anchor = "middle", const std::string& fill = "#222") {
        body << "<text x=\"" << fmt_value(x) << "\" y=\"" << fmt_value(y)
             << "\" font-size=\"" << size << "\" font-family=\"sans-serif\" text-anchor=\""
             << anchor << "\" fill=\"" << fill << "\">" << s << "</text>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts,
                  const std::string& stroke, double width_px, double opacity = 1.0) {
        body << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
             << fmt_value(width_px) << "\" stroke-opacity=\"" << fmt_value(opacity)
             << "\" points=\"";
        for (const auto& [x, y] : pts) body << fmt_value(x) << ',' << fmt_value(y) << ' ';
        body << "\"/>\n";
    }

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw std::runtime_error("report: cannot open " + path + " for writing");
        f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
          << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' ' << height
          << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
          << body.str() << "</svg>\n";
        if (!f) throw std::runtime_error("report: write failed for " + path);
    }
};

std::string diverging_color(double v, double vmax) {
    // White at zero, blue for gains, red for losses.
    if (vmax <= 0) vmax = 1.0;
    double t = std::clamp(v / vmax, -1.0, 1.0);
    int r, g, b;
    if (t >= 0) {
        r = static_cast<int>(std::lround(255 - 165 * t));
        g = static_cast<int>(std::lround(255 - 115 * t));
        b = 255;
    } else {
        r = 255;
        g = static_cast<int>(std::lround(255 + 125 * t));
        b = static_cast<int>(std::lround(255 + 155 * t));
    }
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

struct SummaryRow {
    std::string label;
    std::string capacity;
    std::string oldest_age;
    std::string ratio;
    bool skipped = false;
    std::string median, p25, p75, ci_lo, ci_hi;
};

std::vector<SummaryRow> load_summary(const std::string& path, std::string* study) {
    const auto rows = read_csv(path);
    std::vector<SummaryRow> out;
    if (rows.size() < 2) return out;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < 15) continue;
        if (study != nullptr && i == 1) *study = r[0];
        SummaryRow s;
        s.label = r[1];
        s.capacity = r[2];
        s.oldest_age = r[3];
        s.ratio = r[4];
        s.skipped = r[5] == "1";
        s.median = r[6];
        s.p25 = r[7];
        s.p75 = r[8];
        s.ci_lo = r[11];
        s.ci_hi = r[12];
        out.push_back(std::move(s));
    }
    return out;
}

void emit_bars_svg(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::vector<SummaryRow> bars;
    for (const SummaryRow& r : rows)
        if (!r.skipped) bars.push_back(r);
    if (bars.empty()) return;
    const int W = 120 + static_cast<int>(bars.size()) * 110;
    const int H = 360;
    SvgCanvas svg(W, H);
    double lo = 0.0, hi = 0.0;
    for (const SummaryRow& r : bars) {
        lo = std::min({lo, std::stod(r.p25), std::stod(r.median)});
        hi = std::max({hi, std::stod(r.p75), std::stod(r.median)});
    }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const double top = 40, bottom = H - 60.0;
    auto ypos = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };
    svg.line(60, ypos(0), W - 20.0, ypos(0), "#888");
    svg.text(30, ypos(0) + 4, "0%", 11, "middle");
    for (size_t i = 0; i < bars.size(); ++i) {
        const SummaryRow& r = bars[i];
        const double x = 80 + static_cast<double>(i) * 110;
        const double med = std::stod(r.median);
        const double p25 = std::stod(r.p25);
        const double p75 = std::stod(r.p75);
        const double y0 = ypos(0), y1 = ypos(med);
        svg.rect(x, std::min(y0, y1), 60, std::max(2.0, std::abs(y0 - y1)),
                 med >= 0 ? "#7ba7d4" : "#d47b7b", "#446");
        svg.line(x + 30, ypos(p25), x + 30, ypos(p75), "#222", 1.5);
        svg.line(x + 22, ypos(p25), x + 38, ypos(p25), "#222", 1.5);
        svg.line(x + 22, ypos(p75), x + 38, ypos(p75), "#222", 1.5);
        svg.text(x + 30, H - 38.0, r.label, 11);
        svg.text(x + 30, std::min(y0, y1) - 6, r.median, 10);
    }
    svg.text(W / 2.0, 20, "median capacity improvement (%), whiskers p25/p75", 12);
    svg.save(path);
}

void emit_heatmap_svg(const std::vector<SummaryRow>& rows, const std::string& path) {
    std::set<long long> caps, ages;
    for (const SummaryRow& r : rows) {
        caps.insert(std::stoll(r.capacity));
        ages.insert(std::stoll(r.oldest_age));
    }
    if (caps.empty() || ages.empty()) return;
    std::vector<long long> cap_v(caps.begin(), caps.end());
    std::vector<long long> age_v(ages.begin(), ages.end());
    const int cell = 96;
    const int W = 140 + static_cast<int>(age_v.size()) * cell;
    const int H = 120 + static_cast<int>(cap_v.size()) * cell;
    SvgCanvas svg(W, H);
    double vmax = 0.0;
    for (const SummaryRow& r : rows)
        if (!r.skipped) vmax = std::max(vmax, std::abs(std::stod(r.median)));
    for (const SummaryRow& r : rows) {
        const size_t ci = static_cast<size_t>(
            std::find(cap_v.begin(), cap_v.end(), std::stoll(r.capacity)) - cap_v.begin());
        const size_t ai = static_cast<size_t>(
            std::find(age_v.begin(), age_v.end(), std::stoll(r.oldest_age)) - age_v.begin());
        const double x = 120.0 + static_cast<double>(ai) * cell;
        const double y = 60.0 + static_cast<double>(ci) * cell;
        if (r.skipped) {
            svg.rect(x, y, cell - 4, cell - 4, "#eee", "#aaa");
            svg.text(x + cell / 2.0 - 2, y + cell / 2.0, "skipped", 10, "middle", "#777");
        } else {
            svg.rect(x, y, cell - 4, cell - 4, diverging_color(std::stod(r.median), vmax),
                     "#aaa");
            svg.text(x + cell / 2.0 - 2, y + cell / 2.0 - 6, r.median, 11);
            svg.text(x + cell / 2.0 - 2, y + cell / 2.0 + 10,
                     "rho=" + r.ratio, 9, "middle", "#555");
        }
    }
    for (size_t i = 0; i < cap_v.size(); ++i)
        svg.text(60, 60.0 + static_cast<double>(i) * cell + cell / 2.0,
                 "N=" + std::to_string(cap_v[i]), 11);
    for (size_t i = 0; i < age_v.size(); ++i)
        svg.text(120.0 + static_cast<double>(i) * cell + cell / 2.0 - 2, 48,
                 "age=" + std::to_string(age_v[i]), 11);
    svg.text(W / 2.0, 20, "median improvement (%) vs baseline cell", 12);
    svg.save(path);
}

const char* kPalette[] = {"#3465a4", "#cc0000", "#4e9a06", "#f57900",
                          "#75507b", "#0aa4a8", "#888a85", "#b5183a"};

void emit_curves_svg(const std::string& jsonl_path, const std::string& out_dir) {
    std::ifstream f(jsonl_path);
    if (!f) return;
    struct Curve {
        std::string variant;
        std::vector<double> values;
    };
    std::map<std::string, std::vector<Curve>> by_env;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("failed", false)) continue;
        Curve c;
        c.variant = j.value("variant", "?");
        c.values = j.value("eval_returns", std::vector<double>{});
        if (c.values.empty()) continue;
        by_env[j.value("env", "?") + "_cap" + std::to_string(j.value("capacity", 0LL))]
            .push_back(std::move(c));
    }
    for (const auto& [env, curves] : by_env) {
        const int W = 640, H = 360;
        SvgCanvas svg(W, H);
        size_t len = 0;
        double lo = 0.0, hi = 1e-9;
        for (const Curve& c : curves) {
            len = std::max(len, c.values.size());
            for (double v : c.values) {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        if (len < 2) continue;
        const double left = 50, right = W - 20.0, top = 40, bottom = H - 40.0;
        auto xpos = [&](size_t i) {
            return left + (right - left) * static_cast<double>(i) /
                              static_cast<double>(len - 1);
        };
        auto ypos = [&](double v) {
            return bottom - (v - lo) / (hi - lo) * (bottom - top);
        };
        std::map<std::string, int> variant_color;
        std::map<std::string, std::vector<double>> sums;
        std::map<std::string, std::vector<int>> counts;
        for (const Curve& c : curves) {
            if (!variant_color.count(c.variant)) {
                const int idx = static_cast<int>(variant_color.size()) % 8;
                variant_color[c.variant] = idx;
            }
            std::vector<std::pair<double, double>> pts;
            for (size_t i = 0; i < c.values.size(); ++i)
                pts.emplace_back(xpos(i), ypos(c.values[i]));
            svg.polyline(pts, kPalette[variant_color[c.variant]], 1.0, 0.25);
            auto& s = sums[c.variant];
            auto& n = counts[c.variant];
            if (s.size() < c.values.size()) {
                s.resize(c.values.size(), 0.0);
                n.resize(c.values.size(), 0);
            }
            for (size_t i = 0; i < c.values.size(); ++i) {
                s[i] += c.values[i];
                n[i] += 1;
            }
        }
        int li = 0;
        for (const auto& [variant, s] : sums) {
            std::vector<std::pair<double, double>> pts;
            for (size_t i = 0; i < s.size(); ++i)
                pts.emplace_back(xpos(i), ypos(s[i] / counts[variant][i]));
            svg.polyline(pts, kPalette[variant_color[variant]], 2.5);
            svg.text(left + 10, top + 14.0 * (li + 1), variant, 11, "start",
                     kPalette[variant_color[variant]]);
            ++li;
        }
        svg.line(left, bottom, right, bottom, "#444");
        svg.line(left, top, left, bottom, "#444");
        svg.text(left - 8, ypos(lo) + 4, fmt_value(lo), 9, "end");
        svg.text(left - 8, ypos(hi) + 4, fmt_value(hi), 9, "end");
        svg.text(W / 2.0, 20, env + " (mean eval return, seed traces)", 12);
        svg.save(out_dir + "/curves_" + env + ".svg");
    }
}

} // namespace

void write_study_output(const std::string& out_dir, const StudyOutput& out) {
    fs::create_directories(out_dir);
    write_runs_csv(out_dir + "/runs.csv", out.runs);
    write_runs_jsonl(out_dir + "/runs.jsonl", out.runs);
    write_summary_csv(out_dir + "/summary.csv", out.study, out.summary);
    emit_report(out_dir);
}

void emit_report(const std::string& out_dir) {
    const std::string summary_path = out_dir + "/summary.csv";
    if (fs::exists(summary_path)) {
        std::string study;
        const std::vector<SummaryRow> rows = load_summary(summary_path, &study);
        if (!rows.empty()) {
            if (study == "grid")
                emit_heatmap_svg(rows, out_dir + "/heatmap.svg");
            else
                emit_bars_svg(rows, out_dir + "/bars.svg");
        }
    }
    const std::string jsonl_path = out_dir + "/runs.jsonl";
    if (fs::exists(jsonl_path)) emit_curves_svg(jsonl_path, out_dir);
}

} // namespace rlab
