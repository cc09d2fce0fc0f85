#include "rlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlab {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty input");
    if (p < 0.0 || p > 100.0) throw std::invalid_argument("percentile: p outside [0, 100]");
    std::sort(values.begin(), values.end());
    const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + frac * (values[lo + 1] - values[lo]);
}

PercentileSummary percentile_summary(const std::vector<double>& values) {
    PercentileSummary s;
    s.p25 = percentile(values, 25.0);
    s.p50 = percentile(values, 50.0);
    s.p75 = percentile(values, 75.0);
    return s;
}

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty input");
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

namespace {

const std::vector<double>* find_env(const ScoreTable& table, const std::string& env) {
    for (const EnvScores& e : table)
        if (e.env == env) return &e.scores;
    return nullptr;
}

} // namespace

RelativeImprovement relative_improvement(const ScoreTable& new_scores,
                                         const ScoreTable& base_scores,
                                         double score_floor) {
    RelativeImprovement out;
    for (const EnvScores& b : base_scores) {
        const std::vector<double>* n = find_env(new_scores, b.env);
        if (n == nullptr) continue;
        if (b.scores.empty() || n->empty())
            throw std::invalid_argument("relative_improvement: env " + b.env +
                                        " has no seeds");
        const double mb = mean(b.scores);
        if (std::abs(mb) < score_floor) {
            out.excluded_envs.push_back(b.env);
            continue;
        }
        const double mn = mean(*n);
        out.per_env.emplace_back(b.env, 100.0 * (mn - mb) / std::abs(mb));
    }
    if (out.per_env.empty() && out.excluded_envs.empty())
        throw std::invalid_argument("relative_improvement: no common environments");
    return out;
}

ResampleDraw random_resample_draw(const ScoreTable& base, const ScoreTable& new_scores,
                                  Rng& rng) {
    ResampleDraw d;
    d.base_idx.resize(base.size());
    d.new_idx.resize(new_scores.size());
    for (size_t e = 0; e < base.size(); ++e) {
        const size_t n = base[e].scores.size();
        d.base_idx[e].resize(n);
        for (size_t i = 0; i < n; ++i)
            d.base_idx[e][i] = static_cast<int>(rng.uniform_int(n));
    }
    for (size_t e = 0; e < new_scores.size(); ++e) {
        const size_t n = new_scores[e].scores.size();
        d.new_idx[e].resize(n);
        for (size_t i = 0; i < n; ++i)
            d.new_idx[e][i] = static_cast<int>(rng.uniform_int(n));
    }
    return d;
}

double median_improvement_for_draw(const ScoreTable& base, const ScoreTable& new_scores,
                                   const ResampleDraw& draw, double score_floor,
                                   bool* valid) {
    std::vector<double> improvements;
    for (size_t e = 0; e < base.size(); ++e) {
        const std::vector<double>* n = find_env(new_scores, base[e].env);
        if (n == nullptr) continue;
        size_t ne = 0;
        while (ne < new_scores.size() && new_scores[ne].env != base[e].env) ++ne;
        double mb = 0.0;
        for (int idx : draw.base_idx[e]) mb += base[e].scores[static_cast<size_t>(idx)];
        mb /= static_cast<double>(draw.base_idx[e].size());
        if (std::abs(mb) < score_floor) continue;
        double mn = 0.0;
        for (int idx : draw.new_idx[ne]) mn += (*n)[static_cast<size_t>(idx)];
        mn /= static_cast<double>(draw.new_idx[ne].size());
        improvements.push_back(100.0 * (mn - mb) / std::abs(mb));
    }
    if (improvements.empty()) {
        if (valid != nullptr) *valid = false;
        return 0.0;
    }
    if (valid != nullptr) *valid = true;
    return percentile(std::move(improvements), 50.0);
}

BootstrapSummary summarize_bootstrap(std::vector<double> stats) {
    BootstrapSummary s;
    s.resamples = static_cast<int>(stats.size());
    if (stats.empty()) return s;
    s.mean = mean(stats);
    double var = 0.0;
    for (double v : stats) var += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(stats.size()));
    s.ci_lo = percentile(stats, 2.5);
    s.ci_hi = percentile(stats, 97.5);
    return s;
}

BootstrapSummary bootstrap_median(const ScoreTable& base, const ScoreTable& new_scores,
                                  int resamples, Rng& rng, double score_floor) {
    if (resamples < 1) throw std::invalid_argument("bootstrap_median: resamples must be >= 1");
    std::vector<double> medians;
    medians.reserve(static_cast<size_t>(resamples));
    for (int r = 0; r < resamples; ++r) {
        const ResampleDraw draw = random_resample_draw(base, new_scores, rng);
        bool valid = false;
        const double m = median_improvement_for_draw(base, new_scores, draw, score_floor,
                                                     &valid);
        if (valid) medians.push_back(m);
    }
    return summarize_bootstrap(std::move(medians));
}

ImprovementStats improvement_stats(const ScoreTable& base, const ScoreTable& new_scores,
                                   int resamples, Rng& rng, double score_floor) {
    ImprovementStats s;
    RelativeImprovement rel = relative_improvement(new_scores, base, score_floor);
    s.per_env = std::move(rel.per_env);
    s.excluded_envs = std::move(rel.excluded_envs);
    if (!s.per_env.empty()) {
        std::vector<double> vals;
        vals.reserve(s.per_env.size());
        for (const auto& [env, v] : s.per_env) vals.push_back(v);
        const PercentileSummary p = percentile_summary(vals);
        s.p25 = p.p25;
        s.median = p.p50;
        s.p75 = p.p75;
    }
    s.boot = bootstrap_median(base, new_scores, resamples, rng, score_floor);
    return s;
}

} // namespace rlab
