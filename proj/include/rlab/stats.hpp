#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rlab/rng.hpp"

namespace rlab {

/// Per-seed final scores of one environment setting.
struct EnvScores {
    std::string env;
    std::vector<double> scores;
};
using ScoreTable = std::vector<EnvScores>;

/// Linear-interpolation percentile (rank = p/100 * (n-1)). p in [0, 100].
/// Throws std::invalid_argument on empty input.
double percentile(std::vector<double> values, double p);

struct PercentileSummary {
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
};
PercentileSummary percentile_summary(const std::vector<double>& values);

double mean(const std::vector<double>& values);

struct RelativeImprovement {
    std::vector<std::pair<std::string, double>> per_env; // percent per env
    std::vector<std::string> excluded_envs;              // |baseline mean| below floor
};

/// Per-env percent change of mean scores: 100 * (mean_new - mean_base) /
/// |mean_base|. Environments whose baseline mean is within score_floor of
/// zero are excluded and reported. Throws when the env intersection is empty.
RelativeImprovement relative_improvement(const ScoreTable& new_scores,
                                         const ScoreTable& base_scores,
                                         double score_floor = 1e-6);

/// A bootstrap draw: per env (ordered as the tables), seed indices drawn
/// with replacement for each side. Exposed so tests can enumerate the full
/// resample space instead of sampling it.
struct ResampleDraw {
    std::vector<std::vector<int>> base_idx;
    std::vector<std::vector<int>> new_idx;
};

ResampleDraw random_resample_draw(const ScoreTable& base, const ScoreTable& new_scores,
                                  Rng& rng);

/// Median over envs of relative improvement, computed under a specific draw.
/// Envs whose resampled baseline mean falls below the floor are dropped from
/// that draw; *valid is false when no env survives.
double median_improvement_for_draw(const ScoreTable& base, const ScoreTable& new_scores,
                                   const ResampleDraw& draw, double score_floor,
                                   bool* valid);

struct BootstrapSummary {
    double mean = 0.0;
    double stddev = 0.0;
    double ci_lo = 0.0; // 2.5th percentile of the bootstrap distribution
    double ci_hi = 0.0; // 97.5th percentile
    int resamples = 0;
};

/// Mean, standard deviation and 95% percentile interval of a bootstrap
/// statistic sample.
BootstrapSummary summarize_bootstrap(std::vector<double> stats);

/// Bootstrap of the median relative improvement: seeds are resampled with
/// replacement per env per side; reports mean and std (and CI) of the median
/// across `resamples` draws.
BootstrapSummary bootstrap_median(const ScoreTable& base, const ScoreTable& new_scores,
                                  int resamples, Rng& rng, double score_floor = 1e-6);

/// Full improvement report for one comparison.
struct ImprovementStats {
    std::vector<std::pair<std::string, double>> per_env;
    std::vector<std::string> excluded_envs;
    double median = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
    BootstrapSummary boot;
};

ImprovementStats improvement_stats(const ScoreTable& base, const ScoreTable& new_scores,
                                   int resamples, Rng& rng, double score_floor = 1e-6);

} // namespace rlab
