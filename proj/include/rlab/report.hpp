#pragma once

#include <string>
#include <vector>

#include "rlab/studies.hpp"

namespace rlab {

/// One run per row: study,variant,env,capacity,oldest_age,ratio,seed,final_score.
void write_runs_csv(const std::string& path, const std::vector<RunResult>& runs);

/// One JSON object per run, including the evaluation return series.
void write_runs_jsonl(const std::string& path, const std::vector<RunResult>& runs);

/// Aggregate rows (one per comparison/cell).
void write_summary_csv(const std::string& path, const std::string& study,
                       const std::vector<ComparisonRow>& rows);

/// Writes runs.csv, runs.jsonl and summary.csv under out_dir, then draws the
/// charts by reading those files back.
void write_study_output(const std::string& out_dir, const StudyOutput& out);

/// Re-emits the SVG charts from the CSV/JSONL files already in out_dir. The
/// chart values are the file tokens verbatim; nothing is recomputed.
void emit_report(const std::string& out_dir);

/// Deterministic float formatting used by every emitter ("%.10g").
std::string fmt_value(double v);

/// Minimal CSV splitting for the report readers and tests (no quoting; the
/// emitted files never contain commas inside fields).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace rlab
