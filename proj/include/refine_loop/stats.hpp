#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace refine_loop {

/// One benchmark paper scored before and after refinement.
struct ScoreRecord {
    std::string paper_id;
    double baseline = 0.0;
    double treatment = 0.0;
};

double mean(const std::vector<double>& values);

/// Middle of the sorted list; mean of the two middle elements for even length.
double median(const std::vector<double>& values);

/// Relative change of means, in percent:
/// 100 * (mean(treatments) - mean(baselines)) / mean(baselines).
double avg_improvement(const std::vector<ScoreRecord>& records);

struct WinRate {
    long wins = 0;
    long total = 0;
    std::string display;  // "17/20 (85.0%)"
};

/// Wins are strict: ties count as non-wins.
WinRate win_rate(const std::vector<ScoreRecord>& records);

/// Maximum per-record relative improvement, in percent. Every baseline must
/// be nonzero.
double max_improvement(const std::vector<ScoreRecord>& records);

/// Always-signed percent with two decimals: "+15.25%", "-3.96%".
std::string format_signed_percent(double value);

/// "paper_id, relative_score_percent" header plus one "id, +NN.NN" row per
/// record, sorted by paper_id.
std::string per_paper_table(const std::vector<ScoreRecord>& records);

/// (paper_id, percent) pairs from a table emitted above (header required).
std::vector<std::pair<std::string, double>> parse_per_paper_table(const std::string& text);

std::vector<ScoreRecord> parse_scores_csv(const std::string& text);
std::vector<ScoreRecord> parse_scores_json(const std::string& text);

/// CSV (header paper_id,baseline,treatment) or a JSON array of the same
/// triples, sniffed by leading character.
std::vector<ScoreRecord> load_scores(const std::filesystem::path& path);

/// Violations for scores outside [low, high]; empty when all in range.
std::vector<std::string> check_scale(const std::vector<ScoreRecord>& records, double low,
                                     double high);

/// {average_baseline, average_treatment, median_baseline, median_treatment,
///  win_rate, avg_improvement, max_improvement}; improvements rounded to two
/// decimals.
std::string stats_summary_json(const std::vector<ScoreRecord>& records);

}  // namespace refine_loop
