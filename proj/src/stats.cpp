#include "refine_loop/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

using nlohmann::json;

namespace {

std::vector<double> baselines_of(const std::vector<ScoreRecord>& records) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& record : records) values.push_back(record.baseline);
    return values;
}

std::vector<double> treatments_of(const std::vector<ScoreRecord>& records) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& record : records) values.push_back(record.treatment);
    return values;
}

double parse_number(const std::string& token, const std::string& context) {
    try {
        std::size_t consumed = 0;
        double value = std::stod(token, &consumed);
        if (consumed != token.size() || !std::isfinite(value)) {
            throw std::invalid_argument(token);
        }
        return value;
    } catch (const std::exception&) {
        throw ValidationError("malformed score value \"" + token + "\" in " + context);
    }
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return lines;
}

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        auto comma = line.find(',', pos);
        if (comma == std::string::npos) {
            fields.push_back(util::trim(line.substr(pos)));
            break;
        }
        fields.push_back(util::trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return fields;
}

std::string strip_spaces(const std::string& text) {
    std::string out;
    for (char c : text) {
        if (c != ' ' && c != '\t' && c != '\r') out.push_back(c);
    }
    return out;
}

double round2(double value) { return std::round(value * 100.0) / 100.0; }

}  // namespace

double mean(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("mean of empty list");
    double sum = 0.0;
    for (double value : values) sum += value;
    return sum / static_cast<double>(values.size());
}

double median(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("median of empty list");
    auto sorted = values;
    std::sort(sorted.begin(), sorted.end());
    auto n = sorted.size();
    if (n % 2 == 1) return sorted[n / 2];
    return (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
}

double avg_improvement(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw ValidationError("avg_improvement of empty record list");
    double baseline_mean = mean(baselines_of(records));
    if (baseline_mean == 0.0) throw ValidationError("zero baseline mean");
    double treatment_mean = mean(treatments_of(records));
    return 100.0 * (treatment_mean - baseline_mean) / baseline_mean;
}

WinRate win_rate(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw ValidationError("win_rate of empty record list");
    WinRate result;
    result.total = static_cast<long>(records.size());
    for (const auto& record : records) {
        if (record.treatment > record.baseline) ++result.wins;
    }
    double percent = 100.0 * static_cast<double>(result.wins) /
                     static_cast<double>(result.total);
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%ld/%ld (%.1f%%)", result.wins, result.total, percent);
    result.display = buffer;
    return result;
}

double max_improvement(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw ValidationError("max_improvement of empty record list");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& record : records) {
        if (record.baseline == 0.0) {
            throw ValidationError("zero baseline for paper: " + record.paper_id);
        }
        best = std::max(best, 100.0 * (record.treatment - record.baseline) / record.baseline);
    }
    return best;
}

std::string format_signed_percent(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%+.2f%%", value);
    return buffer;
}

std::string per_paper_table(const std::vector<ScoreRecord>& records) {
    if (records.empty()) throw ValidationError("per_paper_table of empty record list");
    auto sorted = records;
    std::sort(sorted.begin(), sorted.end(),
              [](const ScoreRecord& a, const ScoreRecord& b) { return a.paper_id < b.paper_id; });
    std::string out = "paper_id, relative_score_percent\n";
    for (const auto& record : sorted) {
        if (record.baseline == 0.0) {
            throw ValidationError("zero baseline for paper: " + record.paper_id);
        }
        double percent = 100.0 * (record.treatment - record.baseline) / record.baseline;
        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%+.2f", percent);
        out += record.paper_id + ", " + buffer + "\n";
    }
    return out;
}

std::vector<std::pair<std::string, double>> parse_per_paper_table(const std::string& text) {
    auto lines = split_lines(text);
    std::vector<std::pair<std::string, double>> rows;
    bool header_seen = false;
    for (const auto& line : lines) {
        if (util::trim(line).empty()) continue;
        if (!header_seen) {
            if (strip_spaces(line) != "paper_id,relative_score_percent") {
                throw ValidationError("per-paper table missing header");
            }
            header_seen = true;
            continue;
        }
        auto fields = split_csv_row(line);
        if (fields.size() != 2) {
            throw ValidationError("malformed per-paper row: " + line);
        }
        rows.emplace_back(fields[0], parse_number(fields[1], "per-paper table"));
    }
    if (!header_seen) throw ValidationError("per-paper table missing header");
    return rows;
}

std::vector<ScoreRecord> parse_scores_csv(const std::string& text) {
    auto lines = split_lines(text);
    std::vector<ScoreRecord> records;
    bool header_seen = false;
    for (const auto& line : lines) {
        if (util::trim(line).empty()) continue;
        if (!header_seen) {
            if (strip_spaces(line) != "paper_id,baseline,treatment") {
                throw ValidationError(
                    "score file missing header paper_id,baseline,treatment");
            }
            header_seen = true;
            continue;
        }
        auto fields = split_csv_row(line);
        if (fields.size() != 3 || fields[0].empty()) {
            throw ValidationError("malformed score row: " + line);
        }
        ScoreRecord record;
        record.paper_id = fields[0];
        record.baseline = parse_number(fields[1], "row for " + fields[0]);
        record.treatment = parse_number(fields[2], "row for " + fields[0]);
        records.push_back(std::move(record));
    }
    if (!header_seen) {
        throw ValidationError("score file missing header paper_id,baseline,treatment");
    }
    if (records.empty()) throw ValidationError("score file has no records");
    return records;
}

std::vector<ScoreRecord> parse_scores_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& error) {
        throw ValidationError("score file is not valid JSON: " + std::string(error.what()));
    }
    if (!doc.is_array()) throw ValidationError("JSON score file must be an array");
    std::vector<ScoreRecord> records;
    for (const auto& item : doc) {
        ScoreRecord record;
        try {
            if (item.is_object()) {
                record.paper_id = item.at("paper_id").get<std::string>();
                record.baseline = item.at("baseline").get<double>();
                record.treatment = item.at("treatment").get<double>();
            } else if (item.is_array() && item.size() == 3) {
                record.paper_id = item.at(0).get<std::string>();
                record.baseline = item.at(1).get<double>();
                record.treatment = item.at(2).get<double>();
            } else {
                throw ValidationError("JSON score entries must be objects or triples");
            }
        } catch (const json::exception&) {
            throw ValidationError("malformed JSON score entry: " + item.dump());
        }
        if (!std::isfinite(record.baseline) || !std::isfinite(record.treatment)) {
            throw ValidationError("non-finite score for paper: " + record.paper_id);
        }
        records.push_back(std::move(record));
    }
    if (records.empty()) throw ValidationError("score file has no records");
    return records;
}

std::vector<ScoreRecord> load_scores(const std::filesystem::path& path) {
    auto text = util::read_file_or_throw(path, "score file");
    auto start = text.find_first_not_of(" \t\r\n");
    if (start == std::string::npos) throw ValidationError("score file has no records");
    if (text[start] == '[') return parse_scores_json(text);
    return parse_scores_csv(text);
}

std::vector<std::string> check_scale(const std::vector<ScoreRecord>& records, double low,
                                     double high) {
    std::vector<std::string> violations;
    for (const auto& record : records) {
        for (double value : {record.baseline, record.treatment}) {
            if (value < low || value > high) {
                violations.push_back(record.paper_id + ": score " + std::to_string(value) +
                                     " outside [" + std::to_string(low) + ", " +
                                     std::to_string(high) + "]");
                break;
            }
        }
    }
    return violations;
}

std::string stats_summary_json(const std::vector<ScoreRecord>& records) {
    auto baselines = baselines_of(records);
    auto treatments = treatments_of(records);
    json doc{{"average_baseline", mean(baselines)},
             {"average_treatment", mean(treatments)},
             {"median_baseline", median(baselines)},
             {"median_treatment", median(treatments)},
             {"win_rate", win_rate(records).display},
             {"avg_improvement", round2(avg_improvement(records))},
             {"max_improvement", round2(max_improvement(records))}};
    return doc.dump(2) + "\n";
}

}  // namespace refine_loop
