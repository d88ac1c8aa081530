#include "refine_loop/report.hpp"

#include <json.hpp>

#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

using nlohmann::json;

std::string extract_first_json_object(const std::string& text) {
    size_t start = text.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (escaped) {
                escaped = false;
                continue;
            }
            if (c == '\\') {
                escaped = in_string;
                continue;
            }
            if (c == '"') {
                in_string = !in_string;
                continue;
            }
            if (in_string) continue;
            if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) return text.substr(start, i - start + 1);
            }
        }
        // Unbalanced from this brace; try the next one.
        start = text.find('{', start + 1);
    }
    return {};
}

namespace {

std::vector<std::string> coerce_string_list(const json& value, const std::string& field) {
    if (!value.is_array()) {
        throw ParseError("field of wrong shape: " + field + " must be a list");
    }
    std::vector<std::string> out;
    out.reserve(value.size());
    for (const auto& item : value) {
        if (item.is_string()) {
            out.push_back(item.get<std::string>());
        } else {
            out.push_back(item.dump());
        }
    }
    return out;
}

}  // namespace

VerificationReport parse_report(const std::string& text) {
    std::string object_text = extract_first_json_object(text);
    if (object_text.empty()) {
        throw ParseError("no JSON object found in response");
    }

    json parsed;
    try {
        parsed = json::parse(object_text);
    } catch (const json::exception& ex) {
        throw ParseError(std::string("malformed JSON object: ") + ex.what());
    }
    if (!parsed.is_object()) {
        throw ParseError("no JSON object found in response");
    }

    for (const char* field : {"completeness_summary", "missing_information", "action_items"}) {
        if (!parsed.contains(field)) {
            throw ParseError(std::string("missing field: ") + field);
        }
    }
    if (!parsed["completeness_summary"].is_string()) {
        throw ParseError("field of wrong shape: completeness_summary must be a string");
    }

    VerificationReport report;
    report.raw_response = text;
    report.completeness_summary = parsed["completeness_summary"].get<std::string>();
    report.missing_information = coerce_string_list(parsed["missing_information"], "missing_information");
    report.action_items = coerce_string_list(parsed["action_items"], "action_items");

    if (report.completeness_summary.empty()) {
        report.completeness_summary = "(no summary provided)";
        report.repaired = true;
    }

    // Pair by index; pad the shorter list so |missing| == |actions|.
    while (report.action_items.size() < report.missing_information.size()) {
        report.action_items.push_back(
            "no action specified for issue " + std::to_string(report.action_items.size() + 1));
        report.repaired = true;
    }
    while (report.missing_information.size() < report.action_items.size()) {
        report.missing_information.push_back("unattributed action");
        report.repaired = true;
    }

    return report;
}

std::string serialize_report(const VerificationReport& report) {
    // nlohmann objects keep keys sorted, which is the canonical order here.
    json out;
    out["completeness_summary"] = report.completeness_summary;
    out["missing_information"] = report.missing_information;
    out["action_items"] = report.action_items;
    return out.dump(2);
}

bool is_clean(const VerificationReport& report) {
    return report.missing_information.empty();
}

void save_report_file(const std::filesystem::path& path, const VerificationReport& report) {
    json out;
    out["completeness_summary"] = report.completeness_summary;
    out["missing_information"] = report.missing_information;
    out["action_items"] = report.action_items;
    out["_meta"] = {{"repaired", report.repaired}, {"raw_response", report.raw_response}};
    util::atomic_write_file(path, out.dump(2) + "\n");
}

VerificationReport load_report_file(const std::filesystem::path& path) {
    std::string content = util::read_file_or_throw(path, "report file");
    json parsed;
    try {
        parsed = json::parse(content);
    } catch (const json::exception& ex) {
        throw ParseError("unreadable report file " + path.string() + ": " + ex.what());
    }
    VerificationReport report = parse_report(content);
    if (parsed.contains("_meta") && parsed["_meta"].is_object()) {
        const auto& meta = parsed["_meta"];
        report.repaired = meta.value("repaired", false);
        report.raw_response = meta.value("raw_response", "");
    }
    return report;
}

}  // namespace refine_loop
