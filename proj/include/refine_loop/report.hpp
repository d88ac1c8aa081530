#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace refine_loop {

/// Structured review of one stage output: a summary plus paired lists where
/// action_items[j] addresses missing_information[j]. An empty
/// missing_information list marks the report as clean.
struct VerificationReport {
    std::string completeness_summary;
    std::vector<std::string> missing_information;
    std::vector<std::string> action_items;

    /// Model text exactly as received, kept for debugging.
    std::string raw_response;

    /// Set when parsing had to normalize the response (length mismatch
    /// between the two lists, empty summary).
    bool repaired = false;
};

/// Extracts the first top-level JSON object from `text`. Handles bare objects,
/// code-fenced objects, and objects embedded in prose. Returns the object
/// substring, or an empty string when no balanced object exists.
std::string extract_first_json_object(const std::string& text);

/// Parses a model response into a report. Unknown JSON fields survive only in
/// raw_response. Mismatched list lengths are repaired by padding the shorter
/// list with placeholders and setting `repaired`.
///
/// Throws ParseError when no JSON object is found, a required field is
/// missing, or a field has the wrong shape.
VerificationReport parse_report(const std::string& text);

/// Canonical serialization: exactly the three report fields, sorted keys,
/// 2-space indentation. parse_report(serialize_report(r)) restores the three
/// fields byte-for-byte.
std::string serialize_report(const VerificationReport& report);

/// True iff missing_information is empty.
bool is_clean(const VerificationReport& report);

/// Report file format: the three fields plus {repaired, raw_response} under
/// "_meta". Written atomically.
void save_report_file(const std::filesystem::path& path, const VerificationReport& report);
VerificationReport load_report_file(const std::filesystem::path& path);

}  // namespace refine_loop
