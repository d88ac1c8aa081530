#include "refine_loop/prompt.hpp"

#include <algorithm>
#include <cctype>

#include "refine_loop/errors.hpp"

namespace refine_loop {

namespace {

std::string upper_copy(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::toupper(c));
    });
    return out;
}

constexpr const char* kPaperTruncationMarker =
    "\n[... middle of paper content elided to fit the token budget ...]\n";

constexpr const char* kNoPriorMarker = "(none)";

const char* kVerificationInstructions =
    "Check the CURRENT_OUTPUT against every requirement stated in the REQUIREMENTS section.\n"
    "The REQUIREMENTS section is the original system prompt for this stage and is the sole\n"
    "evaluation standard. Identify each requirement that is not adequately satisfied by the\n"
    "current output, and give one concrete improvement suggestion per identified issue.\n"
    "Requirements that cannot be checked from the text alone must still be listed as issues,\n"
    "stated verbatim.";

const char* kVerificationOutputFormat =
    "Respond with a single JSON object and nothing else:\n"
    "{\n"
    "  \"completeness_summary\": \"<summary of how completely the output satisfies the requirements>\",\n"
    "  \"missing_information\": [\"<requirement not adequately satisfied>\", ...],\n"
    "  \"action_items\": [\"<concrete improvement addressing the issue at the same index>\", ...]\n"
    "}\n"
    "missing_information and action_items must have the same length; action_items[j] addresses\n"
    "missing_information[j]. Use empty lists when every requirement is satisfied.";

std::string refinement_instructions(const VerificationReport& report, StageKind kind) {
    std::string text;
    text += "Rewrite the CURRENT_OUTPUT into an improved version of the same artifact.\n";
    text += "1. Preserve the correct parts of the current output that already satisfy the\n";
    text += "   REQUIREMENTS section.\n";
    text += "2. Address every issue listed under missing_information by incorporating the\n";
    text += "   missing requirements:\n";
    for (const auto& issue : report.missing_information) {
        text += "   - " + issue + "\n";
    }
    text += "3. Follow the improvement suggestions under action_items while staying compliant\n";
    text += "   with the REQUIREMENTS section:\n";
    for (const auto& action : report.action_items) {
        text += "   - " + action + "\n";
    }
    text += "4. Maintain consistency with the previously refined outputs listed under\n";
    text += "   PRIOR_REFINED.\n";
    text += "When a suggestion conflicts with the REQUIREMENTS section, the requirements take\n";
    text += "precedence.\n";
    switch (kind) {
        case StageKind::code_file:
            text += "Respond with the complete revised file in a single fenced code block.";
            break;
        case StageKind::configuration:
            text += "Respond with the complete revised configuration as valid YAML.";
            break;
        default:
            text += "Respond with the complete revised artifact only.";
            break;
    }
    return text;
}

}  // namespace

std::string render_section_header(const PromptSection& section) {
    std::string header = "### " + upper_copy(section.name);
    if (!section.label.empty()) header += " [" + section.label + "]";
    header += "\n";
    return header;
}

std::string render_section(const PromptSection& section) {
    return render_section_header(section) + section.body + "\n\n";
}

long estimate_tokens(std::string_view text, int chars_per_token) {
    if (chars_per_token <= 0) chars_per_token = kDefaultCharsPerToken;
    return static_cast<long>((text.size() + chars_per_token - 1) / chars_per_token);
}

void finalize_bundle(PromptBundle& bundle) {
    bundle.rendered.clear();
    bundle.token_estimate = 0;
    for (const auto& section : bundle.sections) {
        std::string rendered = render_section(section);
        bundle.token_estimate += estimate_tokens(rendered, bundle.chars_per_token);
        bundle.rendered += rendered;
    }
}

std::string elision_marker(const std::string& stage_label) {
    if (stage_label.empty()) return "[prior output elided to fit the token budget]";
    return "[output of stage " + stage_label + " elided to fit the token budget]";
}

PromptBundle build_generation_prompt(const PaperContent& paper, const StageSpec& spec,
                                     const std::vector<StageOutput>& prior,
                                     const PromptOptions& opts) {
    if (spec.system_prompt.empty()) {
        throw ValidationError("stage " + spec.stage_id + " has an empty system prompt");
    }
    PromptBundle bundle;
    bundle.chars_per_token = opts.chars_per_token;
    bundle.sections.push_back({section::kPaperContent, "", paper.text});
    for (const auto& output : prior) {
        bundle.sections.push_back({section::kPriorRefined, output.stage_id, output.content});
    }
    bundle.sections.push_back({section::kRequirements, "", spec.system_prompt});
    finalize_bundle(bundle);
    return bundle;
}

PromptBundle build_verification_prompt(const PaperContent& paper, const StageSpec& spec,
                                       const StageOutput& output, const PromptOptions& opts) {
    if (output.content.empty()) {
        throw ValidationError("stage " + spec.stage_id + " has no output content to verify");
    }
    PromptBundle bundle;
    bundle.chars_per_token = opts.chars_per_token;
    bundle.sections.push_back({section::kPaperContent, "", paper.text});
    bundle.sections.push_back({section::kRequirements, "", spec.system_prompt});
    bundle.sections.push_back({section::kCurrentOutput, "", output.content});
    bundle.sections.push_back({section::kInstructions, "", kVerificationInstructions});
    bundle.sections.push_back({section::kOutputFormat, "", kVerificationOutputFormat});
    finalize_bundle(bundle);
    return bundle;
}

PromptBundle build_refinement_prompt(const PaperContent& paper, const StageSpec& spec,
                                     const StageOutput& output, const VerificationReport& report,
                                     const std::vector<StageOutput>& prior_refined,
                                     const PromptOptions& opts) {
    if (output.content.empty()) {
        throw ValidationError("stage " + spec.stage_id + " has no output content to refine");
    }
    if (report.completeness_summary.empty() ||
        report.missing_information.size() != report.action_items.size()) {
        throw ValidationError("invalid verification report for stage " + spec.stage_id);
    }
    PromptBundle bundle;
    bundle.chars_per_token = opts.chars_per_token;
    bundle.sections.push_back({section::kPaperContent, "", paper.text});
    bundle.sections.push_back({section::kRequirements, "", spec.system_prompt});
    bundle.sections.push_back({section::kCurrentOutput, "", output.content});
    bundle.sections.push_back({section::kVerificationReport, "", serialize_report(report)});
    if (prior_refined.empty()) {
        bundle.sections.push_back({section::kPriorRefined, "", kNoPriorMarker});
    } else {
        for (const auto& prior : prior_refined) {
            bundle.sections.push_back({section::kPriorRefined, prior.stage_id, prior.content});
        }
    }
    bundle.sections.push_back({section::kInstructions, "", refinement_instructions(report, spec.kind)});
    finalize_bundle(bundle);
    return bundle;
}

namespace {

bool is_elidable_prior(const PromptSection& section) {
    return section.name == section::kPriorRefined && section.body != kNoPriorMarker &&
           section.body != elision_marker(section.label);
}

/// Estimate of the bundle with every prior elided and the paper body reduced
/// to the truncation marker alone: the smallest budget fit_to_budget can meet.
long minimum_feasible_tokens(const PromptBundle& bundle) {
    long total = 0;
    for (const auto& section : bundle.sections) {
        PromptSection shrunk = section;
        if (is_elidable_prior(section)) {
            shrunk.body = elision_marker(section.label);
        } else if (section.name == section::kPaperContent) {
            shrunk.body = kPaperTruncationMarker;
        }
        total += estimate_tokens(render_section(shrunk), bundle.chars_per_token);
    }
    return total;
}

}  // namespace

PromptBundle fit_to_budget(PromptBundle bundle, long budget_tokens) {
    finalize_bundle(bundle);
    if (budget_tokens > 0 && bundle.token_estimate <= budget_tokens) return bundle;

    long minimum = minimum_feasible_tokens(bundle);
    if (budget_tokens < minimum) {
        throw BudgetError("prompt budget " + std::to_string(budget_tokens) +
                              " tokens is below the untruncatable minimum of " +
                              std::to_string(minimum) + " tokens",
                          minimum);
    }

    // Drop prior outputs oldest-first until the bundle fits.
    for (auto& section : bundle.sections) {
        if (bundle.token_estimate <= budget_tokens) break;
        if (!is_elidable_prior(section)) continue;
        section.body = elision_marker(section.label);
        finalize_bundle(bundle);
    }
    if (bundle.token_estimate <= budget_tokens) return bundle;

    // Truncate the paper middle-out, keeping head and tail.
    for (auto& section : bundle.sections) {
        if (section.name != section::kPaperContent) continue;
        long others = 0;
        for (const auto& other : bundle.sections) {
            if (&other == &section) continue;
            others += estimate_tokens(render_section(other), bundle.chars_per_token);
        }
        const long marker_len = static_cast<long>(std::string(kPaperTruncationMarker).size());
        const long header_len = static_cast<long>(render_section_header(section).size());
        // render length = header + body + "\n\n"; solve for the body length
        // whose section estimate still fits.
        long allow_chars =
            (budget_tokens - others) * bundle.chars_per_token - header_len - 2 - marker_len;
        if (allow_chars < 0) allow_chars = 0;
        const std::string& body = section.body;
        if (static_cast<long>(body.size()) > allow_chars + marker_len) {
            size_t head = static_cast<size_t>(allow_chars) / 2;
            size_t tail = static_cast<size_t>(allow_chars) - head;
            section.body = body.substr(0, head) + kPaperTruncationMarker +
                           body.substr(body.size() - tail);
        }
        finalize_bundle(bundle);
        break;
    }

    if (bundle.token_estimate > budget_tokens) {
        throw BudgetError("prompt budget " + std::to_string(budget_tokens) +
                              " tokens is below the untruncatable minimum of " +
                              std::to_string(minimum) + " tokens",
                          minimum);
    }
    return bundle;
}

}  // namespace refine_loop
