#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "refine_loop/report.hpp"
#include "refine_loop/workflow.hpp"

namespace refine_loop {

/// Fixed section vocabulary. Section headers render as
/// "### <UPPERCASED NAME>" (plus a bracketed stage label for prior outputs)
/// and are part of the recorded prompt format, so they must stay stable.
namespace section {
inline constexpr const char* kPaperContent = "paper_content";
inline constexpr const char* kRequirements = "requirements";
inline constexpr const char* kCurrentOutput = "current_output";
inline constexpr const char* kVerificationReport = "verification_report";
inline constexpr const char* kPriorRefined = "prior_refined";
inline constexpr const char* kInstructions = "instructions";
inline constexpr const char* kOutputFormat = "output_format";
}  // namespace section

inline constexpr int kDefaultCharsPerToken = 4;

struct PromptSection {
    std::string name;
    std::string label;  // stage id, for prior_refined sections
    std::string body;
};

/// A deterministic, sectioned prompt. rendered is exactly the concatenation
/// of the rendered sections; token_estimate is the per-section sum, which
/// over-approximates the estimate of the concatenation.
struct PromptBundle {
    std::vector<PromptSection> sections;
    std::string rendered;
    long token_estimate = 0;
    int chars_per_token = kDefaultCharsPerToken;
};

struct PromptOptions {
    int chars_per_token = kDefaultCharsPerToken;
};

std::string render_section_header(const PromptSection& section);
std::string render_section(const PromptSection& section);

/// ceil(chars / chars_per_token); a deliberate over-approximation, the budget
/// is a safety margin rather than tokenizer parity.
long estimate_tokens(std::string_view text, int chars_per_token = kDefaultCharsPerToken);

/// Recomputes rendered and token_estimate from the section list.
void finalize_bundle(PromptBundle& bundle);

/// The one-line body that replaces an elided prior output.
std::string elision_marker(const std::string& stage_label);

/// Generation prompt: paper, each prior output verbatim in its own labeled
/// section, then the stage's system prompt.
PromptBundle build_generation_prompt(const PaperContent& paper, const StageSpec& spec,
                                     const std::vector<StageOutput>& prior,
                                     const PromptOptions& opts = {});

/// Verification prompt: paper, requirements (the original system prompt), the
/// output under review, the check directive, and the report schema.
PromptBundle build_verification_prompt(const PaperContent& paper, const StageSpec& spec,
                                       const StageOutput& output, const PromptOptions& opts = {});

/// Refinement prompt: paper, requirements, current output, the canonical
/// report, previously refined outputs (explicit "(none)" marker when empty),
/// and the refinement directives.
PromptBundle build_refinement_prompt(const PaperContent& paper, const StageSpec& spec,
                                     const StageOutput& output, const VerificationReport& report,
                                     const std::vector<StageOutput>& prior_refined,
                                     const PromptOptions& opts = {});

/// Shrinks the bundle until token_estimate <= budget. Prior-refined bodies are
/// elided oldest-first, then paper content is truncated middle-out keeping
/// head and tail. Requirements, current output, report, instructions, and
/// output format are never touched. Throws BudgetError (reporting the minimum
/// feasible budget) when even the untruncatable remainder cannot fit.
PromptBundle fit_to_budget(PromptBundle bundle, long budget_tokens);

}  // namespace refine_loop
