#pragma once

#include <string>
#include <vector>

#include "refine_loop/verifier.hpp"

namespace refine_loop {

/// Pulls the usable artifact out of a model response. Code kinds take the
/// largest fenced block (whole text when it already looks like code),
/// configuration kinds must parse as a YAML mapping, prose kinds are returned
/// with outer blank lines stripped. Throws ParseError otherwise.
std::string extract_artifact(const std::string& response_text, StageKind kind);

/// Refined outputs sorted into the given stage order. With a positive budget,
/// oldest entries are dropped first until the remainder's rendered-section
/// estimate fits.
std::vector<StageOutput> assemble_prior_context(std::vector<StageOutput> refined,
                                                const std::vector<std::string>& order,
                                                long budget_tokens = 0,
                                                const PromptOptions& opts = {});

/// Clean report: returns the output unchanged (revision refined), persists it,
/// and appends a short_circuit marker carrying the would-be refinement prompt
/// digest; zero provider calls. Otherwise makes exactly one provider call,
/// extracts the artifact, persists it to refined/ plus the declared output
/// path, and appends a refine RunRecord.
StageOutput refine_stage(Workspace& workspace, const StageSpec& spec, const StageOutput& output,
                         const VerificationReport& report,
                         const std::vector<StageOutput>& prior_refined, Provider& provider,
                         const AgentOptions& opts = {});

}  // namespace refine_loop
