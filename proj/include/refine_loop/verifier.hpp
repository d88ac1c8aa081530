#pragma once

#include <string>

#include "refine_loop/gateway.hpp"
#include "refine_loop/prompt.hpp"
#include "refine_loop/workflow.hpp"

namespace refine_loop {

struct AgentOptions {
    long token_budget = 0;  // 0 = unlimited
    PromptOptions prompt;
    std::string run_id;
};

/// One user message carrying the rendered bundle; model and sampling settings
/// come from the provider config.
CompletionRequest single_user_request(const PromptBundle& bundle, const ProviderConfig& config,
                                      const CallRoute& route, bool wants_structured_output);

class Workspace;

/// Builds the verification prompt for the stage output, makes one provider
/// call (plus at most one repair retry on an unparseable response), persists
/// the report, and appends a verify RunRecord per call made.
VerificationReport verify_stage(Workspace& workspace, const StageSpec& spec,
                                const StageOutput& output, Provider& provider,
                                const AgentOptions& opts = {});

}  // namespace refine_loop
