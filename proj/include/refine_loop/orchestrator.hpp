#pragma once

#include <optional>
#include <string>
#include <vector>

#include "refine_loop/refiner.hpp"
#include "refine_loop/verifier.hpp"

namespace refine_loop {

enum class RunScope { planning_only, coding_only, full };

const char* to_string(RunScope scope);

struct RunPlan {
    RunScope scope = RunScope::full;
    int max_iterations = 1;  // verify->refine rounds per stage
    bool generate_missing = false;
    bool fresh = false;  // rotate an existing runlog instead of resuming
};

struct RunSummary {
    long stages_processed = 0;
    long provider_calls = 0;
    long issues_found = 0;
    long issues_addressed = 0;
    long short_circuits = 0;
    long duration_ms = 0;
};

std::string summary_to_json(const RunSummary& summary);

/// Stage ids in processing order for the scope: the planning chain first,
/// then code files in dependency order.
std::vector<std::string> processing_order(const Workspace& workspace, RunScope scope);

/// True when the stage's report and refined artifact exist and the runlog's
/// latest refine or short_circuit record for it digests to the refinement
/// prompt rebuilt from current inputs, meaning nothing upstream changed.
bool stage_is_complete(const Workspace& workspace, const StageSpec& spec,
                       const std::vector<RunRecord>& runlog, const AgentOptions& opts);

/// Drives verify->refine over the scoped stages sequentially, resuming past
/// completed stages unless plan.fresh. Takes the workspace lock for the whole
/// run. A hard stage error aborts the remaining stages; completed work stays
/// on disk for resume.
RunSummary run(Workspace& workspace, Provider& provider, const RunPlan& plan,
               const AgentOptions& opts = {});

/// Single-stage entry points backing `stage <id> verify|refine`. Both operate
/// on the stage's current artifact (refined when present, else original).
/// run_stage_refine requires an existing report and errors with
/// "no report for stage" otherwise.
VerificationReport run_stage_verify(Workspace& workspace, const std::string& stage_id,
                                    Provider& provider, const AgentOptions& opts = {});
StageOutput run_stage_refine(Workspace& workspace, const std::string& stage_id,
                             Provider& provider, const AgentOptions& opts = {});

}  // namespace refine_loop
