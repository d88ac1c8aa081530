#include "refine_loop/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "refine_loop/digest.hpp"
#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(RunScope scope) {
    switch (scope) {
        case RunScope::planning_only: return "plan";
        case RunScope::coding_only: return "code";
        case RunScope::full: return "all";
    }
    return "all";
}

std::string summary_to_json(const RunSummary& summary) {
    json doc{{"stages_processed", summary.stages_processed},
             {"provider_calls", summary.provider_calls},
             {"issues_found", summary.issues_found},
             {"issues_addressed", summary.issues_addressed},
             {"short_circuits", summary.short_circuits},
             {"duration_ms", summary.duration_ms}};
    return doc.dump(2) + "\n";
}

std::vector<std::string> processing_order(const Workspace& workspace, RunScope scope) {
    auto topo = topological_order(workspace.graph());
    std::vector<std::string> planning;
    std::vector<std::string> coding;
    for (const auto& stage_id : topo) {
        const auto* spec = workspace.graph().find(stage_id);
        (is_planning_kind(spec->kind) ? planning : coding).push_back(stage_id);
    }
    switch (scope) {
        case RunScope::planning_only: return planning;
        case RunScope::coding_only: return coding;
        case RunScope::full: break;
    }
    planning.insert(planning.end(), coding.begin(), coding.end());
    return planning;
}

namespace {

/// Refined outputs of every stage ahead of `spec` in the full processing
/// order, the refinement context contract.
std::vector<StageOutput> collect_prior_context(const Workspace& workspace, const StageSpec& spec,
                                               const std::vector<std::string>& full_order) {
    std::vector<StageOutput> prior;
    for (const auto& stage_id : full_order) {
        if (stage_id == spec.stage_id) break;
        const auto* other = workspace.graph().find(stage_id);
        if (auto refined = workspace.refined_output(*other)) {
            prior.push_back(std::move(*refined));
        }
    }
    return prior;
}

PromptBundle rebuild_refinement_bundle(const Workspace& workspace, const StageSpec& spec,
                                       const StageOutput& output,
                                       const VerificationReport& report,
                                       const std::vector<std::string>& full_order,
                                       const AgentOptions& opts) {
    auto prior = collect_prior_context(workspace, spec, full_order);
    auto bundle =
        build_refinement_prompt(workspace.paper(), spec, output, report, prior, opts.prompt);
    if (opts.token_budget > 0) bundle = fit_to_budget(std::move(bundle), opts.token_budget);
    return bundle;
}

StageOutput generate_stage(Workspace& workspace, const StageSpec& spec, Provider& provider,
                           const AgentOptions& opts, const std::vector<std::string>& full_order) {
    std::vector<StageOutput> prior;
    for (const auto& stage_id : full_order) {
        if (stage_id == spec.stage_id) break;
        if (std::find(spec.depends_on.begin(), spec.depends_on.end(), stage_id) ==
            spec.depends_on.end()) {
            continue;
        }
        const auto* dep = workspace.graph().find(stage_id);
        if (auto refined = workspace.refined_output(*dep)) {
            prior.push_back(std::move(*refined));
        } else if (auto original = workspace.original_output(*dep)) {
            prior.push_back(std::move(*original));
        } else {
            throw ValidationError("missing output for dependency: " + stage_id);
        }
    }

    auto bundle = build_generation_prompt(workspace.paper(), spec, prior, opts.prompt);
    if (opts.token_budget > 0) bundle = fit_to_budget(std::move(bundle), opts.token_budget);

    CallRoute route{spec.stage_id, "generate"};
    auto request = single_user_request(bundle, provider.config(), route, false);

    auto started = std::chrono::steady_clock::now();
    auto response = provider.complete(request);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    StageOutput output;
    output.stage_id = spec.stage_id;
    output.content = extract_artifact(response.text, spec.kind);
    output.revision = Revision::original;
    output.produced_at = util::utc_timestamp();
    output.run_id = opts.run_id;

    workspace.save_original(spec, output.content);
    util::atomic_write_file(workspace.declared_output_path(spec), output.content);

    RunRecord record;
    record.role = RunRole::generate;
    record.stage_id = spec.stage_id;
    record.prompt_hash = sha256_hex(bundle.rendered);
    record.response_text = response.text;
    record.prompt_tokens = response.prompt_tokens;
    record.completion_tokens = response.completion_tokens;
    record.duration_ms = elapsed;
    record.model_name = provider.config().model_name;
    workspace.append_run_record(record);

    return output;
}

void process_stage(Workspace& workspace, const StageSpec& spec, Provider& provider,
                   const RunPlan& plan, const AgentOptions& opts,
                   const std::vector<std::string>& full_order, RunSummary& summary) {
    auto original = workspace.original_output(spec);
    if (!original) {
        if (!plan.generate_missing) {
            throw ValidationError("missing output for stage: " + spec.stage_id +
                                  " (rerun with --generate-missing)");
        }
        original = generate_stage(workspace, spec, provider, opts, full_order);
    } else if (!workspace.has_original_copy(spec)) {
        // Snapshot the pre-refinement artifact before write-back overwrites it.
        workspace.save_original(spec, original->content);
    }

    StageOutput current = *original;
    for (int round = 1; round <= plan.max_iterations; ++round) {
        auto report = verify_stage(workspace, spec, current, provider, opts);
        summary.issues_found += static_cast<long>(report.missing_information.size());

        auto prior = collect_prior_context(workspace, spec, full_order);
        auto refined = refine_stage(workspace, spec, current, report, prior, provider, opts);

        if (is_clean(report)) {
            ++summary.short_circuits;
            break;
        }
        summary.issues_addressed += static_cast<long>(report.missing_information.size());
        current = std::move(refined);
    }
    ++summary.stages_processed;
}

const StageSpec& find_stage_or_throw(const Workspace& workspace, const std::string& stage_id) {
    const auto* spec = workspace.graph().find(stage_id);
    if (!spec) throw ValidationError("unknown stage: " + stage_id);
    return *spec;
}

std::optional<StageOutput> current_artifact(const Workspace& workspace, const StageSpec& spec) {
    if (auto refined = workspace.refined_output(spec)) return refined;
    return workspace.original_output(spec);
}

}  // namespace

bool stage_is_complete(const Workspace& workspace, const StageSpec& spec,
                       const std::vector<RunRecord>& runlog, const AgentOptions& opts) {
    if (!fs::exists(workspace.report_path(spec.stage_id))) return false;
    auto refined = workspace.refined_output(spec);
    if (!refined) return false;

    const RunRecord* latest = nullptr;
    for (const auto& record : runlog) {
        if (record.stage_id == spec.stage_id &&
            (record.role == RunRole::refine || record.role == RunRole::short_circuit)) {
            latest = &record;
        }
    }
    if (!latest) return false;

    auto original = workspace.original_output(spec);
    if (!original) return false;
    auto report = workspace.report(spec);
    if (!report) return false;

    auto full_order = processing_order(workspace, RunScope::full);
    auto bundle = rebuild_refinement_bundle(workspace, spec, *original, *report, full_order, opts);
    return sha256_hex(bundle.rendered) == latest->prompt_hash;
}

RunSummary run(Workspace& workspace, Provider& provider, const RunPlan& plan,
               const AgentOptions& opts) {
    AgentOptions agent_opts = opts;
    if (agent_opts.run_id.empty()) agent_opts.run_id = util::random_run_id();

    WorkspaceLock lock(workspace, agent_opts.run_id);
    auto started = std::chrono::steady_clock::now();
    long calls_before = provider.call_count();

    std::vector<RunRecord> runlog;
    if (workspace.runlog_exists()) {
        if (plan.fresh) {
            workspace.rotate_runlog();
        } else {
            runlog = workspace.read_runlog();
        }
    }

    auto order = processing_order(workspace, plan.scope);
    if (order.empty()) {
        throw ValidationError(std::string("no stages in scope: ") + to_string(plan.scope));
    }

    auto full_order = processing_order(workspace, RunScope::full);

    if (plan.scope == RunScope::coding_only) {
        for (const auto& stage_id : full_order) {
            const auto* spec = workspace.graph().find(stage_id);
            if (spec->kind == StageKind::logic_design && !workspace.refined_output(*spec)) {
                throw ValidationError("code scope requires a refined " +
                                      std::string(to_string(StageKind::logic_design)) +
                                      " output; run the plan scope first");
            }
        }
    }

    RunSummary summary;
    for (const auto& stage_id : order) {
        const auto& spec = *workspace.graph().find(stage_id);
        if (!plan.fresh && stage_is_complete(workspace, spec, runlog, agent_opts)) {
            continue;
        }
        process_stage(workspace, spec, provider, plan, agent_opts, full_order, summary);
    }

    summary.provider_calls = provider.call_count() - calls_before;
    summary.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    return summary;
}

VerificationReport run_stage_verify(Workspace& workspace, const std::string& stage_id,
                                    Provider& provider, const AgentOptions& opts) {
    AgentOptions agent_opts = opts;
    if (agent_opts.run_id.empty()) agent_opts.run_id = util::random_run_id();
    const auto& spec = find_stage_or_throw(workspace, stage_id);

    WorkspaceLock lock(workspace, agent_opts.run_id);
    auto current = current_artifact(workspace, spec);
    if (!current) {
        throw ValidationError("missing output for stage: " + stage_id);
    }
    return verify_stage(workspace, spec, *current, provider, agent_opts);
}

StageOutput run_stage_refine(Workspace& workspace, const std::string& stage_id,
                             Provider& provider, const AgentOptions& opts) {
    AgentOptions agent_opts = opts;
    if (agent_opts.run_id.empty()) agent_opts.run_id = util::random_run_id();
    const auto& spec = find_stage_or_throw(workspace, stage_id);

    WorkspaceLock lock(workspace, agent_opts.run_id);
    if (!fs::exists(workspace.report_path(stage_id))) {
        throw ValidationError("no report for stage: " + stage_id);
    }
    auto report = workspace.report(spec);
    auto current = current_artifact(workspace, spec);
    if (!current) {
        throw ValidationError("missing output for stage: " + stage_id);
    }
    if (!workspace.has_original_copy(spec)) {
        if (auto original = workspace.original_output(spec)) {
            workspace.save_original(spec, original->content);
        }
    }
    auto full_order = processing_order(workspace, RunScope::full);
    auto prior = collect_prior_context(workspace, spec, full_order);
    return refine_stage(workspace, spec, *current, *report, prior, provider, agent_opts);
}

}  // namespace refine_loop
