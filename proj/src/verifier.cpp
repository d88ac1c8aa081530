#include "refine_loop/verifier.hpp"

#include <chrono>
#include <iostream>

#include "refine_loop/digest.hpp"
#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

namespace {

PromptBundle fit_if_budgeted(PromptBundle bundle, long token_budget) {
    if (token_budget > 0) return fit_to_budget(std::move(bundle), token_budget);
    return bundle;
}

std::string repair_prompt_text(const std::string& original_rendered,
                               const std::string& previous_response) {
    std::string text = original_rendered;
    text += "### PREVIOUS RESPONSE\n";
    text += previous_response;
    text += "\n\n### INSTRUCTIONS\n";
    text +=
        "The previous response could not be parsed. Respond again with only the JSON object "
        "described under OUTPUT_FORMAT, with no surrounding prose and no code fences.\n\n";
    return text;
}

}  // namespace

CompletionRequest single_user_request(const PromptBundle& bundle, const ProviderConfig& config,
                                      const CallRoute& route, bool wants_structured_output) {
    CompletionRequest request;
    request.model = config.model_name;
    request.messages = {{MessageRole::user, bundle.rendered}};
    request.temperature = config.temperature;
    request.max_tokens = config.max_tokens;
    request.wants_structured_output = wants_structured_output;
    request.route = route;
    return request;
}

VerificationReport verify_stage(Workspace& workspace, const StageSpec& spec,
                                const StageOutput& output, Provider& provider,
                                const AgentOptions& opts) {
    if (output.content.empty()) {
        throw ValidationError("cannot verify empty output for stage: " + spec.stage_id);
    }

    auto bundle = fit_if_budgeted(
        build_verification_prompt(workspace.paper(), spec, output, opts.prompt),
        opts.token_budget);

    CallRoute route{spec.stage_id, "verify"};
    auto request = single_user_request(bundle, provider.config(), route, true);

    auto call = [&](const CompletionRequest& req, const std::string& rendered) {
        auto started = std::chrono::steady_clock::now();
        auto response = provider.complete(req);
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();

        RunRecord record;
        record.role = RunRole::verify;
        record.stage_id = spec.stage_id;
        record.prompt_hash = sha256_hex(rendered);
        record.response_text = response.text;
        record.prompt_tokens = response.prompt_tokens;
        record.completion_tokens = response.completion_tokens;
        record.duration_ms = elapsed;
        record.model_name = provider.config().model_name;
        workspace.append_run_record(record);

        if (response.finish_reason == FinishReason::length) {
            std::cerr << "warning: verification response for stage " << spec.stage_id
                      << " was cut off at the token limit\n";
        }
        return response;
    };

    auto response = call(request, bundle.rendered);

    VerificationReport report;
    try {
        report = parse_report(response.text);
    } catch (const ParseError&) {
        auto repair_text = repair_prompt_text(bundle.rendered, response.text);
        auto repair_request = request;
        repair_request.messages = {{MessageRole::user, repair_text}};
        auto repair_response = call(repair_request, repair_text);
        report = parse_report(repair_response.text);
        report.repaired = true;
    }

    workspace.save_report(spec, report);
    return report;
}

}  // namespace refine_loop
