#include "refine_loop/refiner.hpp"

#include <algorithm>
#include <chrono>
#include <iostream>
#include <map>

#include <yaml-cpp/yaml.h>

#include "refine_loop/digest.hpp"
#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

namespace {

struct FencedBlock {
    std::size_t body_begin = 0;
    std::size_t body_end = 0;
};

bool is_fence_line(const std::string& text, std::size_t line_begin, std::size_t line_end) {
    auto pos = line_begin;
    while (pos < line_end && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    return line_end - pos >= 3 && text.compare(pos, 3, "```") == 0;
}

/// All ``` blocks; an unterminated fence runs to the end of the text.
std::vector<FencedBlock> fenced_blocks(const std::string& text) {
    std::vector<FencedBlock> blocks;
    std::size_t pos = 0;
    bool in_block = false;
    FencedBlock current;
    while (pos <= text.size()) {
        auto line_end = text.find('\n', pos);
        auto end = line_end == std::string::npos ? text.size() : line_end;
        if (is_fence_line(text, pos, end)) {
            if (!in_block) {
                current.body_begin = line_end == std::string::npos ? text.size() : line_end + 1;
                in_block = true;
            } else {
                current.body_end = pos;
                blocks.push_back(current);
                in_block = false;
            }
        }
        if (line_end == std::string::npos) break;
        pos = line_end + 1;
    }
    if (in_block) {
        current.body_end = text.size();
        if (current.body_begin <= current.body_end) blocks.push_back(current);
    }
    return blocks;
}

bool looks_like_code(const std::string& text) {
    static const char* kStarters[] = {"import ", "from ", "def ",    "class ",
                                      "if ",     "for ",  "while ", "return ", "@"};
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto line_end = text.find('\n', pos);
        auto end = line_end == std::string::npos ? text.size() : line_end;
        auto line = util::trim(text.substr(pos, end - pos));
        if (!line.empty()) {
            for (const char* starter : kStarters) {
                if (line.rfind(starter, 0) == 0) return true;
            }
            if (line.find('=') != std::string::npos) return true;
            if (line.back() == ':') return true;
        }
        if (line_end == std::string::npos) break;
        pos = line_end + 1;
    }
    return false;
}

std::string largest_block_body(const std::string& text) {
    auto blocks = fenced_blocks(text);
    if (blocks.empty()) return {};
    const auto* best = &blocks.front();
    for (const auto& block : blocks) {
        if (block.body_end - block.body_begin > best->body_end - best->body_begin) {
            best = &block;
        }
    }
    return text.substr(best->body_begin, best->body_end - best->body_begin);
}

}  // namespace

std::string extract_artifact(const std::string& response_text, StageKind kind) {
    if (kind == StageKind::code_file) {
        auto body = largest_block_body(response_text);
        if (!body.empty()) {
            return util::strip_outer_blank_lines(body);
        }
        auto whole = util::strip_outer_blank_lines(response_text);
        if (!whole.empty() && looks_like_code(whole)) {
            return whole;
        }
        throw ParseError("no extractable code in response");
    }

    if (kind == StageKind::configuration) {
        auto body = largest_block_body(response_text);
        if (body.empty()) body = response_text;
        body = util::strip_outer_blank_lines(body);
        try {
            auto doc = YAML::Load(body);
            if (!doc.IsMap() || doc.size() == 0) {
                throw ParseError("invalid configuration syntax");
            }
        } catch (const YAML::Exception&) {
            throw ParseError("invalid configuration syntax");
        }
        return body;
    }

    auto content = util::strip_outer_blank_lines(response_text);
    if (content.empty()) {
        throw ParseError("refined content is empty");
    }
    return content;
}

std::vector<StageOutput> assemble_prior_context(std::vector<StageOutput> refined,
                                                const std::vector<std::string>& order,
                                                long budget_tokens, const PromptOptions& opts) {
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    std::vector<StageOutput> sorted;
    sorted.reserve(refined.size());
    for (auto& output : refined) {
        if (rank.count(output.stage_id)) sorted.push_back(std::move(output));
    }
    std::sort(sorted.begin(), sorted.end(), [&](const StageOutput& a, const StageOutput& b) {
        return rank[a.stage_id] < rank[b.stage_id];
    });

    if (budget_tokens <= 0) return sorted;

    std::vector<long> costs(sorted.size(), 0);
    long total = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        PromptSection section{section::kPriorRefined, sorted[i].stage_id, sorted[i].content};
        costs[i] = estimate_tokens(render_section(section), opts.chars_per_token);
        total += costs[i];
    }
    std::size_t first_kept = 0;
    while (first_kept < sorted.size() && total > budget_tokens) {
        total -= costs[first_kept];
        ++first_kept;
    }
    sorted.erase(sorted.begin(), sorted.begin() + static_cast<long>(first_kept));
    return sorted;
}

StageOutput refine_stage(Workspace& workspace, const StageSpec& spec, const StageOutput& output,
                         const VerificationReport& report,
                         const std::vector<StageOutput>& prior_refined, Provider& provider,
                         const AgentOptions& opts) {
    if (output.content.empty()) {
        throw ValidationError("cannot refine empty output for stage: " + spec.stage_id);
    }

    auto bundle = build_refinement_prompt(workspace.paper(), spec, output, report, prior_refined,
                                          opts.prompt);
    if (opts.token_budget > 0) bundle = fit_to_budget(std::move(bundle), opts.token_budget);

    StageOutput refined;
    refined.stage_id = spec.stage_id;
    refined.revision = Revision::refined;
    refined.produced_at = util::utc_timestamp();
    refined.run_id = opts.run_id;

    if (is_clean(report)) {
        refined.content = output.content;
        workspace.save_refined(spec, refined.content);

        RunRecord marker;
        marker.role = RunRole::short_circuit;
        marker.stage_id = spec.stage_id;
        marker.prompt_hash = sha256_hex(bundle.rendered);
        marker.model_name = provider.config().model_name;
        workspace.append_run_record(marker);
        return refined;
    }

    CallRoute route{spec.stage_id, "refine"};
    auto request = single_user_request(bundle, provider.config(), route, false);

    auto started = std::chrono::steady_clock::now();
    auto response = provider.complete(request);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();

    if (response.finish_reason == FinishReason::length) {
        std::cerr << "warning: refinement response for stage " << spec.stage_id
                  << " was cut off at the token limit\n";
    }

    refined.content = extract_artifact(response.text, spec.kind);
    workspace.save_refined(spec, refined.content);

    RunRecord record;
    record.role = RunRole::refine;
    record.stage_id = spec.stage_id;
    record.prompt_hash = sha256_hex(bundle.rendered);
    record.response_text = response.text;
    record.prompt_tokens = response.prompt_tokens;
    record.completion_tokens = response.completion_tokens;
    record.duration_ms = elapsed;
    record.model_name = provider.config().model_name;
    workspace.append_run_record(record);

    return refined;
}

}  // namespace refine_loop
