#include "refine_loop/workflow.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <set>
#include <sstream>

#include "refine_loop/errors.hpp"
#include "refine_loop/util.hpp"

namespace refine_loop {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(StageKind kind) {
    switch (kind) {
        case StageKind::overall_plan: return "overall_plan";
        case StageKind::architecture: return "architecture";
        case StageKind::logic_design: return "logic_design";
        case StageKind::configuration: return "configuration";
        case StageKind::code_file: return "code_file";
    }
    return "code_file";
}

std::optional<StageKind> stage_kind_from_string(const std::string& token) {
    if (token == "overall_plan") return StageKind::overall_plan;
    if (token == "architecture") return StageKind::architecture;
    if (token == "logic_design") return StageKind::logic_design;
    if (token == "configuration") return StageKind::configuration;
    if (token == "code_file") return StageKind::code_file;
    return std::nullopt;
}

bool is_planning_kind(StageKind kind) {
    return kind != StageKind::code_file;
}

std::string extension_for_kind(StageKind kind) {
    switch (kind) {
        case StageKind::code_file: return ".py";
        case StageKind::configuration: return ".yaml";
        default: return ".md";
    }
}

const char* to_string(RunRole role) {
    switch (role) {
        case RunRole::generate: return "generate";
        case RunRole::verify: return "verify";
        case RunRole::refine: return "refine";
        case RunRole::short_circuit: return "short_circuit";
    }
    return "verify";
}

std::optional<RunRole> run_role_from_string(const std::string& token) {
    if (token == "generate") return RunRole::generate;
    if (token == "verify") return RunRole::verify;
    if (token == "refine") return RunRole::refine;
    if (token == "short_circuit") return RunRole::short_circuit;
    return std::nullopt;
}

bool is_provider_call(RunRole role) {
    return role != RunRole::short_circuit;
}

std::string run_record_to_json_line(const RunRecord& record) {
    json line;
    line["role"] = to_string(record.role);
    line["stage_id"] = record.stage_id;
    line["prompt_hash"] = record.prompt_hash;
    line["response_text"] = record.response_text;
    line["token_usage"] = {{"prompt", record.prompt_tokens}, {"completion", record.completion_tokens}};
    line["duration_ms"] = record.duration_ms;
    line["model_name"] = record.model_name;
    return line.dump();
}

const StageSpec* WorkflowGraph::find(const std::string& stage_id) const {
    for (const auto& stage : stages) {
        if (stage.stage_id == stage_id) return &stage;
    }
    return nullptr;
}

std::optional<size_t> WorkflowGraph::index_of(const std::string& stage_id) const {
    for (size_t i = 0; i < stages.size(); ++i) {
        if (stages[i].stage_id == stage_id) return i;
    }
    return std::nullopt;
}

namespace {

// The four planning kinds in chain order.
constexpr StageKind kPlanningChain[] = {StageKind::overall_plan, StageKind::architecture,
                                        StageKind::logic_design, StageKind::configuration};

/// Finds one cycle among the given nodes, following depends_on edges.
/// Returns stage ids in traversal order.
std::vector<std::string> find_cycle(const WorkflowGraph& graph, const std::set<std::string>& nodes) {
    std::map<std::string, int> state;  // 0 unseen, 1 on stack, 2 done
    std::vector<std::string> stack;
    std::vector<std::string> cycle;

    std::function<bool(const std::string&)> visit = [&](const std::string& id) -> bool {
        state[id] = 1;
        stack.push_back(id);
        const StageSpec* spec = graph.find(id);
        if (spec) {
            for (const auto& dep : spec->depends_on) {
                if (!nodes.count(dep)) continue;
                if (state[dep] == 1) {
                    auto it = std::find(stack.begin(), stack.end(), dep);
                    cycle.assign(it, stack.end());
                    return true;
                }
                if (state[dep] == 0 && visit(dep)) return true;
            }
        }
        stack.pop_back();
        state[id] = 2;
        return false;
    };

    for (const auto& id : nodes) {
        if (state[id] == 0 && visit(id)) break;
    }
    return cycle;
}

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ",";
        out += ids[i];
    }
    return out;
}

bool reaches(const WorkflowGraph& graph, const std::string& from, const std::string& target) {
    std::set<std::string> seen;
    std::vector<std::string> frontier{from};
    while (!frontier.empty()) {
        std::string id = frontier.back();
        frontier.pop_back();
        if (id == target) return true;
        if (!seen.insert(id).second) continue;
        if (const StageSpec* spec = graph.find(id)) {
            for (const auto& dep : spec->depends_on) frontier.push_back(dep);
        }
    }
    return false;
}

}  // namespace

ValidationResult validate_workflow(const WorkflowGraph& graph) {
    ValidationResult result;
    auto violation = [&](std::string text) {
        result.ok = false;
        result.violations.push_back(std::move(text));
    };

    std::set<std::string> ids;
    std::set<std::string> duplicates;
    for (const auto& stage : graph.stages) {
        if (!ids.insert(stage.stage_id).second) duplicates.insert(stage.stage_id);
    }
    for (const auto& id : duplicates) violation("duplicate id: " + id);

    for (const auto& stage : graph.stages) {
        if (stage.system_prompt.empty()) violation("empty system_prompt: " + stage.stage_id);
        for (const auto& dep : stage.depends_on) {
            if (!ids.count(dep)) violation("unknown dependency: " + stage.stage_id + " -> " + dep);
            if (dep == stage.stage_id) violation("self dependency: " + stage.stage_id);
        }
    }

    // Cycles are only meaningful once references resolve.
    if (result.ok || duplicates.empty()) {
        std::set<std::string> nodes(ids.begin(), ids.end());
        std::vector<std::string> cycle = find_cycle(graph, nodes);
        if (!cycle.empty()) violation("cycle: " + join_ids(cycle));
    }

    // Planning stages, when present, must form the chain
    // overall_plan -> architecture -> logic_design -> configuration.
    std::map<StageKind, std::vector<const StageSpec*>> by_kind;
    for (const auto& stage : graph.stages) {
        if (is_planning_kind(stage.kind)) by_kind[stage.kind].push_back(&stage);
    }
    for (const auto& [kind, stages_of_kind] : by_kind) {
        if (stages_of_kind.size() > 1) {
            violation(std::string("duplicate planning kind: ") + to_string(kind));
        }
    }
    const StageSpec* previous = nullptr;
    for (StageKind kind : kPlanningChain) {
        auto it = by_kind.find(kind);
        if (it == by_kind.end() || it->second.empty()) continue;
        const StageSpec* current = it->second.front();
        if (previous) {
            bool linked = std::find(current->depends_on.begin(), current->depends_on.end(),
                                    previous->stage_id) != current->depends_on.end();
            if (!linked) {
                violation("planning chain broken: " + current->stage_id + " must depend on " +
                          previous->stage_id);
            }
        }
        previous = current;
    }

    // Every code file must (transitively) depend on logic_design when the
    // planning stages are present.
    auto logic = by_kind.find(StageKind::logic_design);
    if (logic != by_kind.end() && logic->second.size() == 1) {
        const std::string& logic_id = logic->second.front()->stage_id;
        for (const auto& stage : graph.stages) {
            if (stage.kind != StageKind::code_file) continue;
            if (!reaches(graph, stage.stage_id, logic_id)) {
                violation("code_file stage " + stage.stage_id + " does not depend on " + logic_id);
            }
        }
    }

    return result;
}

std::vector<std::string> topological_order(const WorkflowGraph& graph) {
    std::map<std::string, int> indegree;
    for (const auto& stage : graph.stages) indegree[stage.stage_id] = 0;
    for (const auto& stage : graph.stages) {
        for (const auto& dep : stage.depends_on) {
            if (indegree.count(dep)) ++indegree[stage.stage_id];
        }
    }

    std::vector<std::string> order;
    std::vector<bool> emitted(graph.stages.size(), false);
    order.reserve(graph.stages.size());

    while (order.size() < graph.stages.size()) {
        bool advanced = false;
        for (size_t i = 0; i < graph.stages.size(); ++i) {
            const auto& id = graph.stages[i].stage_id;
            if (emitted[i] || indegree[id] != 0) continue;
            emitted[i] = true;
            order.push_back(id);
            for (size_t j = 0; j < graph.stages.size(); ++j) {
                if (emitted[j]) continue;
                const auto& other = graph.stages[j];
                if (std::find(other.depends_on.begin(), other.depends_on.end(), id) !=
                    other.depends_on.end()) {
                    --indegree[other.stage_id];
                }
            }
            advanced = true;
            break;  // restart the scan so ties always resolve by declaration order
        }
        if (!advanced) {
            std::set<std::string> remaining;
            for (size_t i = 0; i < graph.stages.size(); ++i) {
                if (!emitted[i]) remaining.insert(graph.stages[i].stage_id);
            }
            std::vector<std::string> cycle = find_cycle(graph, remaining);
            throw ValidationError("cycle: " + join_ids(cycle));
        }
    }
    return order;
}

namespace {

StageSpec parse_stage_entry(const YAML::Node& node, const fs::path& root) {
    StageSpec spec;
    if (!node["id"]) throw ValidationError("stage entry missing 'id'");
    spec.stage_id = node["id"].as<std::string>();

    if (!node["kind"]) throw ValidationError("stage " + spec.stage_id + " missing 'kind'");
    std::string kind_token = node["kind"].as<std::string>();
    auto kind = stage_kind_from_string(kind_token);
    if (!kind) {
        throw ValidationError("stage " + spec.stage_id + " has unknown kind '" + kind_token + "'");
    }
    spec.kind = *kind;

    if (node["system_prompt"]) {
        spec.system_prompt = node["system_prompt"].as<std::string>();
    } else if (node["system_prompt_file"]) {
        fs::path prompt_path = root / node["system_prompt_file"].as<std::string>();
        std::string content;
        if (!util::read_file(prompt_path, content)) {
            throw ValidationError("stage " + spec.stage_id + " references missing prompt file: " +
                                  prompt_path.string());
        }
        spec.system_prompt = content;
    } else {
        throw ValidationError("stage " + spec.stage_id +
                              " needs 'system_prompt' or 'system_prompt_file'");
    }

    if (node["depends_on"]) {
        for (const auto& dep : node["depends_on"]) spec.depends_on.push_back(dep.as<std::string>());
    }

    if (!node["output"]) throw ValidationError("stage " + spec.stage_id + " missing 'output'");
    spec.output_path = node["output"].as<std::string>();
    return spec;
}

bool valid_directory_token(const std::string& token) {
    if (token.empty() || token == "." || token == "..") return false;
    return token.find('/') == std::string::npos && token.find('\\') == std::string::npos;
}

}  // namespace

Workspace Workspace::load(const fs::path& root) {
    Workspace ws;
    // Canonicalize so "." and trailing-slash spellings still yield a usable
    // directory name for the paper id.
    std::error_code ec;
    auto resolved = fs::weakly_canonical(root, ec);
    ws.root_ = ec ? root : resolved;

    fs::path paper_path = ws.root_ / "paper.md";
    std::string paper_text;
    if (!util::read_file(paper_path, paper_text)) {
        throw ValidationError("paper not found: " + paper_path.string());
    }
    if (util::trim(paper_text).empty()) {
        throw ValidationError("paper is empty: " + paper_path.string());
    }
    ws.paper_.text = std::move(paper_text);
    ws.paper_.source_path = paper_path;
    ws.paper_.paper_id = ws.root_.filename().string();
    if (!valid_directory_token(ws.paper_.paper_id)) {
        ws.paper_.paper_id = "workspace";
    }

    fs::path stages_path = ws.root_ / "stages.yaml";
    if (!fs::exists(stages_path)) {
        throw ValidationError("stage definitions not found: " + stages_path.string());
    }
    YAML::Node doc;
    try {
        doc = YAML::LoadFile(stages_path.string());
    } catch (const YAML::Exception& ex) {
        throw ValidationError("unreadable stage definitions: " + std::string(ex.what()));
    }
    YAML::Node stage_list = doc.IsSequence() ? doc : doc["stages"];
    if (!stage_list || !stage_list.IsSequence()) {
        throw ValidationError("stages.yaml must contain a 'stages' list");
    }
    for (const auto& entry : stage_list) {
        ws.graph_.stages.push_back(parse_stage_entry(entry, root));
    }

    ValidationResult validation = validate_workflow(ws.graph_);
    if (!validation.ok) {
        std::string message = "invalid workflow:";
        for (const auto& violation : validation.violations) message += "\n  " + violation;
        throw ValidationError(message);
    }

    // Every persisted report must re-parse (workspace self-consistency).
    for (const auto& stage : ws.graph_.stages) {
        fs::path report_file = ws.report_path(stage.stage_id);
        if (fs::exists(report_file)) load_report_file(report_file);
    }

    return ws;
}

fs::path Workspace::original_path(const StageSpec& spec) const {
    return root_ / "outputs" / (spec.stage_id + extension_for_kind(spec.kind));
}

fs::path Workspace::refined_path(const StageSpec& spec) const {
    return root_ / "refined" / (spec.stage_id + extension_for_kind(spec.kind));
}

fs::path Workspace::report_path(const std::string& stage_id) const {
    return root_ / "reports" / (stage_id + ".json");
}

fs::path Workspace::declared_output_path(const StageSpec& spec) const {
    return root_ / spec.output_path;
}

fs::path Workspace::runlog_path() const { return root_ / "runlog.jsonl"; }

fs::path Workspace::lock_path() const { return root_ / ".lock"; }

std::optional<fs::path> Workspace::existing_artifact_path(const fs::path& dir,
                                                          const StageSpec& spec) const {
    fs::path exact = dir / (spec.stage_id + extension_for_kind(spec.kind));
    if (fs::exists(exact)) return exact;
    if (!fs::is_directory(dir)) return std::nullopt;
    // Tolerate a differing extension as long as the stem matches.
    std::vector<fs::path> candidates;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().stem() == spec.stage_id) {
            candidates.push_back(entry.path());
        }
    }
    if (candidates.empty()) return std::nullopt;
    std::sort(candidates.begin(), candidates.end());
    return candidates.front();
}

bool Workspace::has_original_copy(const StageSpec& spec) const {
    return existing_artifact_path(root_ / "outputs", spec).has_value();
}

std::optional<StageOutput> Workspace::original_output(const StageSpec& spec) const {
    std::string content;
    if (auto path = existing_artifact_path(root_ / "outputs", spec)) {
        if (!util::read_file(*path, content)) return std::nullopt;
    } else if (!util::read_file(declared_output_path(spec), content)) {
        return std::nullopt;
    }
    StageOutput output;
    output.stage_id = spec.stage_id;
    output.content = std::move(content);
    output.revision = Revision::original;
    return output;
}

std::optional<StageOutput> Workspace::refined_output(const StageSpec& spec) const {
    auto path = existing_artifact_path(root_ / "refined", spec);
    if (!path) return std::nullopt;
    std::string content;
    if (!util::read_file(*path, content)) return std::nullopt;
    StageOutput output;
    output.stage_id = spec.stage_id;
    output.content = std::move(content);
    output.revision = Revision::refined;
    return output;
}

std::optional<VerificationReport> Workspace::report(const StageSpec& spec) const {
    fs::path path = report_path(spec.stage_id);
    if (!fs::exists(path)) return std::nullopt;
    return load_report_file(path);
}

void Workspace::save_original(const StageSpec& spec, const std::string& content) {
    if (content.empty()) {
        throw ValidationError("stage output for " + spec.stage_id + " is empty");
    }
    util::atomic_write_file(original_path(spec), content);
}

void Workspace::save_refined(const StageSpec& spec, const std::string& content) {
    if (content.empty()) {
        throw ValidationError("refined output for " + spec.stage_id + " is empty");
    }
    if (!fs::exists(report_path(spec.stage_id))) {
        throw ValidationError("refined output for " + spec.stage_id +
                              " requires a verification report");
    }
    util::atomic_write_file(refined_path(spec), content);
    util::atomic_write_file(declared_output_path(spec), content);
}

void Workspace::save_report(const StageSpec& spec, const VerificationReport& report) {
    save_report_file(report_path(spec.stage_id), report);
}

void Workspace::append_run_record(const RunRecord& record) {
    util::append_line(runlog_path(), run_record_to_json_line(record));
}

std::vector<RunRecord> Workspace::read_runlog() const {
    std::vector<RunRecord> records;
    std::ifstream stream(runlog_path());
    if (!stream) return records;
    std::string line;
    size_t line_number = 0;
    while (std::getline(stream, line)) {
        ++line_number;
        if (util::trim(line).empty()) continue;
        json parsed;
        try {
            parsed = json::parse(line);
        } catch (const json::exception&) {
            throw ResumeError("corrupted runlog at line " + std::to_string(line_number) +
                              "; rerun with --fresh to start over");
        }
        if (!parsed.is_object() || !parsed.contains("role") || !parsed.contains("stage_id")) {
            throw ResumeError("corrupted runlog at line " + std::to_string(line_number) +
                              "; rerun with --fresh to start over");
        }
        auto role = run_role_from_string(parsed["role"].get<std::string>());
        if (!role) {
            throw ResumeError("corrupted runlog at line " + std::to_string(line_number) +
                              "; rerun with --fresh to start over");
        }
        RunRecord record;
        record.role = *role;
        record.stage_id = parsed["stage_id"].get<std::string>();
        record.prompt_hash = parsed.value("prompt_hash", "");
        record.response_text = parsed.value("response_text", "");
        if (parsed.contains("token_usage") && parsed["token_usage"].is_object()) {
            record.prompt_tokens = parsed["token_usage"].value("prompt", 0L);
            record.completion_tokens = parsed["token_usage"].value("completion", 0L);
        }
        record.duration_ms = parsed.value("duration_ms", 0L);
        record.model_name = parsed.value("model_name", "");
        records.push_back(std::move(record));
    }
    return records;
}

bool Workspace::runlog_exists() const { return fs::exists(runlog_path()); }

void Workspace::rotate_runlog() {
    if (!runlog_exists()) return;
    fs::path backup = runlog_path();
    backup += ".bak";
    fs::rename(runlog_path(), backup);
}

WorkspaceLock::WorkspaceLock(const Workspace& workspace, const std::string& run_id)
    : path_(workspace.lock_path()) {
    if (fs::exists(path_)) {
        throw ValidationError("workspace is locked by an active run: " + path_.string());
    }
    util::atomic_write_file(path_, run_id + " " + util::utc_timestamp() + "\n");
}

WorkspaceLock::~WorkspaceLock() {
    std::error_code ec;
    fs::remove(path_, ec);
}

}  // namespace refine_loop
