#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "refine_loop/report.hpp"

namespace refine_loop {

enum class StageKind { overall_plan, architecture, logic_design, configuration, code_file };

const char* to_string(StageKind kind);
std::optional<StageKind> stage_kind_from_string(const std::string& token);
bool is_planning_kind(StageKind kind);

/// Artifact file extension by kind: .py for code, .yaml for configuration,
/// .md for prose kinds.
std::string extension_for_kind(StageKind kind);

enum class Revision { original, refined };

/// Full research-paper text grounding every prompt.
struct PaperContent {
    std::string paper_id;
    std::string text;
    std::filesystem::path source_path;
};

/// One workflow step: the original generation system prompt doubles as the
/// verification standard and refinement guidance.
struct StageSpec {
    std::string stage_id;
    StageKind kind = StageKind::code_file;
    std::string system_prompt;
    std::vector<std::string> depends_on;
    std::filesystem::path output_path;  // relative to workspace root
};

/// A generated or refined artifact with run provenance.
struct StageOutput {
    std::string stage_id;
    std::string content;
    Revision revision = Revision::original;
    std::string produced_at;
    std::string run_id;
};

enum class RunRole { generate, verify, refine, short_circuit };

const char* to_string(RunRole role);
std::optional<RunRole> run_role_from_string(const std::string& token);

/// True for roles that correspond to an actual provider call.
/// short_circuit lines are markers written when a clean report skips
/// refinement; they carry the would-be refinement prompt digest so resume
/// can tell whether inputs changed.
bool is_provider_call(RunRole role);

struct RunRecord {
    RunRole role = RunRole::verify;
    std::string stage_id;
    std::string prompt_hash;
    std::string response_text;
    long prompt_tokens = 0;
    long completion_tokens = 0;
    long duration_ms = 0;
    std::string model_name;
};

std::string run_record_to_json_line(const RunRecord& record);

struct WorkflowGraph {
    std::vector<StageSpec> stages;  // declaration order

    const StageSpec* find(const std::string& stage_id) const;
    std::optional<size_t> index_of(const std::string& stage_id) const;
};

struct ValidationResult {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Checks all graph invariants. Violations name the offending stage ids;
/// nothing is thrown.
ValidationResult validate_workflow(const WorkflowGraph& graph);

/// Kahn ordering with ties broken by declaration order, so repeated calls on
/// the same graph are identical. Throws ValidationError listing one cycle
/// when the graph is cyclic.
std::vector<std::string> topological_order(const WorkflowGraph& graph);

/// On-disk workspace:
///   paper.md, stages.yaml, outputs/, reports/, refined/, runlog.jsonl, .lock
/// Stage artifacts additionally live at each stage's declared output path;
/// outputs/ keeps the pre-refinement copies.
class Workspace {
public:
    /// Reads and validates the whole workspace. Throws ValidationError on a
    /// missing paper, unreadable stage definitions, or graph violations.
    static Workspace load(const std::filesystem::path& root);

    const std::filesystem::path& root() const { return root_; }
    const PaperContent& paper() const { return paper_; }
    const WorkflowGraph& graph() const { return graph_; }

    std::filesystem::path original_path(const StageSpec& spec) const;
    std::filesystem::path refined_path(const StageSpec& spec) const;
    std::filesystem::path report_path(const std::string& stage_id) const;
    std::filesystem::path declared_output_path(const StageSpec& spec) const;
    std::filesystem::path runlog_path() const;
    std::filesystem::path lock_path() const;

    /// True when outputs/ holds a pre-refinement copy for the stage.
    bool has_original_copy(const StageSpec& spec) const;

    /// The stage's original content: the outputs/ copy when present,
    /// otherwise whatever currently lives at the declared output path.
    std::optional<StageOutput> original_output(const StageSpec& spec) const;

    std::optional<StageOutput> refined_output(const StageSpec& spec) const;
    std::optional<VerificationReport> report(const StageSpec& spec) const;

    void save_original(const StageSpec& spec, const std::string& content);

    /// Persists to refined/ and writes back to the declared output path so
    /// downstream stages consume the refined artifact. Requires a report to
    /// exist for the stage and non-empty content.
    void save_refined(const StageSpec& spec, const std::string& content);

    void save_report(const StageSpec& spec, const VerificationReport& report);

    void append_run_record(const RunRecord& record);

    /// All runlog records, oldest first. Throws ResumeError when any line is
    /// not a well-formed record.
    std::vector<RunRecord> read_runlog() const;

    bool runlog_exists() const;
    void rotate_runlog();  // runlog.jsonl -> runlog.jsonl.bak (explicit fresh runs)

private:
    std::filesystem::path root_;
    PaperContent paper_;
    WorkflowGraph graph_;

    std::optional<std::filesystem::path> existing_artifact_path(
        const std::filesystem::path& dir, const StageSpec& spec) const;
};

/// Creates `.lock` on construction, removes it on destruction. Throws
/// ValidationError when the workspace is already locked.
class WorkspaceLock {
public:
    explicit WorkspaceLock(const Workspace& workspace, const std::string& run_id);
    ~WorkspaceLock();

    WorkspaceLock(const WorkspaceLock&) = delete;
    WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
    std::filesystem::path path_;
};

}  // namespace refine_loop
