#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include <json.hpp>

#include "refine_loop/config.hpp"
#include "refine_loop/errors.hpp"
#include "refine_loop/orchestrator.hpp"
#include "refine_loop/stats.hpp"
#include "refine_loop/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace refine_loop;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitProvider = 2;
constexpr int kExitResume = 3;

struct CliFlags {
    std::string workspace;
    std::string scope;
    std::string mode;
    std::string cassette;
    std::string script;
    std::string model;
    std::string base_url;
    long budget = 0;
    int max_iterations = 1;
    bool generate_missing = false;
    bool fresh = false;
};

void add_provider_options(CLI::App* cmd, CliFlags& flags) {
    cmd->add_option("--workspace", flags.workspace, "workspace root (default .)");
    cmd->add_option("--mode", flags.mode, "provider mode: live, record, replay, mock")
        ->check(CLI::IsMember({"live", "record", "replay", "mock"}));
    cmd->add_option("--cassette", flags.cassette, "cassette JSONL path (record/replay)");
    cmd->add_option("--script", flags.script, "scripted mock responses (JSON)");
    cmd->add_option("--model", flags.model, "model name");
    cmd->add_option("--base-url", flags.base_url, "chat-completions endpoint base URL");
    cmd->add_option("--budget", flags.budget, "prompt token budget, 0 = unlimited");
}

/// count() for options only some subcommands register.
bool given(const CLI::App* cmd, const std::string& name) {
    const auto* option = cmd->get_option_no_throw(name);
    return option && option->count() > 0;
}

CliConfig resolve_config(const CLI::App* cmd, const CliFlags& flags) {
    CliConfig config;
    if (given(cmd, "--workspace")) config.workspace = flags.workspace;

    apply_config_file(config, config.workspace / "refine-loop.toml");
    apply_env_overrides(config);

    if (given(cmd, "--mode")) {
        config.mode = *provider_mode_from_string(flags.mode);
    }
    if (given(cmd, "--cassette")) config.cassette = flags.cassette;
    if (given(cmd, "--script")) config.script = flags.script;
    if (given(cmd, "--model")) config.model = flags.model;
    if (given(cmd, "--base-url")) config.base_url = flags.base_url;
    if (given(cmd, "--budget")) config.budget = flags.budget;
    if (given(cmd, "--scope")) config.scope = scope_from_string(flags.scope);
    if (given(cmd, "--max-iterations")) config.max_iterations = flags.max_iterations;
    if (given(cmd, "--generate-missing")) config.generate_missing = flags.generate_missing;
    if (given(cmd, "--fresh")) config.fresh = flags.fresh;

    if (config.max_iterations < 1) {
        throw ValidationError("--max-iterations must be at least 1");
    }
    return config;
}

AgentOptions agent_options_from(const CliConfig& config) {
    AgentOptions opts;
    opts.token_budget = config.budget;
    return opts;
}

int cmd_init(const fs::path& path) {
    if (fs::exists(path)) {
        if (!fs::is_directory(path)) {
            throw ValidationError("init target is not a directory: " + path.string());
        }
        if (!fs::is_empty(path)) {
            throw ValidationError("directory not empty: " + path.string());
        }
    }
    fs::create_directories(path / "outputs");
    fs::create_directories(path / "reports");
    fs::create_directories(path / "refined");

    util::atomic_write_file(path / "paper.md",
                            "Replace this placeholder with the full text of the paper to "
                            "reproduce.\n");

    util::atomic_write_file(path / "stages.yaml", R"(stages:
  - id: overall_plan
    kind: overall_plan
    output: plan.md
    system_prompt: |
      Write the overall reproduction plan for the paper: the objectives, the
      experiments to reproduce, and the order of work. Cover every component
      the paper describes as essential.
  - id: architecture
    kind: architecture
    depends_on: [overall_plan]
    output: architecture.md
    system_prompt: |
      Design the software architecture for the reproduction: the files to
      create, each file's responsibility, and how data flows between them.
      Stay consistent with the overall plan.
  - id: logic_design
    kind: logic_design
    depends_on: [architecture]
    output: logic_design.md
    system_prompt: |
      Describe the detailed logic of every component: algorithms, data
      structures, and the control flow connecting them. Stay consistent with
      the architecture.
  - id: configuration
    kind: configuration
    depends_on: [logic_design]
    output: config.yaml
    system_prompt: |
      Produce config.yaml holding every hyperparameter and path the
      implementation needs, with values taken from the paper. Emit valid YAML
      only.
)");

    util::atomic_write_file(path / "refine-loop.toml", default_config_toml());

    json doc{{"workspace", path.string()}, {"initialized", true}};
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
}

int cmd_run(const CLI::App* cmd, const CliFlags& flags) {
    auto config = resolve_config(cmd, flags);
    auto workspace = Workspace::load(config.workspace);
    Provider provider(provider_config_from(config));

    RunPlan plan;
    plan.scope = config.scope;
    plan.max_iterations = config.max_iterations;
    plan.generate_missing = config.generate_missing;
    plan.fresh = config.fresh;

    auto summary = run(workspace, provider, plan, agent_options_from(config));
    std::cout << summary_to_json(summary);
    if (summary.stages_processed == 0) {
        std::cerr << "nothing to do: all stages in scope are complete\n";
    }
    return kExitOk;
}

int cmd_stage(const CLI::App* cmd, const CliFlags& flags, const std::string& stage_id,
              const std::string& action) {
    auto config = resolve_config(cmd, flags);
    auto workspace = Workspace::load(config.workspace);
    Provider provider(provider_config_from(config));
    auto opts = agent_options_from(config);

    if (action == "verify") {
        auto report = run_stage_verify(workspace, stage_id, provider, opts);
        std::cout << serialize_report(report) << "\n";
        return kExitOk;
    }
    auto refined = run_stage_refine(workspace, stage_id, provider, opts);
    json doc{{"stage_id", refined.stage_id},
             {"revision", "refined"},
             {"bytes", refined.content.size()}};
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
}

int cmd_stats(const fs::path& scores_path, const std::string& per_paper_path) {
    auto records = load_scores(scores_path);
    std::cout << stats_summary_json(records);
    if (!per_paper_path.empty()) {
        util::atomic_write_file(per_paper_path, per_paper_table(records));
    }
    return kExitOk;
}

int cmd_status(const CLI::App* cmd, const CliFlags& flags) {
    auto config = resolve_config(cmd, flags);
    auto workspace = Workspace::load(config.workspace);

    json stages = json::array();
    for (const auto& stage_id : processing_order(workspace, RunScope::full)) {
        const auto* spec = workspace.graph().find(stage_id);
        json entry{{"stage_id", stage_id},
                   {"kind", to_string(spec->kind)},
                   {"output", spec->output_path.string()},
                   {"has_original", workspace.original_output(*spec).has_value()},
                   {"has_report", fs::exists(workspace.report_path(stage_id))},
                   {"has_refined", workspace.refined_output(*spec).has_value()}};
        if (auto report = workspace.report(*spec)) {
            entry["clean"] = is_clean(*report);
            entry["open_issues"] = report->missing_information.size();
        }
        stages.push_back(std::move(entry));
    }
    json doc{{"paper_id", workspace.paper().paper_id},
             {"workspace", workspace.root().string()},
             {"stages", std::move(stages)}};
    std::cout << doc.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verification and refinement pipeline for paper-to-code workflows"};
    app.require_subcommand(1);

    CliFlags flags;

    auto* init = app.add_subcommand("init", "scaffold a new workspace");
    std::string init_path;
    init->add_option("path", init_path, "directory to create")->required();

    auto* run_cmd = app.add_subcommand("run", "run the verify-refine pipeline");
    add_provider_options(run_cmd, flags);
    run_cmd->add_option("--scope", flags.scope, "plan, code, or all")
        ->check(CLI::IsMember({"plan", "code", "all"}));
    run_cmd->add_option("--max-iterations", flags.max_iterations,
                        "verify-refine rounds per stage");
    run_cmd->add_flag("--generate-missing", flags.generate_missing,
                      "generate outputs for stages that lack one");
    run_cmd->add_flag("--fresh", flags.fresh, "ignore previous progress and rotate the runlog");

    auto* stage_cmd = app.add_subcommand("stage", "verify or refine a single stage");
    std::string stage_id;
    std::string stage_action;
    stage_cmd->add_option("stage_id", stage_id, "stage to operate on")->required();
    stage_cmd->add_option("action", stage_action, "verify or refine")
        ->required()
        ->check(CLI::IsMember({"verify", "refine"}));
    add_provider_options(stage_cmd, flags);

    auto* stats_cmd = app.add_subcommand("stats", "summarize a score file");
    std::string scores_path;
    std::string per_paper_path;
    stats_cmd->add_option("scores", scores_path, "CSV or JSON score file")->required();
    stats_cmd->add_option("--per-paper", per_paper_path, "write per-paper CSV here");

    auto* status_cmd = app.add_subcommand("status", "inspect workspace progress");
    add_provider_options(status_cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& error) {
        return app.exit(error);
    }

    try {
        if (init->parsed()) return cmd_init(init_path);
        if (run_cmd->parsed()) return cmd_run(run_cmd, flags);
        if (stage_cmd->parsed()) return cmd_stage(stage_cmd, flags, stage_id, stage_action);
        if (stats_cmd->parsed()) return cmd_stats(scores_path, per_paper_path);
        if (status_cmd->parsed()) return cmd_status(status_cmd, flags);
    } catch (const ResumeError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitResume;
    } catch (const ProviderError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitProvider;
    } catch (const ParseError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitProvider;
    } catch (const BudgetError& error) {
        std::cerr << "error: " << error.what()
                  << " (minimum feasible budget: " << error.minimum_feasible() << ")\n";
        return kExitValidation;
    } catch (const ValidationError& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
