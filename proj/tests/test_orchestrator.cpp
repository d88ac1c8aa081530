#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "doctest.h"

#include <json.hpp>

#include "refine_loop/digest.hpp"
#include "refine_loop/errors.hpp"
#include "refine_loop/orchestrator.hpp"
#include "test_support.hpp"

using namespace refine_loop;
using nlohmann::json;
using test_support::TempDir;

namespace {

namespace fs = std::filesystem;

using ScriptEntries = std::vector<std::tuple<std::string, std::string, std::string>>;

std::string refine_response_for(const std::string& stage_id, StageKind kind) {
    if (kind == StageKind::code_file) return "```python\nREFINED_" + stage_id + " = 1\n```";
    if (kind == StageKind::configuration) return "alpha: 0.9\nbeta: 12";
    return "REFINED " + stage_id + " body";
}

std::string refined_content_for(const std::string& stage_id, StageKind kind) {
    if (kind == StageKind::code_file) return "REFINED_" + stage_id + " = 1";
    if (kind == StageKind::configuration) return "alpha: 0.9\nbeta: 12";
    return "REFINED " + stage_id + " body";
}

std::string generate_response_for(const std::string& stage_id, StageKind kind) {
    if (kind == StageKind::code_file) return "```python\nGENERATED_" + stage_id + " = 0\n```";
    if (kind == StageKind::configuration) return "alpha: 0.5\nbeta: 7";
    return "GENERATED " + stage_id + " body";
}

/// verify+refine script entries for each stage; clean stages get a clean
/// verification and no refinement entry.
ScriptEntries standard_entries(const Workspace& workspace, const std::vector<std::string>& ids,
                               const std::set<std::string>& clean_ids = {}) {
    ScriptEntries entries;
    for (const auto& stage_id : ids) {
        const auto& spec = *workspace.graph().find(stage_id);
        if (clean_ids.count(stage_id)) {
            entries.emplace_back(stage_id, "verify", test_support::clean_report_json());
        } else {
            entries.emplace_back(stage_id, "verify",
                                 test_support::issue_report_json("gap in " + stage_id,
                                                                 "fix " + stage_id));
            entries.emplace_back(stage_id, "refine", refine_response_for(stage_id, spec.kind));
        }
    }
    return entries;
}

std::vector<std::string> role_sequence(const Workspace& workspace) {
    std::vector<std::string> sequence;
    for (const auto& record : workspace.read_runlog()) {
        sequence.push_back(std::string(to_string(record.role)) + ":" + record.stage_id);
    }
    return sequence;
}

std::map<std::string, std::string> tree_snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        files[fs::relative(entry.path(), root).string()] = test_support::read_file(entry.path());
    }
    return files;
}

}  // namespace

TEST_CASE("processing order is the planning chain then code in dependency order") {
    TempDir dir;
    test_support::make_workspace(dir.path, 3);
    auto workspace = Workspace::load(dir.path);

    CHECK(processing_order(workspace, RunScope::full) ==
          std::vector<std::string>{"plan", "arch", "logic", "config", "file1", "file2", "file3"});
    CHECK(processing_order(workspace, RunScope::planning_only) == test_support::planning_ids());
    CHECK(processing_order(workspace, RunScope::coding_only) ==
          std::vector<std::string>{"file1", "file2", "file3"});
}

TEST_CASE("every non-clean stage costs one verification and one refinement call") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    auto workspace = Workspace::load(dir.path);
    auto provider = script_mock(standard_entries(workspace, test_support::planning_ids()));

    RunPlan run_plan;
    run_plan.scope = RunScope::planning_only;
    auto summary = run(workspace, provider, run_plan);

    CHECK(summary.provider_calls == 8);
    CHECK(summary.stages_processed == 4);
    CHECK(summary.issues_found == 4);
    CHECK(summary.issues_addressed == 4);
    CHECK(summary.short_circuits == 0);

    CHECK(role_sequence(workspace) ==
          std::vector<std::string>{"verify:plan", "refine:plan", "verify:arch", "refine:arch",
                                   "verify:logic", "refine:logic", "verify:config",
                                   "refine:config"});

    // Refined write-back with the original preserved in outputs/.
    CHECK(test_support::read_file(dir.path / "plan.md") == "REFINED plan body");
    CHECK(test_support::read_file(dir.path / "outputs" / "plan.md") == "original plan body\n");
    CHECK(test_support::read_file(dir.path / "refined" / "config.yaml") ==
          "alpha: 0.9\nbeta: 12");
    CHECK(test_support::read_file(dir.path / "config.yaml") == "alpha: 0.9\nbeta: 12");

    SUBCASE("the finished run resumes to a no-op") {
        auto reloaded = Workspace::load(dir.path);
        auto before = tree_snapshot(dir.path);
        auto idle = script_mock({});
        auto resume_summary = run(reloaded, idle, run_plan);
        CHECK(resume_summary.stages_processed == 0);
        CHECK(resume_summary.provider_calls == 0);
        CHECK(resume_summary.issues_found == 0);
        CHECK(tree_snapshot(dir.path) == before);
    }
}

TEST_CASE("a clean verification short-circuits its refinement") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    auto workspace = Workspace::load(dir.path);
    auto provider =
        script_mock(standard_entries(workspace, test_support::planning_ids(), {"arch"}));

    RunPlan run_plan;
    run_plan.scope = RunScope::planning_only;
    auto summary = run(workspace, provider, run_plan);

    CHECK(summary.provider_calls == 7);
    CHECK(summary.stages_processed == 4);
    CHECK(summary.issues_found == 3);
    CHECK(summary.issues_addressed == 3);
    CHECK(summary.short_circuits == 1);

    CHECK(role_sequence(workspace) ==
          std::vector<std::string>{"verify:plan", "refine:plan", "verify:arch",
                                   "short_circuit:arch", "verify:logic", "refine:logic",
                                   "verify:config", "refine:config"});

    // The short-circuited stage's refined artifact is byte-identical to its
    // original.
    const auto& arch = *workspace.graph().find("arch");
    CHECK(workspace.refined_output(arch)->content == "original architecture body\n");
    CHECK(test_support::read_file(dir.path / "arch.md") == "original architecture body\n");
}

TEST_CASE("missing outputs abort unless generation is requested") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    for (const char* name : {"plan.md", "arch.md", "logic.md", "config.yaml"}) {
        fs::remove(dir.path / name);
    }
    auto workspace = Workspace::load(dir.path);

    RunPlan run_plan;
    run_plan.scope = RunScope::planning_only;

    SUBCASE("without the flag the first missing stage is an error") {
        auto provider = script_mock({});
        CHECK_THROWS_WITH_AS(run(workspace, provider, run_plan),
                             "missing output for stage: plan (rerun with --generate-missing)",
                             ValidationError);
    }
    SUBCASE("with the flag each stage is generated then verified and refined") {
        ScriptEntries entries;
        for (const auto& stage_id : test_support::planning_ids()) {
            const auto& spec = *workspace.graph().find(stage_id);
            entries.emplace_back(stage_id, "generate",
                                 generate_response_for(stage_id, spec.kind));
        }
        auto with_loop = standard_entries(workspace, test_support::planning_ids());
        entries.insert(entries.end(), with_loop.begin(), with_loop.end());
        auto provider = script_mock(entries);

        run_plan.generate_missing = true;
        auto summary = run(workspace, provider, run_plan);

        CHECK(summary.provider_calls == 12);
        CHECK(summary.stages_processed == 4);
        CHECK(role_sequence(workspace) ==
              std::vector<std::string>{"generate:plan", "verify:plan", "refine:plan",
                                       "generate:arch", "verify:arch", "refine:arch",
                                       "generate:logic", "verify:logic", "refine:logic",
                                       "generate:config", "verify:config", "refine:config"});

        // Generated originals are snapshotted; refined write-back follows.
        CHECK(test_support::read_file(dir.path / "outputs" / "plan.md") == "GENERATED plan body");
        CHECK(test_support::read_file(dir.path / "plan.md") == "REFINED plan body");
        CHECK(test_support::read_file(dir.path / "outputs" / "config.yaml") ==
              "alpha: 0.5\nbeta: 7");
    }
}

TEST_CASE("full scope processes planning then code stages") {
    TempDir dir;
    test_support::make_workspace(dir.path, 3);
    auto workspace = Workspace::load(dir.path);
    auto full_order = processing_order(workspace, RunScope::full);
    auto provider = script_mock(standard_entries(workspace, full_order));

    RunPlan run_plan;
    auto summary = run(workspace, provider, run_plan);

    CHECK(summary.provider_calls == 14);
    CHECK(summary.stages_processed == 7);

    std::vector<std::string> expected;
    for (const auto& stage_id : full_order) {
        expected.push_back("verify:" + stage_id);
        expected.push_back("refine:" + stage_id);
    }
    CHECK(role_sequence(workspace) == expected);
    CHECK(test_support::read_file(dir.path / "src" / "file3.py") == "REFINED_file3 = 1");
}

TEST_CASE("refinement prompts carry refined upstream artifacts, never stale ones") {
    TempDir dir;
    test_support::make_workspace(dir.path, 3);
    auto workspace = Workspace::load(dir.path);

    ProviderConfig config;
    config.cassette_path = dir.path / "run.jsonl";
    auto provider = script_mock(
        standard_entries(workspace, processing_order(workspace, RunScope::full)), config);

    RunPlan run_plan;
    run(workspace, provider, run_plan);

    // Locate file3's refinement request on the recorded wire traffic.
    std::string content = test_support::read_file(dir.path / "run.jsonl");
    std::string file3_refine;
    size_t start = 0;
    while (start < content.size()) {
        auto end = content.find('\n', start);
        if (end == std::string::npos) break;
        auto entry = json::parse(content.substr(start, end - start));
        std::string text =
            entry.at("request").at("messages").at(0).at("content").get<std::string>();
        if (text.find("### VERIFICATION_REPORT") != std::string::npos &&
            text.find("### CURRENT_OUTPUT\ndef file3():") != std::string::npos) {
            file3_refine = text;
            break;
        }
        start = end + 1;
    }
    REQUIRE_FALSE(file3_refine.empty());

    // Refined artifacts of every earlier stage, under their own labels.
    CHECK(file3_refine.find("### PRIOR_REFINED [file1]\nREFINED_file1 = 1") != std::string::npos);
    CHECK(file3_refine.find("### PRIOR_REFINED [file2]\nREFINED_file2 = 1") != std::string::npos);
    CHECK(file3_refine.find("### PRIOR_REFINED [plan]\nREFINED plan body") != std::string::npos);
    CHECK(file3_refine.find("### PRIOR_REFINED [config]\nalpha: 0.9") != std::string::npos);
    // The superseded originals of upstream stages are gone.
    CHECK(file3_refine.find("def file1():") == std::string::npos);
    CHECK(file3_refine.find("def file2():") == std::string::npos);
    CHECK(file3_refine.find("original plan body") == std::string::npos);
    // Its own original is exactly the CURRENT_OUTPUT under review.
    CHECK(file3_refine.find("def file3():\n    return 3") != std::string::npos);
}

TEST_CASE("extra iterations verify the refinement and stop when it comes back clean") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    auto workspace = Workspace::load(dir.path);

    ScriptEntries entries;
    for (const auto& stage_id : test_support::planning_ids()) {
        const auto& spec = *workspace.graph().find(stage_id);
        entries.emplace_back(stage_id, "verify",
                             test_support::issue_report_json("gap in " + stage_id,
                                                             "fix " + stage_id));
        entries.emplace_back(stage_id, "refine", refine_response_for(stage_id, spec.kind));
        entries.emplace_back(stage_id, "verify", test_support::clean_report_json());
    }
    auto provider = script_mock(entries);

    RunPlan run_plan;
    run_plan.scope = RunScope::planning_only;
    run_plan.max_iterations = 2;
    auto summary = run(workspace, provider, run_plan);

    CHECK(summary.provider_calls == 12);
    CHECK(summary.stages_processed == 4);
    CHECK(summary.issues_found == 4);
    CHECK(summary.issues_addressed == 4);
    CHECK(summary.short_circuits == 4);

    auto sequence = role_sequence(workspace);
    REQUIRE(sequence.size() == 16);
    auto planning = test_support::planning_ids();
    for (size_t i = 0; i < 4; ++i) {
        const auto& stage_id = planning[i];
        CHECK(sequence[i * 4 + 0] == "verify:" + stage_id);
        CHECK(sequence[i * 4 + 1] == "refine:" + stage_id);
        CHECK(sequence[i * 4 + 2] == "verify:" + stage_id);
        CHECK(sequence[i * 4 + 3] == "short_circuit:" + stage_id);
    }

    // The second round verified the refined artifact, which stays on disk.
    const auto& plan_spec = *workspace.graph().find("plan");
    CHECK(workspace.refined_output(plan_spec)->content == "REFINED plan body");

    // Multi-round completion digests the refined artifact, not the original,
    // so resume conservatively reruns such stages.
    auto runlog = workspace.read_runlog();
    AgentOptions opts;
    CHECK_FALSE(stage_is_complete(workspace, plan_spec, runlog, opts));
}

TEST_CASE("an aborted run resumes where it stopped") {
    TempDir dir;
    test_support::make_workspace(dir.path, 3);
    auto workspace = Workspace::load(dir.path);
    auto full_order = processing_order(workspace, RunScope::full);

    // Script covers only the first two stages; the third verification is
    // unscripted and aborts the run.
    auto partial = script_mock(standard_entries(workspace, {"plan", "arch"}));
    RunPlan run_plan;
    CHECK_THROWS_WITH_AS(run(workspace, partial, run_plan), "unscripted mock call: logic:verify",
                         ProviderError);
    CHECK(role_sequence(workspace) ==
          std::vector<std::string>{"verify:plan", "refine:plan", "verify:arch", "refine:arch"});

    auto reloaded = Workspace::load(dir.path);
    auto runlog = reloaded.read_runlog();
    AgentOptions opts;
    CHECK(stage_is_complete(reloaded, *reloaded.graph().find("plan"), runlog, opts));
    CHECK(stage_is_complete(reloaded, *reloaded.graph().find("arch"), runlog, opts));
    CHECK_FALSE(stage_is_complete(reloaded, *reloaded.graph().find("logic"), runlog, opts));

    // The resume run only needs scripts for the unfinished stages.
    auto rest = script_mock(
        standard_entries(reloaded, {"logic", "config", "file1", "file2", "file3"}));
    auto summary = run(reloaded, rest, run_plan);

    CHECK(summary.provider_calls == 10);
    CHECK(summary.stages_processed == 5);

    auto sequence = role_sequence(reloaded);
    REQUIRE(sequence.size() == 14);
    CHECK(sequence[4] == "verify:logic");
    CHECK(sequence.back() == "refine:file3");
    // No new records for the already-complete stages.
    long plan_records = 0;
    for (const auto& record : reloaded.read_runlog()) {
        if (record.stage_id == "plan") ++plan_records;
    }
    CHECK(plan_records == 2);
}

TEST_CASE("deleting one refined artifact reruns exactly that stage") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    auto workspace = Workspace::load(dir.path);
    RunPlan run_plan;
    run_plan.scope = RunScope::planning_only;
    {
        auto provider = script_mock(standard_entries(workspace, test_support::planning_ids()));
        run(workspace, provider, run_plan);
    }

    fs::remove(dir.path / "refined" / "logic.md");

    SUBCASE("a byte-identical re-refinement keeps downstream stages complete") {
        auto reloaded = Workspace::load(dir.path);
        // Same refined content as the first run, so config's recorded context
        // digest still matches afterward.
        auto provider = script_mock(standard_entries(reloaded, {"logic"}));
        auto summary = run(reloaded, provider, run_plan);
        CHECK(summary.stages_processed == 1);
        CHECK(summary.provider_calls == 2);
    }
    SUBCASE("a changed refinement cascades to every downstream stage") {
        auto reloaded = Workspace::load(dir.path);
        ScriptEntries entries{
            {"logic", "verify", test_support::issue_report_json("gap", "fix")},
            {"logic", "refine", "ALTERED logic body"},
        };
        auto downstream = standard_entries(reloaded, {"config"});
        entries.insert(entries.end(), downstream.begin(), downstream.end());
        auto provider = script_mock(entries);
        auto summary = run(reloaded, provider, run_plan);
        // logic reran with new bytes, so config's context digest no longer
        // matched and it reran too. plan and arch stayed complete.
        CHECK(summary.stages_processed == 2);
        CHECK(summary.provider_calls == 4);
        CHECK(test_support::read_file(dir.path / "logic.md") == "ALTERED logic body");
    }
}

TEST_CASE("corrupted runlogs stop the run until a fresh start is requested") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    auto workspace = Workspace::load(dir.path);
    RunPlan run_plan;
    run_plan.scope = RunScope::planning_only;
    {
        auto provider = script_mock(standard_entries(workspace, test_support::planning_ids()));
        run(workspace, provider, run_plan);
    }
    util::append_line(dir.path / "runlog.jsonl", "{broken");

    auto reloaded = Workspace::load(dir.path);
    auto idle = script_mock({});
    CHECK_THROWS_AS(run(reloaded, idle, run_plan), ResumeError);

    // --fresh rotates the log and reprocesses everything.
    run_plan.fresh = true;
    auto provider = script_mock(standard_entries(reloaded, test_support::planning_ids()));
    auto summary = run(reloaded, provider, run_plan);
    CHECK(summary.stages_processed == 4);
    CHECK(summary.provider_calls == 8);
    CHECK(fs::exists(dir.path / "runlog.jsonl.bak"));
    CHECK(reloaded.read_runlog().size() == 8);
}

TEST_CASE("code scope requires a refined logic design first") {
    TempDir dir;
    test_support::make_workspace(dir.path, 1);
    auto workspace = Workspace::load(dir.path);
    RunPlan run_plan;
    run_plan.scope = RunScope::coding_only;
    auto idle = script_mock({});
    CHECK_THROWS_WITH_AS(run(workspace, idle, run_plan),
                         "code scope requires a refined logic_design output; run the plan scope "
                         "first",
                         ValidationError);

    SUBCASE("after a planning run the code scope proceeds") {
        RunPlan planning;
        planning.scope = RunScope::planning_only;
        auto plan_provider =
            script_mock(standard_entries(workspace, test_support::planning_ids()));
        run(workspace, plan_provider, planning);

        auto code_provider = script_mock(standard_entries(workspace, {"file1"}));
        auto summary = run(workspace, code_provider, run_plan);
        CHECK(summary.stages_processed == 1);
        CHECK(summary.provider_calls == 2);
    }
}

TEST_CASE("scope with no stages is an error") {
    TempDir dir;
    test_support::make_workspace(dir.path);  // planning only, no code stages
    auto workspace = Workspace::load(dir.path);
    RunPlan run_plan;
    run_plan.scope = RunScope::coding_only;
    auto idle = script_mock({});
    CHECK_THROWS_WITH_AS(run(workspace, idle, run_plan), "no stages in scope: code",
                         ValidationError);
}

TEST_CASE("a live lock excludes the whole run") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    test_support::write_file(dir.path / ".lock", "run-elsewhere\n");
    auto workspace = Workspace::load(dir.path);
    auto idle = script_mock({});
    RunPlan run_plan;
    CHECK_THROWS_AS(run(workspace, idle, run_plan), ValidationError);
}

TEST_CASE("recording a run and replaying it produce identical outputs") {
    TempDir record_dir;
    TempDir replay_dir;
    test_support::make_workspace(record_dir.path, 1);
    test_support::make_workspace(replay_dir.path, 1);
    auto cassette = record_dir.path / "cassette.jsonl";

    RunPlan run_plan;
    RunSummary recorded_summary;
    {
        auto workspace = Workspace::load(record_dir.path);
        ProviderConfig config;
        config.cassette_path = cassette;
        auto provider = script_mock(
            standard_entries(workspace, processing_order(workspace, RunScope::full), {"arch"}),
            config);
        recorded_summary = run(workspace, provider, run_plan);
    }

    RunSummary replayed_summary;
    {
        auto workspace = Workspace::load(replay_dir.path);
        ProviderConfig config;
        config.mode = ProviderMode::replay;
        config.cassette_path = cassette;
        Provider provider(config);
        replayed_summary = run(workspace, provider, run_plan);
    }

    CHECK(replayed_summary.stages_processed == recorded_summary.stages_processed);
    CHECK(replayed_summary.provider_calls == recorded_summary.provider_calls);
    CHECK(replayed_summary.issues_found == recorded_summary.issues_found);
    CHECK(replayed_summary.issues_addressed == recorded_summary.issues_addressed);
    CHECK(replayed_summary.short_circuits == recorded_summary.short_circuits);

    // Artifacts, reports, and snapshots are byte-identical across the two
    // workspaces; only wall-clock durations may differ.
    auto recorded = tree_snapshot(record_dir.path);
    auto replayed = tree_snapshot(replay_dir.path);
    for (const char* subdir : {"refined", "reports", "outputs"}) {
        for (const auto& [path, content] : recorded) {
            if (path.rfind(subdir, 0) != 0) continue;
            CAPTURE(path);
            REQUIRE(replayed.count(path) == 1);
            CHECK(replayed.at(path) == content);
        }
    }
    for (const char* artifact :
         {"plan.md", "arch.md", "logic.md", "config.yaml", "src/file1.py"}) {
        CHECK(recorded.at(artifact) == replayed.at(artifact));
    }

    auto recorded_log = Workspace::load(record_dir.path).read_runlog();
    auto replayed_log = Workspace::load(replay_dir.path).read_runlog();
    REQUIRE(recorded_log.size() == replayed_log.size());
    for (size_t i = 0; i < recorded_log.size(); ++i) {
        CHECK(recorded_log[i].role == replayed_log[i].role);
        CHECK(recorded_log[i].stage_id == replayed_log[i].stage_id);
        CHECK(recorded_log[i].prompt_hash == replayed_log[i].prompt_hash);
        CHECK(recorded_log[i].response_text == replayed_log[i].response_text);
    }
}

TEST_CASE("single-stage verify and refine operate on the current artifact") {
    TempDir dir;
    test_support::make_workspace(dir.path);
    auto workspace = Workspace::load(dir.path);

    SUBCASE("refine without a report is refused") {
        auto idle = script_mock({});
        CHECK_THROWS_WITH_AS(run_stage_refine(workspace, "plan", idle),
                             "no report for stage: plan", ValidationError);
    }
    SUBCASE("verify persists a report; refine then rewrites the artifact") {
        auto verifier = script_mock({{"plan", "verify",
                                      test_support::issue_report_json("gap", "fix it")}});
        auto report = run_stage_verify(workspace, "plan", verifier);
        CHECK_FALSE(is_clean(report));
        CHECK(workspace.report(*workspace.graph().find("plan")).has_value());

        auto refiner = script_mock({{"plan", "refine", "Standalone refined plan."}});
        auto refined = run_stage_refine(workspace, "plan", refiner);
        CHECK(refined.content == "Standalone refined plan.");
        CHECK(test_support::read_file(dir.path / "plan.md") == "Standalone refined plan.");
        CHECK(test_support::read_file(dir.path / "outputs" / "plan.md") ==
              "original plan body\n");
    }
    SUBCASE("unknown stages are named") {
        auto idle = script_mock({});
        CHECK_THROWS_WITH_AS(run_stage_verify(workspace, "ghost", idle), "unknown stage: ghost",
                             ValidationError);
    }
    SUBCASE("verify twice appends two verify records") {
        auto provider = script_mock(
            {{"plan", "verify", test_support::clean_report_json()},
             {"plan", "verify", test_support::clean_report_json()}});
        run_stage_verify(workspace, "plan", provider);
        run_stage_verify(workspace, "plan", provider);
        CHECK(role_sequence(workspace) ==
              std::vector<std::string>{"verify:plan", "verify:plan"});
    }
}

TEST_CASE("summary JSON carries all six counters") {
    RunSummary summary;
    summary.stages_processed = 4;
    summary.provider_calls = 7;
    summary.issues_found = 3;
    summary.issues_addressed = 3;
    summary.short_circuits = 1;
    summary.duration_ms = 12;
    auto doc = json::parse(summary_to_json(summary));
    CHECK(doc.at("stages_processed").get<long>() == 4);
    CHECK(doc.at("provider_calls").get<long>() == 7);
    CHECK(doc.at("issues_found").get<long>() == 3);
    CHECK(doc.at("issues_addressed").get<long>() == 3);
    CHECK(doc.at("short_circuits").get<long>() == 1);
    CHECK(doc.at("duration_ms").get<long>() == 12);
}
