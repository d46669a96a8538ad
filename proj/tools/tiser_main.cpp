// tiser: temporal-reasoning pipeline CLI.
//
// Subcommands: parse, solve, infer, build-dataset, evaluate, stats.
// Exit codes: 0 success, 1 operational error, 2 usage error.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tiser/backend.hpp"
#include "tiser/context_parser.hpp"
#include "tiser/dataset_builder.hpp"
#include "tiser/evaluation.hpp"
#include "tiser/jsonl.hpp"
#include "tiser/pipeline.hpp"
#include "tiser/solver.hpp"
#include "tiser/text.hpp"
#include "tiser/trace_protocol.hpp"

namespace {

using nlohmann::json;
using namespace tiser;

// Option values may name a file or carry the text inline.
std::string file_or_text(const std::string& value) {
    std::error_code ec;
    if (!value.empty() && std::filesystem::is_regular_file(value, ec)) {
        std::ifstream in(value);
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string text = ss.str();
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        return text;
    }
    return value;
}

struct BackendOptions {
    std::string kind = "synthetic";
    std::string endpoint;
    std::string model;
    std::string fixture;
    std::string record;
    double corruption_rate = 0.0;
    uint64_t seed = 0;
    long timeout_ms = 120000;
    int max_in_flight = 4;
};

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
    cmd->add_option("--backend", opts.kind, "Backend kind: synthetic|replay|scripted|http")
        ->default_val("synthetic");
    cmd->add_option("--endpoint", opts.endpoint, "Chat-completion endpoint URL (http backend)");
    cmd->add_option("--model", opts.model, "Model name (http backend)");
    cmd->add_option("--fixture", opts.fixture,
                    "Fixture JSONL (replay) or response script JSON (scripted)");
    cmd->add_option("--record", opts.record, "Record responses into this fixture JSONL");
    cmd->add_option("--corruption-rate", opts.corruption_rate,
                    "Synthetic backend answer-corruption probability");
    cmd->add_option("--seed", opts.seed, "Deterministic seed")->default_val("0");
    cmd->add_option("--timeout-ms", opts.timeout_ms, "Per-request timeout");
    cmd->add_option("--max-in-flight", opts.max_in_flight, "HTTP concurrency cap");
}

std::shared_ptr<Backend> build_backend(const BackendOptions& opts) {
    BackendConfig cfg;
    auto kind = parse_backend_kind(opts.kind);
    if (!kind) throw BackendError(BackendError::Code::config, "unknown backend: " + opts.kind);
    cfg.kind = *kind;
    cfg.endpoint = opts.endpoint;
    cfg.model_name = opts.model;
    cfg.fixture_path = opts.fixture;
    cfg.corruption_rate = opts.corruption_rate;
    cfg.seed = opts.seed;
    cfg.timeout_ms = opts.timeout_ms;
    cfg.max_in_flight = opts.max_in_flight;
    auto backend = make_backend(cfg);
    if (!opts.record.empty()) backend = make_recording_backend(backend, opts.record);
    return backend;
}

struct PipelineOptions {
    std::string mode = "tiser";
    std::string stages;  // ablation mode: comma-separated included stages
    int max_iterations = 3;
    std::string stop_policy = "both";
    bool multi_call = false;
    int max_tokens = 1024;
    double temperature = 0.0;
    std::string template_dir;
};

void add_pipeline_options(CLI::App* cmd, PipelineOptions& opts) {
    cmd->add_option("--mode", opts.mode,
                    "Prompt mode: standard|tiser|tiser_with_gold|ablation")
        ->default_val("tiser");
    cmd->add_option("--stages", opts.stages,
                    "Included stages for --mode ablation, e.g. reasoning,timeline");
    cmd->add_option("--max-iterations", opts.max_iterations, "Reflection loop bound")
        ->default_val("3");
    cmd->add_option("--stop-policy", opts.stop_policy,
                    "timeline_consistent|reflection_clean|both")
        ->default_val("both");
    cmd->add_flag("--multi-call", opts.multi_call, "One generation per stage");
    cmd->add_option("--max-tokens", opts.max_tokens, "Generation token budget");
    cmd->add_option("--temperature", opts.temperature, "Sampling temperature");
    cmd->add_option("--template-dir", opts.template_dir,
                    "Directory with tiser.txt/standard.txt/revision.txt overrides");
}

PipelineConfig build_pipeline_config(const PipelineOptions& opts) {
    PipelineConfig cfg;
    auto mode = parse_prompt_mode(opts.mode);
    if (!mode) throw std::runtime_error("unknown mode: " + opts.mode);
    cfg.mode = *mode;
    if (cfg.mode == PromptMode::ablation) {
        std::stringstream ss(opts.stages);
        std::string part;
        while (std::getline(ss, part, ',')) {
            std::string name = trim(part);
            if (name == "reasoning") cfg.ablation_stages.insert(Stage::reasoning);
            else if (name == "timeline") cfg.ablation_stages.insert(Stage::timeline);
            else if (name == "reflection") cfg.ablation_stages.insert(Stage::reflection);
            else if (!name.empty()) throw std::runtime_error("unknown stage: " + name);
        }
    }
    cfg.max_iterations = opts.max_iterations;
    auto policy = parse_stop_policy(opts.stop_policy);
    if (!policy) throw std::runtime_error("unknown stop policy: " + opts.stop_policy);
    cfg.stop_policy = *policy;
    cfg.single_call = !opts.multi_call;
    cfg.max_tokens = opts.max_tokens;
    cfg.temperature = opts.temperature;
    if (!opts.template_dir.empty()) cfg.templates = PromptTemplates::load_dir(opts.template_dir);
    return cfg;
}

std::map<std::string, std::string> template_hashes(const PromptTemplates& t) {
    return {{"tiser", sha256_hex(t.tiser)},
            {"standard", sha256_hex(t.standard)},
            {"revision", sha256_hex(t.revision)}};
}

RunManifest start_manifest(const std::string& command, const std::vector<std::string>& argv,
                           uint64_t seed) {
    RunManifest m;
    m.command = command;
    m.argv = argv;
    m.seed = seed;
    m.started_at = iso8601_utc_now();
    return m;
}

void finish_manifest(RunManifest& m, const std::string& out_path) {
    m.finished_at = iso8601_utc_now();
    std::string path = out_path + ".manifest.json";
    write_manifest(path, m);
    std::fprintf(stderr, "manifest: %s\n", path.c_str());
}

ProgressFn stderr_progress(const char* label) {
    return [label](size_t done, size_t total) {
        if (done == total || done % 100 == 0)
            std::fprintf(stderr, "%s: %zu/%zu\n", label, done, total);
    };
}

// --- subcommand bodies -------------------------------------------------------

int cmd_parse(const std::string& context_arg, bool as_json) {
    std::string context = file_or_text(context_arg);
    ParsedContext parsed = parse_context(context);
    json out = to_json(parsed);
    if (!parsed.facts.empty()) {
        Timeline tl = build_timeline(parsed.facts);
        out["timeline"] = to_json(tl);
        out["consistency"] = to_json(check_consistency(tl));
    }
    if (as_json) {
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "format: " << to_string(parsed.format) << "\n"
                  << "facts: " << parsed.facts.size() << "\n"
                  << "residual: " << parsed.residual.size() << "\n";
        if (out.contains("timeline")) {
            for (const auto& e : out["timeline"]["events"]) {
                std::cout << "  " << e["at"]["year"].get<int>() << " ["
                          << e["boundary"].get<std::string>() << "] "
                          << e["label"].get<std::string>() << "\n";
            }
            std::cout << "consistent: "
                      << (out["consistency"]["consistent"].get<bool>() ? "true" : "false")
                      << "\n";
        }
    }
    return 0;
}

int cmd_solve(const std::string& question_arg, const std::string& context_arg) {
    SolverResult result = solve(file_or_text(question_arg), file_or_text(context_arg));
    std::cout << to_json(result).dump() << "\n";
    return result.ok() ? 0 : 1;
}

int cmd_infer(const std::vector<std::string>& argv, const std::string& input,
              const std::string& out_path, const std::string& dataset,
              const BackendOptions& backend_opts, const PipelineOptions& pipeline_opts,
              int parallelism) {
    auto samples = load_benchmark(input, parse_dataset_kind(dataset));
    auto backend = build_backend(backend_opts);
    PipelineConfig cfg = build_pipeline_config(pipeline_opts);

    RunManifest manifest = start_manifest("infer", argv, backend_opts.seed);
    manifest.config = {{"mode", pipeline_opts.mode},
                       {"stages", pipeline_opts.stages},
                       {"max_iterations", cfg.max_iterations},
                       {"stop_policy", pipeline_opts.stop_policy},
                       {"single_call", cfg.single_call},
                       {"parallelism", parallelism},
                       {"backend", backend_opts.kind},
                       {"corruption_rate", backend_opts.corruption_rate},
                       {"input", input}};
    manifest.template_hashes = template_hashes(cfg.templates);
    manifest.backend_id = backend->id();

    std::vector<BatchItem> items;
    items.reserve(samples.size());
    for (const auto& s : samples) {
        std::optional<std::string> gold;
        if (cfg.mode == PromptMode::tiser_with_gold) gold = s.gold_answer;
        items.push_back({s.id, s.question, s.context, gold});
    }
    auto results = run_batch(items, *backend, cfg, parallelism, stderr_progress("infer"));

    std::vector<json> lines;
    lines.reserve(results.size());
    long converged = 0, maxed = 0, failed = 0;
    for (const auto& r : results) {
        lines.push_back(to_json(r));
        switch (r.stop_reason) {
            case StopReason::converged: ++converged; break;
            case StopReason::max_iterations: ++maxed; break;
            case StopReason::generation_failed: ++failed; break;
        }
    }
    write_jsonl_atomic(out_path, lines);
    manifest.outputs = {out_path};
    finish_manifest(manifest, out_path);

    std::cout << format_overhead_table(token_overhead(results));
    std::fprintf(stderr, "converged=%ld max_iterations=%ld failed=%ld seed=%llu\n", converged,
                 maxed, failed, static_cast<unsigned long long>(backend_opts.seed));
    return 0;
}

int cmd_build_dataset(const std::vector<std::string>& argv, const std::string& input,
                      const std::string& out_path, const std::string& stats_path,
                      const std::string& dataset, const std::string& match_policy,
                      const BackendOptions& backend_opts, const PipelineOptions& pipeline_opts,
                      int parallelism) {
    auto samples = load_benchmark(input, parse_dataset_kind(dataset));
    auto backend = build_backend(backend_opts);
    PipelineConfig cfg = build_pipeline_config(pipeline_opts);
    auto policy = parse_match_policy(match_policy);
    if (!policy) throw std::runtime_error("unknown match policy: " + match_policy);

    RunManifest manifest = start_manifest("build-dataset", argv, backend_opts.seed);
    manifest.config = {{"match_policy", match_policy},
                       {"max_iterations", cfg.max_iterations},
                       {"parallelism", parallelism},
                       {"backend", backend_opts.kind},
                       {"corruption_rate", backend_opts.corruption_rate},
                       {"input", input}};
    manifest.template_hashes = template_hashes(cfg.templates);
    manifest.backend_id = backend->id();

    auto out = build(samples, *backend, cfg, *policy, parallelism,
                     stderr_progress("build-dataset"));

    std::vector<json> lines;
    lines.reserve(out.retained.size());
    for (const auto& aug : out.retained)
        lines.push_back(sft_json(aug, format_sft(aug, cfg.templates)));
    write_jsonl_atomic(out_path, lines);
    manifest.outputs = {out_path};

    if (!stats_path.empty()) {
        atomic_write_file(stats_path, to_json(out.stats).dump(2) + "\n");
        manifest.outputs.push_back(stats_path);
    }
    finish_manifest(manifest, out_path);

    std::cout << format_build_stats(out.stats);
    std::fprintf(stderr, "retained=%ld/%ld seed=%llu\n", out.stats.overall.retained(),
                 out.stats.overall.total, static_cast<unsigned long long>(backend_opts.seed));
    return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                 const std::string& em_policy, const std::string& out_path) {
    auto policy = parse_em_policy(em_policy);
    if (!policy) throw std::runtime_error("unknown em policy: " + em_policy);

    std::map<std::string, std::string> predictions;
    for (const auto& j : read_jsonl(pred_path)) {
        std::string pred = j.contains("prediction") ? j.value("prediction", "")
                                                    : j.value("final_answer", "");
        predictions[j.value("id", "")] = pred;
    }

    std::vector<ScoredPrediction> scored;
    long missing = 0;
    for (const auto& j : read_jsonl(gold_path)) {
        std::string id = j.value("id", "");
        std::vector<std::string> golds;
        if (j.contains("answers")) {
            for (const auto& a : j["answers"]) golds.push_back(a.get<std::string>());
        } else {
            golds.push_back(j.value("answer", ""));
        }
        std::string dataset = j.value("dataset", "other");
        auto it = predictions.find(id);
        if (it == predictions.end()) ++missing;
        scored.push_back(score_prediction(id, it == predictions.end() ? "" : it->second,
                                          std::move(golds), dataset, *policy));
    }
    if (missing > 0)
        std::fprintf(stderr, "warning: %ld gold ids had no prediction (scored as empty)\n",
                     missing);

    EvalReport report = aggregate(scored, *policy);
    std::cout << format_eval_table(report);
    if (!out_path.empty()) atomic_write_file(out_path, to_json(report).dump(2) + "\n");
    return 0;
}

int cmd_stats(const std::string& runs_path, const std::string& out_path) {
    std::vector<PipelineResult> results;
    for (const auto& j : read_jsonl(runs_path)) results.push_back(pipeline_result_from_json(j));
    TokenOverheadReport report = token_overhead(results);
    std::cout << format_overhead_table(report);
    if (!out_path.empty()) atomic_write_file(out_path, to_json(report).dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TISER temporal-reasoning pipeline"};
    app.require_subcommand(1);

    std::vector<std::string> raw_args(argv, argv + argc);

    // parse
    auto* parse_cmd = app.add_subcommand("parse", "Parse a temporal context into facts");
    std::string parse_context_arg;
    bool parse_json = false;
    parse_cmd->add_option("--context", parse_context_arg, "Context file or literal text")
        ->required();
    parse_cmd->add_flag("--json", parse_json, "Emit full JSON");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "Answer a question with the symbolic solver");
    std::string solve_question, solve_context;
    solve_cmd->add_option("--question", solve_question, "Question file or literal text")
        ->required();
    solve_cmd->add_option("--context", solve_context, "Context file or literal text")
        ->required();

    // infer
    auto* infer_cmd = app.add_subcommand("infer", "Run the reasoning pipeline over samples");
    std::string infer_input, infer_out, infer_dataset = "other";
    int infer_parallelism = 1;
    BackendOptions infer_backend;
    PipelineOptions infer_pipeline;
    infer_cmd->add_option("--input", infer_input, "Samples JSONL")->required();
    infer_cmd->add_option("--out", infer_out, "Results JSONL")->required();
    infer_cmd->add_option("--dataset", infer_dataset, "Default dataset tag for inputs");
    infer_cmd->add_option("--parallelism", infer_parallelism, "Concurrent executors")
        ->default_val("1");
    add_backend_options(infer_cmd, infer_backend);
    add_pipeline_options(infer_cmd, infer_pipeline);

    // build-dataset
    auto* build_cmd =
        app.add_subcommand("build-dataset", "Generate and filter SFT training data");
    std::string build_input, build_out, build_stats_out, build_dataset = "other";
    std::string build_match = "exact_normalized";
    int build_parallelism = 1;
    BackendOptions build_backend_opts;
    PipelineOptions build_pipeline;
    build_cmd->add_option("--input", build_input, "Samples JSONL")->required();
    build_cmd->add_option("--out", build_out, "Retained SFT samples JSONL")->required();
    build_cmd->add_option("--stats-out", build_stats_out, "Stats JSON path");
    build_cmd->add_option("--dataset", build_dataset, "Default dataset tag for inputs");
    build_cmd->add_option("--match-policy", build_match, "exact_normalized|em")
        ->default_val("exact_normalized");
    build_cmd->add_option("--parallelism", build_parallelism, "Concurrent executors")
        ->default_val("1");
    add_backend_options(build_cmd, build_backend_opts);
    add_pipeline_options(build_cmd, build_pipeline);

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions with EM and token F1");
    std::string eval_pred, eval_gold, eval_policy = "normalized", eval_out;
    eval_cmd->add_option("--pred", eval_pred, "Predictions JSONL ({id, prediction})")
        ->required();
    eval_cmd->add_option("--gold", eval_gold, "Gold JSONL ({id, answer[, dataset]})")
        ->required();
    eval_cmd->add_option("--em-policy", eval_policy, "normalized|raw")
        ->default_val("normalized");
    eval_cmd->add_option("--out", eval_out, "Report JSON path");

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "Token-overhead report over run records");
    std::string stats_runs, stats_out;
    stats_cmd->add_option("--runs", stats_runs, "Results JSONL from infer")->required();
    stats_cmd->add_option("--out", stats_out, "Report JSON path");

    // Key=value config files per subcommand; command-line flags win.
    for (auto* cmd : {parse_cmd, solve_cmd, infer_cmd, build_cmd, eval_cmd, stats_cmd}) {
        cmd->set_config("--config", "", "Key=value config file; command-line flags win");
        cmd->allow_config_extras(CLI::config_extras_mode::ignore_all);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (parse_cmd->parsed()) return cmd_parse(parse_context_arg, parse_json);
        if (solve_cmd->parsed()) return cmd_solve(solve_question, solve_context);
        if (infer_cmd->parsed())
            return cmd_infer(raw_args, infer_input, infer_out, infer_dataset, infer_backend,
                             infer_pipeline, infer_parallelism);
        if (build_cmd->parsed())
            return cmd_build_dataset(raw_args, build_input, build_out, build_stats_out,
                                     build_dataset, build_match, build_backend_opts,
                                     build_pipeline, build_parallelism);
        if (eval_cmd->parsed())
            return cmd_evaluate(eval_pred, eval_gold, eval_policy, eval_out);
        if (stats_cmd->parsed()) return cmd_stats(stats_runs, stats_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
