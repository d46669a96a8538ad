#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "tiser/dataset_builder.hpp"
#include "tiser/evaluation.hpp"
#include "tiser/pipeline.hpp"
#include "tiser/solver.hpp"

namespace tiser {

// Run-record schema version; bump on breaking field changes.
inline constexpr int kResultSchemaVersion = 1;

nlohmann::json to_json(const PipelineResult& result);
PipelineResult pipeline_result_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SolverResult& result);
nlohmann::json to_json(const ParsedContext& parsed);
nlohmann::json to_json(const Timeline& timeline);
nlohmann::json to_json(const ConsistencyReport& report);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const TokenOverheadReport& report);
nlohmann::json to_json(const BuildStats& stats);
nlohmann::json sft_json(const AugmentedSample& sample, const SftExample& sft);

// Writes via a temp file in the same directory plus rename, so a crash never
// leaves a partial file behind.
void atomic_write_file(const std::string& path, const std::string& content);

std::vector<nlohmann::json> read_jsonl(const std::string& path);
void write_jsonl_atomic(const std::string& path, const std::vector<nlohmann::json>& lines);

// Everything needed to reproduce a run with deterministic backends.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config;
    uint64_t seed = 0;
    std::string backend_id;
    std::map<std::string, std::string> template_hashes;
    std::string started_at;
    std::string finished_at;
    std::vector<std::string> outputs;
};

nlohmann::json to_json(const RunManifest& manifest);
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace tiser
