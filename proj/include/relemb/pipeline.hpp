#pragma once

#include "relemb/align.hpp"
#include "relemb/evalharness.hpp"
#include "relemb/graph.hpp"
#include "relemb/integrate.hpp"
#include "relemb/trainer.hpp"
#include "relemb/walks.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relemb {

enum class PipelineTask { EQ, SM, ER, TM };
enum class TrainingMode { pooled, aligned };

std::string to_string(PipelineTask t);
std::string to_string(TrainingMode m);

struct PipelineConfig {
    std::vector<std::filesystem::path> inputs;
    std::vector<std::string> names; // relation names, default file stems
    std::optional<std::string> key_column;
    char delimiter = ',';
    std::vector<std::string> null_markers = {"", "nan", "null", "n/a"};

    PipelineTask task = PipelineTask::ER;
    TokenizationKind tokenization = TokenizationKind::simple;
    std::set<std::string> numeric_attributes;
    int sig_figs = 3;
    std::vector<std::string> fds;
    std::optional<std::filesystem::path> merge_dictionary;
    std::optional<std::filesystem::path> replacement_table;

    WalkConfig walks;
    TrainingConfig training;

    TrainingMode mode = TrainingMode::pooled;
    AnchorMode anchors = AnchorMode::shared_tokens;
    std::optional<std::filesystem::path> anchor_matches;
    bool normalize_before_align = false;

    EntityOptions entity;
    std::size_t sm_passes = 2;
    std::optional<std::string> tm_attributes; // "attr_in_first,attr_in_second"
    std::size_t tm_neighbors = 10;

    std::optional<std::filesystem::path> truth;
    bool truth_header = true;

    std::size_t eq_tests = 1000;
    std::vector<std::string> eq_concepts; // "relation:one->many"
    std::optional<std::filesystem::path> eq_fixture;

    std::uint64_t seed = 1;
    bool deterministic = false;
    std::optional<std::filesystem::path> output_dir = std::filesystem::path("relemb-out");
    bool write_corpus = true;
};

// Sets one documented key; throws ConfigError for unknown keys or values.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);
// Lines of "key = value"; '#' starts a comment.
PipelineConfig parse_config(std::istream& in);
PipelineConfig load_config(const std::filesystem::path& path);
std::map<std::string, std::string> config_to_kv(const PipelineConfig& cfg);
std::vector<std::string> config_keys();

// Every violation as "key: message"; empty when the config is usable.
std::vector<std::string> config_errors(const PipelineConfig& cfg);
// Returns cfg with derived fields filled (seeds, single worker when
// deterministic); throws ConfigError listing every violation.
PipelineConfig validate_config(PipelineConfig cfg);

struct StageTimes {
    double graph = 0, walks = 0, embedding = 0, tasks = 0;
};

// Stage helpers; run_pipeline chains them.
std::vector<Relation> load_inputs(const PipelineConfig& cfg);
TokenizationStrategy make_strategy(const std::vector<Relation>& relations, TokenizationKind kind);
TripartiteGraph make_graph(const std::vector<Relation>& relations, const PipelineConfig& cfg);
EmbeddingSpace embed(const TripartiteGraph& graph, const PipelineConfig& cfg, WalkCorpus* corpus_out = nullptr);

// Record and column ids of one relation as serialized node ids.
std::vector<std::string> record_ids(const Relation& r);
std::vector<std::string> column_ids(const Relation& r);

struct PipelineResult {
    PipelineConfig config;
    std::vector<Relation> relations;
    GraphStats graph_stats;
    std::size_t sentences = 0;
    EmbeddingSpace space;
    std::optional<MatchSet> matches;
    std::optional<ScoreReport> score;
    std::optional<EqReport> eq;
    StageTimes times;
    std::map<std::string, std::filesystem::path> artifacts;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

void write_timing(std::ostream& out, const StageTimes& t);

} // namespace relemb
