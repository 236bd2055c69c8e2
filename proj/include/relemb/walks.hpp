#pragma once

#include "relemb/graph.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace relemb {

struct WalkConfig {
    std::size_t length = 60;
    // Corpus token target; 0 means (distinct values + rows) * tokens_per_item.
    std::uint64_t token_target = 0;
    std::uint64_t tokens_per_item = 1000;
    // Start walks only from tokens shared by both datasets.
    bool shared_starts_only = false;
    // Choose neighbors proportionally to edge multiplicity instead of uniformly.
    bool weighted = false;
    // Draw the sentence prefix from rid and cid neighbors rather than rids only.
    bool cid_prefix = false;
    std::uint64_t seed = 1;
    unsigned workers = 1;
};

// floor(target / length), with the default target formula when target is 0.
std::uint64_t corpus_token_target(std::size_t distinct_values, std::size_t rows, const WalkConfig& cfg);
std::uint64_t sentence_count(std::size_t distinct_values, std::size_t rows, const WalkConfig& cfg);

struct WalkBudget {
    std::uint64_t token_target = 0;
    std::size_t length = 0;
    // Walk starts in generation order: round-robin over eligible nodes, so
    // walk i starts from starts[i].
    std::vector<TripartiteGraph::Index> starts;
    // Walks assigned per node, indexed by node.
    std::vector<std::uint32_t> per_node;

    std::size_t total_walks() const { return starts.size(); }
};

WalkBudget assign_budgets(const TripartiteGraph& graph, const WalkConfig& cfg);

// Budget from explicit per-node counts (serialized id -> walks).
WalkBudget explicit_budget(const TripartiteGraph& graph, const std::vector<std::pair<std::string, std::uint32_t>>& counts,
                           std::size_t length);

using Walk = std::vector<TripartiteGraph::Index>;

// (rid, start, neighbor, ...) of exactly `length` nodes.
Walk generate_walk(const TripartiteGraph& graph, TripartiteGraph::Index start, std::size_t length, std::mt19937_64& rng,
                   bool weighted = false, bool cid_prefix = false);

// Symmetric node substitutions applied when a walk is written out.
class ReplacementTable {
public:
    struct Target {
        std::string node;
        double confidence;
    };

    // Throws ConfigError for confidence outside (0,1], mixed namespaces, or
    // when the confidences attached to one node add up to more than 1.
    void add(std::string_view a, std::string_view b, double confidence);
    static ReplacementTable load(const std::filesystem::path& path, char delimiter = ',');

    bool empty() const { return targets_.empty(); }
    const std::vector<Target>* targets(const std::string& serialized) const;

private:
    std::unordered_map<std::string, std::vector<Target>> targets_;
    std::unordered_map<std::string, double> mass_;
};

struct WalkCorpus {
    std::vector<std::string> symbols;
    std::vector<std::vector<std::uint32_t>> sentences;
    std::uint64_t seed = 0;
    WalkConfig config;

    std::uint64_t token_count() const;
};

// Applies the table to a finished walk; traversal is not affected.
std::vector<std::string> emit_sentence(const std::vector<std::string>& walk, const ReplacementTable& table,
                                       std::mt19937_64& rng);

// Seed for walk i, independent of how walks are split across workers.
std::uint64_t walk_seed(std::uint64_t global_seed, std::uint64_t walk_index);

WalkCorpus build_corpus(const TripartiteGraph& graph, const WalkBudget& budget, const ReplacementTable& table,
                        const WalkConfig& cfg);

void write_corpus(std::ostream& out, const WalkCorpus& corpus);
void write_corpus(const std::filesystem::path& path, const WalkCorpus& corpus);
WalkCorpus read_corpus(std::istream& in);
WalkCorpus read_corpus(const std::filesystem::path& path);

} // namespace relemb
