#pragma once

#include "relemb/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace relemb {

enum class NodeKind : std::uint8_t { token, rid, cid };

// Serialized as "tt__<label>", "idx__<dataset>__<label>" or
// "cid__<dataset>__<label>". Token nodes are shared across datasets and carry
// no dataset tag.
struct NodeId {
    NodeKind kind = NodeKind::token;
    std::string label;
    std::string dataset;

    static NodeId token(std::string label) { return {NodeKind::token, std::move(label), {}}; }
    static NodeId rid(std::string dataset, std::string label) {
        return {NodeKind::rid, std::move(label), std::move(dataset)};
    }
    static NodeId cid(std::string dataset, std::string label) {
        return {NodeKind::cid, std::move(label), std::move(dataset)};
    }

    std::string serialize() const;
    static NodeId parse(std::string_view text); // throws FormatError
    static std::optional<NodeKind> kind_of(std::string_view serialized);

    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

std::string to_string(NodeKind k);

// Node label helpers shared by graph construction and the integration tasks.
std::string dataset_tag(const Relation& r);
NodeId rid_of(const Relation& r, std::size_t row);
NodeId cid_of(const Relation& r, std::size_t attr);

class TripartiteGraph {
public:
    using Index = std::uint32_t;

    struct Node {
        NodeId id;
        std::string serialized;
        bool in_both = false; // token adjacent to rids of two or more datasets
        bool numeric = false;
    };

    struct Edge {
        Index to;
        std::uint32_t multiplicity;
        friend bool operator==(const Edge&, const Edge&) = default;
    };

    // Construction. Nodes are deduplicated by serialized id; edges accumulate
    // multiplicity. Call finalize() before reading adjacency.
    Index add_node(const NodeId& id);
    void add_edge(Index a, Index b, std::uint32_t multiplicity = 1);
    void mark_numeric(Index n) { nodes_[n].numeric = true; }
    void finalize();

    std::size_t node_count() const { return nodes_.size(); }
    const Node& node(Index i) const { return nodes_[i]; }
    std::optional<Index> find(std::string_view serialized) const;

    std::span<const Edge> neighbors(Index i) const { return adjacency_[i]; }
    std::span<const Index> rid_neighbors(Index i) const { return rid_adjacency_[i]; }
    std::span<const Index> rid_cid_neighbors(Index i) const { return prefix_adjacency_[i]; }
    // Prefix sums of multiplicities, aligned with neighbors(i).
    std::span<const std::uint64_t> cumulative_weights(Index i) const { return cumulative_[i]; }

    std::size_t edge_count() const;             // distinct undirected edges
    std::uint64_t total_multiplicity() const;   // sum over distinct edges
    std::vector<Index> nodes_of_kind(NodeKind k) const;

    // Full edge scan: token<->(rid|cid) only, symmetric, no isolated rid/cid.
    bool is_tripartite(std::string* why = nullptr) const;

    // Dataset statistics used for walk budgets.
    std::size_t distinct_values = 0;
    std::size_t rows = 0;

    void dump(std::ostream& out) const;
    static TripartiteGraph load(std::istream& in);

    friend bool operator==(const TripartiteGraph& a, const TripartiteGraph& b);

private:
    std::vector<Node> nodes_;
    std::unordered_map<std::string, Index> index_;
    std::unordered_map<std::uint64_t, std::uint32_t> pending_;
    std::vector<std::vector<Edge>> adjacency_;
    std::vector<std::vector<Index>> rid_adjacency_;
    std::vector<std::vector<Index>> prefix_adjacency_;
    std::vector<std::vector<std::uint64_t>> cumulative_;
};

struct GraphOptions {
    TokenizationStrategy strategy;
    std::set<std::string> numeric_attributes;
};

// One cid per attribute per relation, one rid per row, and for each non-null
// cell every token is linked to the row's rid and the attribute's cid.
TripartiteGraph build_graph(const std::vector<Relation>& relations, const GraphOptions& options);

// Equivalence classes over serialized node ids; the canonical member of a
// class is the one that appeared first in the dictionary.
class MergeDictionary {
public:
    // Entries without a namespace prefix are token values and are
    // normalized. Throws ConfigError when a pair crosses namespaces.
    void add(std::string_view a, std::string_view b);
    static MergeDictionary load(const std::filesystem::path& path, char delimiter = ',');

    bool empty() const { return order_.empty(); }
    // Canonical serialized id, or nullopt if the id is not in the dictionary.
    std::optional<std::string> canonical(const std::string& serialized) const;

private:
    std::string find(const std::string& x) const;
    std::map<std::string, std::string> parent_;
    std::map<std::string, std::size_t> order_;
};

TripartiteGraph merge_nodes(const TripartiteGraph& graph, const MergeDictionary& dict);

struct GraphStats {
    std::size_t tokens = 0;
    std::size_t rids = 0;
    std::size_t cids = 0;
    std::size_t edges = 0;
    std::uint64_t total_multiplicity = 0;
    std::size_t in_both_tokens = 0;
    std::size_t min_degree = 0;
    std::size_t max_degree = 0;
    double mean_degree = 0.0;
    std::map<std::size_t, std::size_t> degree_histogram;

    friend bool operator==(const GraphStats&, const GraphStats&) = default;
};

GraphStats graph_stats(const TripartiteGraph& graph);
void write_stats(std::ostream& out, const GraphStats& s);

} // namespace relemb
