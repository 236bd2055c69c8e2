#include "relemb/graph.hpp"

#include "relemb/csv.hpp"
#include "relemb/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace relemb {

namespace {

constexpr std::string_view kTokenPrefix = "tt__";
constexpr std::string_view kRidPrefix = "idx__";
constexpr std::string_view kCidPrefix = "cid__";
constexpr std::string_view kSep = "__";

std::uint64_t edge_key(TripartiteGraph::Index a, TripartiteGraph::Index b) {
    if (a > b)
        std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

} // namespace

std::string to_string(NodeKind k) {
    switch (k) {
    case NodeKind::token: return "token";
    case NodeKind::rid: return "rid";
    case NodeKind::cid: return "cid";
    }
    return "?";
}

std::string NodeId::serialize() const {
    switch (kind) {
    case NodeKind::token: return std::string(kTokenPrefix) + label;
    case NodeKind::rid: return std::string(kRidPrefix) + dataset + std::string(kSep) + label;
    case NodeKind::cid: return std::string(kCidPrefix) + dataset + std::string(kSep) + label;
    }
    return {};
}

std::optional<NodeKind> NodeId::kind_of(std::string_view s) {
    if (s.starts_with(kTokenPrefix))
        return NodeKind::token;
    if (s.starts_with(kRidPrefix))
        return NodeKind::rid;
    if (s.starts_with(kCidPrefix))
        return NodeKind::cid;
    return std::nullopt;
}

NodeId NodeId::parse(std::string_view s) {
    auto kind = kind_of(s);
    if (!kind)
        throw FormatError("not a node id: '" + std::string(s) + "'");
    if (*kind == NodeKind::token) {
        auto label = s.substr(kTokenPrefix.size());
        if (label.empty())
            throw FormatError("empty token label in '" + std::string(s) + "'");
        return token(std::string(label));
    }
    auto rest = s.substr(*kind == NodeKind::rid ? kRidPrefix.size() : kCidPrefix.size());
    auto sep = rest.find(kSep);
    if (sep == std::string_view::npos || sep == 0 || sep + kSep.size() >= rest.size())
        throw FormatError("malformed node id '" + std::string(s) + "'");
    return {*kind, std::string(rest.substr(sep + kSep.size())), std::string(rest.substr(0, sep))};
}

std::string dataset_tag(const Relation& r) {
    auto tag = simple_token(r.name);
    return tag.empty() ? "r" : tag;
}

NodeId rid_of(const Relation& r, std::size_t row) {
    std::string label = r.row_keys.empty() ? std::to_string(row) : simple_token(r.row_keys.at(row));
    return NodeId::rid(dataset_tag(r), label.empty() ? std::to_string(row) : label);
}

NodeId cid_of(const Relation& r, std::size_t attr) {
    auto label = simple_token(r.attributes.at(attr));
    return NodeId::cid(dataset_tag(r), label.empty() ? std::to_string(attr) : label);
}

TripartiteGraph::Index TripartiteGraph::add_node(const NodeId& id) {
    auto s = id.serialize();
    if (auto it = index_.find(s); it != index_.end())
        return it->second;
    auto idx = static_cast<Index>(nodes_.size());
    nodes_.push_back({id, s, false, false});
    index_.emplace(std::move(s), idx);
    return idx;
}

void TripartiteGraph::add_edge(Index a, Index b, std::uint32_t multiplicity) {
    pending_[edge_key(a, b)] += multiplicity;
}

std::optional<TripartiteGraph::Index> TripartiteGraph::find(std::string_view serialized) const {
    auto it = index_.find(std::string(serialized));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

void TripartiteGraph::finalize() {
    const auto n = nodes_.size();
    adjacency_.resize(n);
    for (const auto& [key, mult] : pending_) {
        auto a = static_cast<Index>(key >> 32);
        auto b = static_cast<Index>(key & 0xffffffffu);
        adjacency_[a].push_back({b, mult});
        if (a != b)
            adjacency_[b].push_back({a, mult});
    }
    pending_.clear();

    for (auto& adj : adjacency_) {
        std::sort(adj.begin(), adj.end(), [](const Edge& x, const Edge& y) { return x.to < y.to; });
        // merge entries added after an earlier finalize()
        std::vector<Edge> merged;
        for (const auto& e : adj) {
            if (!merged.empty() && merged.back().to == e.to)
                merged.back().multiplicity += e.multiplicity;
            else
                merged.push_back(e);
        }
        adj = std::move(merged);
    }

    rid_adjacency_.assign(n, {});
    prefix_adjacency_.assign(n, {});
    cumulative_.assign(n, {});
    for (Index i = 0; i < n; ++i) {
        std::uint64_t acc = 0;
        std::set<std::string_view> datasets;
        for (const auto& e : adjacency_[i]) {
            acc += e.multiplicity;
            cumulative_[i].push_back(acc);
            const auto& other = nodes_[e.to];
            if (other.id.kind == NodeKind::rid) {
                rid_adjacency_[i].push_back(e.to);
                datasets.insert(other.id.dataset);
            }
            if (other.id.kind != NodeKind::token)
                prefix_adjacency_[i].push_back(e.to);
        }
        nodes_[i].in_both = nodes_[i].id.kind == NodeKind::token && datasets.size() >= 2;
    }
}

std::size_t TripartiteGraph::edge_count() const {
    std::size_t twice = 0;
    for (const auto& adj : adjacency_)
        twice += adj.size();
    return twice / 2;
}

std::uint64_t TripartiteGraph::total_multiplicity() const {
    std::uint64_t twice = 0;
    for (const auto& adj : adjacency_)
        for (const auto& e : adj)
            twice += e.multiplicity;
    return twice / 2;
}

std::vector<TripartiteGraph::Index> TripartiteGraph::nodes_of_kind(NodeKind k) const {
    std::vector<Index> out;
    for (Index i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].id.kind == k)
            out.push_back(i);
    return out;
}

bool TripartiteGraph::is_tripartite(std::string* why) const {
    auto fail = [&](std::string msg) {
        if (why)
            *why = std::move(msg);
        return false;
    };
    if (adjacency_.size() != nodes_.size())
        return fail("graph not finalized");
    for (Index i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.id.kind != NodeKind::token && adjacency_[i].empty())
            return fail("isolated " + n.serialized);
        for (const auto& e : adjacency_[i]) {
            if (e.to >= nodes_.size())
                return fail("dangling edge from " + n.serialized);
            const auto& m = nodes_[e.to];
            bool ok = (n.id.kind == NodeKind::token) != (m.id.kind == NodeKind::token);
            if (!ok)
                return fail("edge " + n.serialized + " -- " + m.serialized + " joins two non-token or two token nodes");
            const auto& back = adjacency_[e.to];
            auto it = std::lower_bound(back.begin(), back.end(), i,
                                       [](const Edge& x, Index v) { return x.to < v; });
            if (it == back.end() || it->to != i || it->multiplicity != e.multiplicity)
                return fail("asymmetric edge " + n.serialized + " -- " + m.serialized);
        }
    }
    return true;
}

bool operator==(const TripartiteGraph& a, const TripartiteGraph& b) {
    if (a.nodes_.size() != b.nodes_.size() || a.distinct_values != b.distinct_values || a.rows != b.rows)
        return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const auto& x = a.nodes_[i];
        const auto& y = b.nodes_[i];
        if (x.serialized != y.serialized || x.in_both != y.in_both || x.numeric != y.numeric)
            return false;
    }
    return a.adjacency_ == b.adjacency_;
}

// Text format: header comments, one "N <id> <flags>" line per node, then one
// "E <id> <id> <multiplicity>" line per undirected edge.
void TripartiteGraph::dump(std::ostream& out) const {
    out << "# relemb-graph 1\n";
    out << "# distinct_values " << distinct_values << "\n";
    out << "# rows " << rows << "\n";
    for (const auto& n : nodes_)
        out << "N " << n.serialized << ' ' << (n.numeric ? "numeric" : "-") << '\n';
    for (Index i = 0; i < nodes_.size(); ++i)
        for (const auto& e : adjacency_[i])
            if (e.to >= i)
                out << "E " << nodes_[i].serialized << ' ' << nodes_[e.to].serialized << ' ' << e.multiplicity
                    << '\n';
}

TripartiteGraph TripartiteGraph::load(std::istream& in) {
    TripartiteGraph g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        auto bad = [&] { return FormatError("graph line " + std::to_string(lineno) + ": malformed '" + line + "'"); };
        if (tag == "#") {
            std::string key;
            std::size_t value = 0;
            if (ls >> key >> value) {
                if (key == "distinct_values")
                    g.distinct_values = value;
                else if (key == "rows")
                    g.rows = value;
            }
        } else if (tag == "N") {
            std::string id, flags;
            if (!(ls >> id >> flags))
                throw bad();
            auto idx = g.add_node(NodeId::parse(id));
            if (flags == "numeric")
                g.mark_numeric(idx);
        } else if (tag == "E") {
            std::string a, b;
            std::uint32_t m = 0;
            if (!(ls >> a >> b >> m) || m == 0)
                throw bad();
            auto ia = g.add_node(NodeId::parse(a));
            auto ib = g.add_node(NodeId::parse(b));
            g.add_edge(ia, ib, m);
        } else {
            throw bad();
        }
    }
    g.finalize();
    std::string why;
    if (!g.is_tripartite(&why))
        throw FormatError("graph is not tripartite: " + why);
    return g;
}

TripartiteGraph build_graph(const std::vector<Relation>& relations, const GraphOptions& options) {
    TripartiteGraph g;
    for (const auto& rel : relations) {
        if (rel.rows.empty() || rel.attributes.empty())
            throw ConfigError("relation '" + rel.name + "' is empty");
        if (!rel.row_keys.empty() && rel.row_keys.size() != rel.rows.size())
            throw SchemaError("relation '" + rel.name + "' has mismatched key column");

        // all-null rows and columns get no node: rid/cid nodes must have an edge
        std::vector<std::vector<std::vector<std::string>>> tokens(rel.rows.size());
        std::vector<bool> column_used(rel.attributes.size(), false);
        for (std::size_t r = 0; r < rel.rows.size(); ++r) {
            const auto& row = rel.rows[r];
            if (row.size() != rel.attributes.size())
                throw SchemaError("relation '" + rel.name + "': ragged row " + std::to_string(r));
            for (std::size_t a = 0; a < row.size(); ++a) {
                tokens[r].push_back(tokenize_cell(row[a], options.strategy));
                if (!tokens[r].back().empty())
                    column_used[a] = true;
            }
        }

        std::vector<TripartiteGraph::Index> cids(rel.attributes.size());
        std::vector<bool> numeric;
        for (std::size_t a = 0; a < rel.attributes.size(); ++a) {
            if (column_used[a])
                cids[a] = g.add_node(cid_of(rel, a));
            else
                spdlog::debug("column {} of {} has no values", rel.attributes[a], rel.name);
            numeric.push_back(options.numeric_attributes.contains(rel.attributes[a]));
        }
        std::set<std::string> seen_keys;
        for (std::size_t r = 0; r < rel.rows.size(); ++r) {
            auto rid_id = rid_of(rel, r);
            if (!seen_keys.insert(rid_id.label).second)
                throw SchemaError("relation '" + rel.name + "': duplicate record key '" + rid_id.label + "'");
            bool empty = std::all_of(tokens[r].begin(), tokens[r].end(), [](const auto& t) { return t.empty(); });
            if (empty) {
                spdlog::debug("row {} of {} has no values", r, rel.name);
                continue;
            }
            auto rid = g.add_node(rid_id);
            for (std::size_t a = 0; a < tokens[r].size(); ++a) {
                for (auto& tok : tokens[r][a]) {
                    auto t = g.add_node(NodeId::token(std::move(tok)));
                    if (numeric[a])
                        g.mark_numeric(t);
                    g.add_edge(t, rid);
                    g.add_edge(t, cids[a]);
                }
            }
        }
    }
    g.distinct_values = count_distinct_values(relations);
    for (const auto& rel : relations)
        g.rows += rel.rows.size();
    g.finalize();
    return g;
}

namespace {

std::string to_serialized(std::string_view raw) {
    if (NodeId::kind_of(raw))
        return NodeId::parse(raw).serialize();
    return NodeId::token(simple_token(raw)).serialize();
}

} // namespace

std::string MergeDictionary::find(const std::string& x) const {
    std::string cur = x;
    while (true) {
        auto it = parent_.find(cur);
        if (it == parent_.end() || it->second == cur)
            return cur;
        cur = it->second;
    }
}

void MergeDictionary::add(std::string_view a_raw, std::string_view b_raw) {
    auto a = to_serialized(a_raw);
    auto b = to_serialized(b_raw);
    if (NodeId::kind_of(a) != NodeId::kind_of(b))
        throw ConfigError("merge dictionary pairs '" + a + "' and '" + b + "' from different namespaces");
    for (const auto& x : {a, b}) {
        if (!order_.contains(x)) {
            order_.emplace(x, order_.size());
            parent_.emplace(x, x);
        }
    }
    auto ra = find(a), rb = find(b);
    if (ra == rb)
        return;
    if (order_.at(rb) < order_.at(ra))
        std::swap(ra, rb);
    parent_[rb] = ra;
}

std::optional<std::string> MergeDictionary::canonical(const std::string& serialized) const {
    if (!parent_.contains(serialized))
        return std::nullopt;
    return find(serialized);
}

MergeDictionary MergeDictionary::load(const std::filesystem::path& path, char delimiter) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open merge dictionary " + path.string());
    MergeDictionary dict;
    csv::Reader reader(in, delimiter);
    while (auto rec = reader.next()) {
        if (rec->size() == 1 && rec->front().empty())
            continue;
        if (rec->size() != 2)
            throw ConfigError("merge dictionary line " + std::to_string(reader.line()) + ": expected two columns");
        dict.add((*rec)[0], (*rec)[1]);
    }
    return dict;
}

TripartiteGraph merge_nodes(const TripartiteGraph& graph, const MergeDictionary& dict) {
    using Index = TripartiteGraph::Index;
    TripartiteGraph out;
    std::vector<Index> remap(graph.node_count());
    for (Index i = 0; i < graph.node_count(); ++i) {
        const auto& n = graph.node(i);
        auto canon = dict.canonical(n.serialized);
        remap[i] = out.add_node(canon ? NodeId::parse(*canon) : n.id);
        if (n.numeric)
            out.mark_numeric(remap[i]);
    }
    for (Index i = 0; i < graph.node_count(); ++i)
        for (const auto& e : graph.neighbors(i))
            if (e.to > i)
                out.add_edge(remap[i], remap[e.to], e.multiplicity);
    out.distinct_values = graph.distinct_values;
    out.rows = graph.rows;
    out.finalize();
    return out;
}

GraphStats graph_stats(const TripartiteGraph& g) {
    GraphStats s;
    std::size_t degree_sum = 0;
    bool first = true;
    for (TripartiteGraph::Index i = 0; i < g.node_count(); ++i) {
        const auto& n = g.node(i);
        switch (n.id.kind) {
        case NodeKind::token: ++s.tokens; break;
        case NodeKind::rid: ++s.rids; break;
        case NodeKind::cid: ++s.cids; break;
        }
        if (n.in_both)
            ++s.in_both_tokens;
        auto d = g.neighbors(i).size();
        degree_sum += d;
        ++s.degree_histogram[d];
        s.min_degree = first ? d : std::min(s.min_degree, d);
        s.max_degree = std::max(s.max_degree, d);
        first = false;
    }
    s.edges = g.edge_count();
    s.total_multiplicity = g.total_multiplicity();
    s.mean_degree = g.node_count() ? static_cast<double>(degree_sum) / static_cast<double>(g.node_count()) : 0.0;
    return s;
}

void write_stats(std::ostream& out, const GraphStats& s) {
    out << "tokens=" << s.tokens << "\n"
        << "rids=" << s.rids << "\n"
        << "cids=" << s.cids << "\n"
        << "edges=" << s.edges << "\n"
        << "total_multiplicity=" << s.total_multiplicity << "\n"
        << "in_both_tokens=" << s.in_both_tokens << "\n"
        << "min_degree=" << s.min_degree << "\n"
        << "max_degree=" << s.max_degree << "\n"
        << "mean_degree=" << s.mean_degree << "\n";
}

} // namespace relemb
