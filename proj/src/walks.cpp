#include "relemb/walks.hpp"

#include "relemb/csv.hpp"
#include "relemb/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

namespace relemb {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string as_node(std::string_view raw) {
    if (NodeId::kind_of(raw))
        return NodeId::parse(raw).serialize();
    return NodeId::token(simple_token(raw)).serialize();
}

double unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

struct Resolved {
    std::uint32_t target;
    double confidence;
};

template <class T>
std::optional<T> pick(const std::vector<T>& options, double u, double (*weight)(const T&)) {
    double acc = 0.0;
    for (const auto& o : options) {
        acc += weight(o);
        if (u < acc)
            return o;
    }
    return std::nullopt;
}

} // namespace

std::uint64_t corpus_token_target(std::size_t distinct_values, std::size_t rows, const WalkConfig& cfg) {
    if (cfg.token_target)
        return cfg.token_target;
    return (static_cast<std::uint64_t>(distinct_values) + rows) * cfg.tokens_per_item;
}

std::uint64_t sentence_count(std::size_t distinct_values, std::size_t rows, const WalkConfig& cfg) {
    if (cfg.length < 2)
        throw ConfigError("walk length must be at least 2");
    return corpus_token_target(distinct_values, rows, cfg) / cfg.length;
}

WalkBudget assign_budgets(const TripartiteGraph& graph, const WalkConfig& cfg) {
    WalkBudget budget;
    budget.length = cfg.length;
    budget.token_target = corpus_token_target(graph.distinct_values, graph.rows, cfg);
    const auto walks = sentence_count(graph.distinct_values, graph.rows, cfg);

    std::vector<TripartiteGraph::Index> all, shared;
    for (auto i : graph.nodes_of_kind(NodeKind::token)) {
        if (graph.rid_neighbors(i).empty())
            continue;
        all.push_back(i);
        if (graph.node(i).in_both)
            shared.push_back(i);
    }
    if (all.empty())
        throw WalkError("graph has no token node adjacent to a record");
    const std::vector<TripartiteGraph::Index>* eligible = &all;
    if (cfg.shared_starts_only) {
        if (shared.empty())
            spdlog::warn("no token appears in both datasets; starting walks from every token");
        else
            eligible = &shared;
    }

    budget.per_node.assign(graph.node_count(), 0);
    const std::uint64_t n = eligible->size();
    budget.starts.reserve(walks);
    for (std::uint64_t w = 0; w < walks; ++w) {
        auto node = (*eligible)[w % n];
        budget.starts.push_back(node);
        ++budget.per_node[node];
    }
    return budget;
}

WalkBudget explicit_budget(const TripartiteGraph& graph, const std::vector<std::pair<std::string, std::uint32_t>>& counts,
                           std::size_t length) {
    WalkBudget budget;
    budget.length = length;
    budget.per_node.assign(graph.node_count(), 0);
    std::vector<std::pair<TripartiteGraph::Index, std::uint32_t>> resolved;
    for (const auto& [id, count] : counts) {
        auto idx = graph.find(id);
        if (!idx)
            throw LookupError("unknown node " + id);
        resolved.emplace_back(*idx, count);
        budget.per_node[*idx] += count;
    }
    for (std::uint32_t round = 0;; ++round) {
        bool any = false;
        for (const auto& [idx, count] : resolved) {
            if (round < count) {
                budget.starts.push_back(idx);
                any = true;
            }
        }
        if (!any)
            break;
    }
    budget.token_target = static_cast<std::uint64_t>(budget.starts.size()) * length;
    return budget;
}

Walk generate_walk(const TripartiteGraph& graph, TripartiteGraph::Index start, std::size_t length, std::mt19937_64& rng,
                   bool weighted, bool cid_prefix) {
    if (length < 2)
        throw WalkError("walk length must be at least 2");
    Walk walk;
    walk.reserve(length);
    if (cid_prefix) {
        auto pool = graph.rid_cid_neighbors(start);
        if (pool.empty())
            throw WalkError("start node " + graph.node(start).serialized + " has no record or column neighbor");
        walk.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
    } else {
        auto pool = graph.rid_neighbors(start);
        if (pool.empty())
            throw WalkError("start node " + graph.node(start).serialized + " has no record neighbor");
        walk.push_back(pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
    }
    walk.push_back(start);
    auto current = start;
    while (walk.size() < length) {
        auto adj = graph.neighbors(current);
        if (adj.empty())
            throw WalkError("walk reached isolated node " + graph.node(current).serialized);
        std::size_t k;
        if (weighted) {
            auto cum = graph.cumulative_weights(current);
            auto r = std::uniform_int_distribution<std::uint64_t>(0, cum.back() - 1)(rng);
            k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), r) - cum.begin());
        } else {
            k = std::uniform_int_distribution<std::size_t>(0, adj.size() - 1)(rng);
        }
        current = adj[k].to;
        walk.push_back(current);
    }
    return walk;
}

void ReplacementTable::add(std::string_view a_raw, std::string_view b_raw, double confidence) {
    if (!(confidence > 0.0 && confidence <= 1.0))
        throw ConfigError("replacement confidence must be in (0,1], got " + std::to_string(confidence));
    auto a = as_node(a_raw);
    auto b = as_node(b_raw);
    if (NodeId::kind_of(a) != NodeId::kind_of(b))
        throw ConfigError("replacement pairs '" + a + "' and '" + b + "' from different namespaces");
    if (a == b)
        return;
    for (const auto& [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
        double& mass = mass_[from];
        if (mass + confidence > 1.0 + 1e-12)
            throw ConfigError("replacement confidences for '" + from + "' exceed 1");
        mass += confidence;
        targets_[from].push_back({to, confidence});
    }
}

const std::vector<ReplacementTable::Target>* ReplacementTable::targets(const std::string& serialized) const {
    auto it = targets_.find(serialized);
    return it == targets_.end() ? nullptr : &it->second;
}

ReplacementTable ReplacementTable::load(const std::filesystem::path& path, char delimiter) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open replacement table " + path.string());
    ReplacementTable table;
    csv::Reader reader(in, delimiter);
    while (auto rec = reader.next()) {
        if (rec->size() == 1 && rec->front().empty())
            continue;
        if (rec->size() != 3)
            throw ConfigError("replacement table line " + std::to_string(reader.line()) + ": expected three columns");
        double conf = 0.0;
        const auto& c = (*rec)[2];
        auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), conf);
        if (ec != std::errc() || ptr != c.data() + c.size())
            throw ConfigError("replacement table line " + std::to_string(reader.line()) + ": bad confidence '" + c +
                              "'");
        table.add((*rec)[0], (*rec)[1], conf);
    }
    return table;
}

std::uint64_t WalkCorpus::token_count() const {
    std::uint64_t n = 0;
    for (const auto& s : sentences)
        n += s.size();
    return n;
}

std::vector<std::string> emit_sentence(const std::vector<std::string>& walk, const ReplacementTable& table,
                                       std::mt19937_64& rng) {
    std::vector<std::string> out;
    out.reserve(walk.size());
    for (const auto& node : walk) {
        const auto* targets = table.targets(node);
        if (!targets) {
            out.push_back(node);
            continue;
        }
        auto hit = pick<ReplacementTable::Target>(*targets, unit(rng),
                                                  [](const ReplacementTable::Target& t) { return t.confidence; });
        out.push_back(hit ? hit->node : node);
    }
    return out;
}

std::uint64_t walk_seed(std::uint64_t global_seed, std::uint64_t walk_index) {
    return splitmix64(splitmix64(global_seed) ^ walk_index);
}

WalkCorpus build_corpus(const TripartiteGraph& graph, const WalkBudget& budget, const ReplacementTable& table,
                        const WalkConfig& cfg) {
    WalkCorpus corpus;
    corpus.seed = cfg.seed;
    corpus.config = cfg;
    corpus.config.length = budget.length;

    const auto n = graph.node_count();
    corpus.symbols.reserve(n);
    std::unordered_map<std::string, std::uint32_t> symbol_index;
    for (TripartiteGraph::Index i = 0; i < n; ++i) {
        corpus.symbols.push_back(graph.node(i).serialized);
        symbol_index.emplace(graph.node(i).serialized, i);
    }

    // Replacement targets may name nodes absent from the graph; they become
    // extra symbols.
    std::vector<std::vector<Resolved>> replacements(n);
    bool any_replacement = false;
    if (!table.empty()) {
        for (TripartiteGraph::Index i = 0; i < n; ++i) {
            const auto* targets = table.targets(graph.node(i).serialized);
            if (!targets)
                continue;
            for (const auto& t : *targets) {
                auto [it, inserted] = symbol_index.emplace(t.node, static_cast<std::uint32_t>(corpus.symbols.size()));
                if (inserted)
                    corpus.symbols.push_back(t.node);
                replacements[i].push_back({it->second, t.confidence});
            }
            any_replacement = true;
        }
    }

    const auto total = budget.total_walks();
    corpus.sentences.resize(total);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t w = begin; w < end; ++w) {
            std::mt19937_64 rng(walk_seed(cfg.seed, w));
            auto walk = generate_walk(graph, budget.starts[w], budget.length, rng, cfg.weighted, cfg.cid_prefix);
            auto& sentence = corpus.sentences[w];
            sentence.assign(walk.begin(), walk.end());
            if (!any_replacement)
                continue;
            for (auto& el : sentence) {
                const auto& opts = replacements[el];
                if (opts.empty())
                    continue;
                auto hit = pick<Resolved>(opts, unit(rng), [](const Resolved& r) { return r.confidence; });
                if (hit)
                    el = hit->target;
            }
        }
    };

    const unsigned workers = std::max(1u, cfg.workers);
    if (workers == 1 || total < 2 * workers) {
        work(0, total);
    } else {
        std::vector<std::thread> threads;
        const std::size_t chunk = (total + workers - 1) / workers;
        for (unsigned t = 0; t < workers; ++t) {
            auto begin = std::min<std::size_t>(total, t * chunk);
            auto end = std::min<std::size_t>(total, begin + chunk);
            threads.emplace_back(work, begin, end);
        }
        for (auto& th : threads)
            th.join();
    }
    return corpus;
}

void write_corpus(std::ostream& out, const WalkCorpus& corpus) {
    std::string line;
    for (const auto& s : corpus.sentences) {
        line.clear();
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (i)
                line.push_back(' ');
            line += corpus.symbols[s[i]];
        }
        line.push_back('\n');
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    if (!out)
        throw WalkError("failed writing corpus");
}

void write_corpus(const std::filesystem::path& path, const WalkCorpus& corpus) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw WalkError("cannot open " + path.string() + " for writing");
    write_corpus(out, corpus);
}

WalkCorpus read_corpus(std::istream& in) {
    WalkCorpus corpus;
    std::unordered_map<std::string, std::uint32_t> index;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::uint32_t> sentence;
        std::string tok;
        while (ls >> tok) {
            if (!NodeId::kind_of(tok))
                throw FormatError("corpus line " + std::to_string(lineno) + ": '" + tok + "' is not a node id");
            auto [it, inserted] = index.emplace(tok, static_cast<std::uint32_t>(corpus.symbols.size()));
            if (inserted)
                corpus.symbols.push_back(tok);
            sentence.push_back(it->second);
        }
        if (sentence.empty())
            throw FormatError("corpus line " + std::to_string(lineno) + " is empty");
        corpus.sentences.push_back(std::move(sentence));
    }
    if (!corpus.sentences.empty())
        corpus.config.length = corpus.sentences.front().size();
    return corpus;
}

WalkCorpus read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw WalkError("cannot open corpus " + path.string());
    return read_corpus(in);
}

} // namespace relemb
