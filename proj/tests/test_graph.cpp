#include "relemb/error.hpp"
#include "relemb/graph.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace relemb;

namespace {

Relation table(std::string name, std::vector<std::string> attrs, std::vector<std::vector<const char*>> rows) {
    Relation r;
    r.name = std::move(name);
    r.attributes = std::move(attrs);
    for (const auto& row : rows) {
        std::vector<Cell> cells;
        for (const char* v : row)
            cells.push_back(v ? Cell::value(v) : Cell::null());
        r.rows.push_back(std::move(cells));
    }
    return r;
}

std::vector<Relation> customer_tables() {
    return {table("t1", {"A1", "A2"}, {{"Paul", "iPad 4th"}, {"Mike", "iPad 4th"}, {"Steve", "Galaxy"}}),
            table("t2", {"A3", "A4"}, {{"Rick", "Samsung"}, {"Paul", "Apple"}})};
}

GraphOptions simple_options() { return {TokenizationStrategy{TokenizationKind::simple, {}}, {}}; }

bool adjacent(const TripartiteGraph& g, const std::string& a, const std::string& b) {
    auto ia = g.find(a), ib = g.find(b);
    if (!ia || !ib)
        return false;
    for (const auto& e : g.neighbors(*ia))
        if (e.to == *ib)
            return true;
    return false;
}

} // namespace

TEST_CASE("node ids serialize and parse") {
    CHECK(NodeId::token("new_york").serialize() == "tt__new_york");
    CHECK(NodeId::rid("fodors", "12").serialize() == "idx__fodors__12");
    CHECK(NodeId::cid("zagats", "city").serialize() == "cid__zagats__city");
    for (const auto& s : {"tt__a__b", "idx__d__7", "cid__d__x__y"}) {
        auto id = NodeId::parse(s);
        CHECK(id.serialize() == s);
    }
    CHECK(NodeId::parse("tt__a__b").label == "a__b");
    CHECK(NodeId::kind_of("idx__d__1") == NodeKind::rid);
    CHECK_FALSE(NodeId::kind_of("plain"));
    CHECK_THROWS_AS(NodeId::parse("bogus"), FormatError);
}

TEST_CASE("two customer tables give 17 nodes and 19 edges") {
    auto g = build_graph(customer_tables(), simple_options());
    auto s = graph_stats(g);
    CHECK(s.rids == 5);
    CHECK(s.cids == 4);
    CHECK(s.tokens == 8);
    CHECK(g.node_count() == 17);
    CHECK(g.edge_count() == 19);
    CHECK(g.total_multiplicity() == 20); // A2 - "ipad 4th" occurs twice
    CHECK(adjacent(g, "tt__paul", "idx__t1__0"));
    CHECK(adjacent(g, "tt__paul", "idx__t2__1"));
    CHECK(adjacent(g, "tt__paul", "cid__t1__a1"));
    CHECK(adjacent(g, "tt__paul", "cid__t2__a3"));
    CHECK(adjacent(g, "tt__ipad_4th", "idx__t1__1"));
    CHECK_FALSE(adjacent(g, "tt__paul", "tt__apple"));
    CHECK(g.node(*g.find("tt__paul")).in_both);
    CHECK_FALSE(g.node(*g.find("tt__rick")).in_both);
    CHECK(s.in_both_tokens == 1);
    CHECK(g.is_tripartite());
    CHECK(g.rows == 5);
}

TEST_CASE("one row, two single-word cells") {
    auto g = build_graph({table("t", {"a", "b"}, {{"x", "y"}})}, simple_options());
    CHECK(g.node_count() == 5);
    CHECK(g.edge_count() == 4);
}

TEST_CASE("multi-word cells connect every word to the same rid and cid") {
    GraphOptions o{TokenizationStrategy{TokenizationKind::flatten, {}}, {}};
    auto g = build_graph({table("t", {"c"}, {{"a b"}})}, o);
    for (const auto* w : {"tt__a", "tt__b"}) {
        CHECK(adjacent(g, w, "idx__t__0"));
        CHECK(adjacent(g, w, "cid__t__c"));
    }
    CHECK_FALSE(adjacent(g, "tt__a", "tt__b"));
}

TEST_CASE("null cells contribute nothing; key column labels rids") {
    auto r = table("t", {"a", "b"}, {{"x", nullptr}});
    r.row_keys = {"K 1"};
    auto g = build_graph({r}, simple_options());
    CHECK(g.find("idx__t__k_1"));
    CHECK(g.edge_count() == 2);
    CHECK(graph_stats(g).tokens == 1);
}

TEST_CASE("build_graph errors") {
    CHECK_THROWS_AS(build_graph({table("t", {"a"}, {})}, simple_options()), ConfigError);
    auto dup = table("t", {"a"}, {{"x"}, {"y"}});
    dup.row_keys = {"k", "k"};
    CHECK_THROWS_AS(build_graph({dup}, simple_options()), SchemaError);
}

TEST_CASE("numeric attributes mark token nodes") {
    GraphOptions o = simple_options();
    o.numeric_attributes = {"year"};
    auto g = build_graph({table("t", {"year", "name"}, {{"1999", "x"}})}, o);
    CHECK(g.node(*g.find("tt__1999")).numeric);
    CHECK_FALSE(g.node(*g.find("tt__x")).numeric);
}

TEST_CASE("merge synonyms into one token with union adjacency") {
    auto g = build_graph({table("t", {"country"}, {{"Netherlands"}, {"NL"}, {"Italy"}})}, simple_options());
    MergeDictionary d;
    d.add("Netherlands", "NL");
    auto m = merge_nodes(g, d);
    CHECK_FALSE(m.find("tt__nl"));
    auto n = m.find("tt__netherlands");
    REQUIRE(n);
    CHECK(adjacent(m, "tt__netherlands", "idx__t__0"));
    CHECK(adjacent(m, "tt__netherlands", "idx__t__1"));
    CHECK(m.total_multiplicity() == g.total_multiplicity());
    CHECK(m.edge_count() == g.edge_count() - 1); // both cid edges collapse into one
    CHECK(m.is_tripartite());
}

TEST_CASE("merge rids known to match") {
    auto g = build_graph(customer_tables(), simple_options());
    MergeDictionary d;
    d.add("idx__t1__0", "idx__t2__1");
    auto m = merge_nodes(g, d);
    CHECK(m.node_count() == g.node_count() - 1);
    CHECK(adjacent(m, "idx__t1__0", "tt__apple"));
    CHECK(adjacent(m, "idx__t1__0", "tt__ipad_4th"));
    CHECK(m.total_multiplicity() == g.total_multiplicity());
    CHECK(m.is_tripartite());
}

TEST_CASE("empty merge is the identity; cross-namespace pairs are rejected") {
    auto g = build_graph(customer_tables(), simple_options());
    auto m = merge_nodes(g, MergeDictionary{});
    CHECK(m == g);
    CHECK(graph_stats(m) == graph_stats(g));
    MergeDictionary d;
    CHECK_THROWS_AS(d.add("idx__t1__0", "cid__t1__a1"), ConfigError);
    CHECK_THROWS_AS(d.add("paul", "cid__t1__a1"), ConfigError);
}

TEST_CASE("dump and load round-trip; builds are deterministic") {
    auto g = build_graph(customer_tables(), simple_options());
    std::ostringstream a, b;
    g.dump(a);
    build_graph(customer_tables(), simple_options()).dump(b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    auto back = TripartiteGraph::load(in);
    CHECK(back == g);
    CHECK(back.distinct_values == g.distinct_values);
    CHECK(back.rows == g.rows);
    std::istringstream bad("# relemb-graph 1\nE tt__a tt__b 1\n");
    CHECK_THROWS(TripartiteGraph::load(bad));
}

TEST_CASE("random small tables stay tripartite after build and merge") {
    std::mt19937_64 rng(5);
    const char* vals[] = {nullptr, "a", "b", "c d", "e", "a b"};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Relation> rels;
        for (int t = 0; t < 2; ++t) {
            std::vector<std::vector<const char*>> rows;
            auto n = 1 + rng() % 4;
            for (std::size_t i = 0; i < n; ++i)
                rows.push_back({vals[1 + rng() % 5], vals[rng() % 6]});
            rels.push_back(table(t ? "s" : "r", {"x", "y"}, rows));
        }
        GraphOptions o{TokenizationStrategy{trial % 2 ? TokenizationKind::flatten : TokenizationKind::simple, {}}, {}};
        auto g = build_graph(rels, o);
        std::string why;
        CHECK_MESSAGE(g.is_tripartite(&why), why);
        CHECK(graph_stats(g).rids == rels[0].size() + rels[1].size());
        std::size_t used_columns = 0;
        for (const auto& r : rels)
            for (std::size_t a = 0; a < 2; ++a)
                used_columns += std::any_of(r.rows.begin(), r.rows.end(), [a](const auto& row) { return !row[a].is_null(); });
        CHECK(graph_stats(g).cids == used_columns);
        MergeDictionary d;
        d.add("a", "e");
        d.add("idx__r__0", "idx__s__0");
        auto m = merge_nodes(g, d);
        CHECK_MESSAGE(m.is_tripartite(&why), why);
        CHECK(m.total_multiplicity() == g.total_multiplicity());
    }
}
