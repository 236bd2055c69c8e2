#include "relemb/evalharness.hpp"

#include "relemb/csv.hpp"
#include "relemb/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace relemb {

std::string to_string(TestKind k) {
    switch (k) {
    case TestKind::MA: return "MA";
    case TestKind::MR: return "MR";
    case TestKind::MC: return "MC";
    }
    return "?";
}

TestKind parse_test_kind(std::string_view s) {
    if (s == "MA" || s == "ma")
        return TestKind::MA;
    if (s == "MR" || s == "mr")
        return TestKind::MR;
    if (s == "MC" || s == "mc")
        return TestKind::MC;
    throw ConfigError("unknown test kind '" + std::string(s) + "'");
}

ConceptPair parse_concept_pair(std::string_view text) {
    auto colon = text.find(':');
    auto arrow = text.find("->");
    if (colon == std::string_view::npos || arrow == std::string_view::npos || arrow < colon)
        throw ConfigError("concept pair '" + std::string(text) + "' is not of the form relation:one->many");
    ConceptPair c{std::string(text.substr(0, colon)), std::string(text.substr(colon + 1, arrow - colon - 1)),
                  std::string(text.substr(arrow + 2))};
    if (c.relation.empty() || c.one.empty() || c.many.empty() || c.one == c.many)
        throw ConfigError("concept pair '" + std::string(text) + "' is incomplete");
    return c;
}

namespace {

std::optional<std::string> usable(const Cell& c) {
    if (c.is_null() || c.placeholder)
        return std::nullopt;
    auto v = normalize_value(*c.text);
    if (v.empty())
        return std::nullopt;
    return v;
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

std::string source(const Relation& r, std::size_t attr) { return r.name + "." + r.attributes[attr]; }

// Distinct values per attribute, in first-seen order.
std::vector<std::vector<std::string>> attribute_domains(const Relation& r) {
    std::vector<std::vector<std::string>> out(r.attributes.size());
    std::vector<std::set<std::string>> seen(r.attributes.size());
    for (const auto& row : r.rows)
        for (std::size_t a = 0; a < row.size(); ++a)
            if (auto v = usable(row[a]); v && seen[a].insert(*v).second)
                out[a].push_back(*v);
    return out;
}

void shuffle_items(OddOneOutTest& t, std::mt19937_64& rng) {
    std::vector<std::size_t> order(t.items.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    OddOneOutTest s{t.kind, {}, t.expected, {}};
    for (auto i : order) {
        s.items.push_back(t.items[i]);
        s.sources.push_back(t.sources[i]);
    }
    t = std::move(s);
}

// Attributes of all relations grouped by name, as in the union of the inputs.
// Each distinct value keeps the source it was first seen in.
struct NamedDomain {
    std::string name;
    std::vector<std::string> values;
    std::vector<std::string> sources;
    std::set<std::string> seen;
};

std::vector<OddOneOutTest> gen_ma(const std::vector<Relation>& relations, const TestGenOptions& o,
                                  std::mt19937_64& rng) {
    std::vector<NamedDomain> named;
    std::map<std::string, std::size_t> index;
    for (const auto& rel : relations) {
        const auto domains = attribute_domains(rel);
        for (std::size_t a = 0; a < rel.attributes.size(); ++a) {
            auto [it, fresh] = index.try_emplace(rel.attributes[a], named.size());
            if (fresh)
                named.push_back({rel.attributes[a], {}, {}, {}});
            auto& d = named[it->second];
            for (const auto& v : domains[a])
                if (d.seen.insert(v).second) {
                    d.values.push_back(v);
                    d.sources.push_back(source(rel, a));
                }
        }
    }
    std::vector<std::size_t> eligible, all;
    for (std::size_t i = 0; i < named.size(); ++i) {
        const auto n = named[i].values.size();
        if (n)
            all.push_back(i);
        if (n >= 4)
            eligible.push_back(i);
        else
            spdlog::warn("MA: skipping attribute {} with {} distinct values", named[i].name, n);
    }
    std::vector<OddOneOutTest> tests;
    if (eligible.empty() || all.size() < 2) {
        spdlog::warn("MA: no usable attribute pair");
        return tests;
    }
    for (std::size_t attempt = 0; tests.size() < o.count && attempt < o.count * 50; ++attempt) {
        const auto& main = named[eligible[pick(rng, eligible.size())]];
        const auto& other = named[all[pick(rng, all.size())]];
        if (&other == &main)
            continue;
        const auto k = pick(rng, other.values.size());
        const auto& odd = other.values[k];
        if (main.seen.count(odd))
            continue;
        OddOneOutTest t{TestKind::MA, {}, odd, {}};
        std::set<std::size_t> chosen;
        while (chosen.size() < 4)
            chosen.insert(pick(rng, main.values.size()));
        for (auto i : chosen) {
            t.items.push_back(main.values[i]);
            t.sources.push_back(main.sources[i]);
        }
        t.items.push_back(odd);
        t.sources.push_back(other.sources[k]);
        shuffle_items(t, rng);
        tests.push_back(std::move(t));
    }
    return tests;
}

std::vector<OddOneOutTest> gen_mr(const std::vector<Relation>& relations, const TestGenOptions& o,
                                  std::mt19937_64& rng) {
    std::vector<std::pair<std::size_t, std::size_t>> rows;
    for (std::size_t r = 0; r < relations.size(); ++r) {
        if (relations[r].attributes.size() < 2)
            continue;
        for (std::size_t i = 0; i < relations[r].rows.size(); ++i) {
            std::size_t n = 0;
            for (const auto& c : relations[r].rows[i])
                n += usable(c).has_value();
            if (n >= 3)
                rows.emplace_back(r, i);
        }
    }
    std::vector<OddOneOutTest> tests;
    if (rows.empty()) {
        spdlog::warn("MR: no row with at least three values");
        return tests;
    }
    for (std::size_t attempt = 0; tests.size() < o.count && attempt < o.count * 50; ++attempt) {
        auto [r, i] = rows[pick(rng, rows.size())];
        const auto& rel = relations[r];
        OddOneOutTest t{TestKind::MR, {}, {}, {}};
        std::vector<std::size_t> attrs;
        for (std::size_t a = 0; a < rel.attributes.size(); ++a) {
            auto v = usable(rel.rows[i][a]);
            if (!v || std::find(t.items.begin(), t.items.end(), *v) != t.items.end())
                continue;
            t.items.push_back(*v);
            t.sources.push_back(source(rel, a));
            attrs.push_back(a);
        }
        if (t.items.size() < 3)
            continue;
        const auto slot = pick(rng, t.items.size());
        const auto j = pick(rng, rel.rows.size());
        if (j == i)
            continue;
        auto v = usable(rel.rows[j][attrs[slot]]);
        if (!v || std::find(t.items.begin(), t.items.end(), *v) != t.items.end())
            continue;
        t.items[slot] = *v;
        t.expected = *v;
        shuffle_items(t, rng);
        tests.push_back(std::move(t));
    }
    return tests;
}

std::vector<OddOneOutTest> gen_mc(const std::vector<Relation>& relations, const TestGenOptions& o,
                                  std::mt19937_64& rng) {
    struct Concept {
        const Relation* rel;
        std::size_t one, many;
        std::vector<std::pair<std::string, std::vector<std::string>>> groups; // x -> distinct many values
        std::vector<std::string> many_values;
    };
    std::vector<Concept> concepts;
    for (const auto& cp : o.concepts) {
        auto it = std::find_if(relations.begin(), relations.end(), [&](const Relation& r) { return r.name == cp.relation; });
        if (it == relations.end())
            throw ConfigError("concept pair names unknown relation '" + cp.relation + "'");
        Concept c{&*it, it->attribute_index(cp.one), it->attribute_index(cp.many), {}, {}};
        std::map<std::string, std::vector<std::string>> groups;
        std::set<std::string> seen_many;
        for (const auto& row : it->rows) {
            auto x = usable(row[c.one]);
            auto y = usable(row[c.many]);
            if (!x || !y)
                continue;
            auto& g = groups[*x];
            if (std::find(g.begin(), g.end(), *y) == g.end())
                g.push_back(*y);
            if (seen_many.insert(*y).second)
                c.many_values.push_back(*y);
        }
        for (auto& [x, g] : groups)
            if (g.size() >= 3)
                c.groups.emplace_back(x, std::move(g));
        if (c.groups.empty())
            spdlog::warn("MC: {}:{}->{} has no value with three related values", cp.relation, cp.one, cp.many);
        else
            concepts.push_back(std::move(c));
    }
    std::vector<OddOneOutTest> tests;
    if (concepts.empty()) {
        if (o.concepts.empty())
            spdlog::warn("MC: no concept pair declared");
        return tests;
    }
    for (std::size_t attempt = 0; tests.size() < o.count && attempt < o.count * 50; ++attempt) {
        const auto& c = concepts[pick(rng, concepts.size())];
        const auto& [x, g] = c.groups[pick(rng, c.groups.size())];
        const auto& y = c.many_values[pick(rng, c.many_values.size())];
        if (y == x || std::find(g.begin(), g.end(), y) != g.end())
            continue;
        OddOneOutTest t{TestKind::MC, {x}, y, {source(*c.rel, c.one)}};
        std::set<std::size_t> chosen;
        while (chosen.size() < 3)
            chosen.insert(pick(rng, g.size()));
        for (auto i : chosen) {
            if (g[i] == x)
                break;
            t.items.push_back(g[i]);
            t.sources.push_back(source(*c.rel, c.many));
        }
        if (t.items.size() != 4)
            continue;
        t.items.push_back(y);
        t.sources.push_back(source(*c.rel, c.many));
        shuffle_items(t, rng);
        tests.push_back(std::move(t));
    }
    return tests;
}

} // namespace

std::vector<OddOneOutTest> gen_tests(const std::vector<Relation>& relations, TestKind kind,
                                     const TestGenOptions& options) {
    std::mt19937_64 rng(options.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(kind));
    std::vector<OddOneOutTest> tests;
    switch (kind) {
    case TestKind::MA: tests = gen_ma(relations, options, rng); break;
    case TestKind::MR: tests = gen_mr(relations, options, rng); break;
    case TestKind::MC: tests = gen_mc(relations, options, rng); break;
    }
    if (tests.size() < options.count)
        spdlog::warn("{}: generated {} of {} requested tests", to_string(kind), tests.size(), options.count);
    return tests;
}

std::size_t odd_one_out(const std::vector<std::vector<double>>& vectors, const std::vector<std::string>& labels) {
    if (vectors.empty())
        throw ConfigError("odd-one-out on an empty set");
    const std::size_t d = vectors.front().size();
    std::vector<std::vector<double>> units;
    std::vector<double> mean(d, 0.0);
    for (const auto& v : vectors) {
        double n = 0;
        for (double x : v)
            n += x * x;
        n = std::sqrt(n);
        std::vector<double> u(v);
        if (n > 0)
            for (double& x : u)
                x /= n;
        for (std::size_t c = 0; c < d; ++c)
            mean[c] += u[c];
        units.push_back(std::move(u));
    }
    double mn = 0;
    for (double& x : mean) {
        x /= static_cast<double>(vectors.size());
        mn += x * x;
    }
    mn = std::sqrt(mn);
    if (mn > 0)
        for (double& x : mean)
            x /= mn;
    std::size_t best = 0;
    double best_sim = 0;
    for (std::size_t i = 0; i < units.size(); ++i) {
        double s = 0;
        for (std::size_t c = 0; c < d; ++c)
            s += units[i][c] * mean[c];
        if (i == 0 || s < best_sim || (s == best_sim && labels[i] < labels[best])) {
            best = i;
            best_sim = s;
        }
    }
    return best;
}

std::string doesnt_match(const EmbeddingSpace& space, const std::vector<std::string>& words) {
    std::vector<std::vector<double>> vectors;
    for (const auto& w : words) {
        auto v = space.vector(w);
        vectors.emplace_back(v.begin(), v.end());
    }
    return words[odd_one_out(vectors, words)];
}

std::map<std::string, std::string> ScoreReport::to_kv() const {
    char buf[32];
    auto fmt = [&](double x) {
        std::snprintf(buf, sizeof buf, "%.6f", x);
        return std::string(buf);
    };
    return {{"tp", std::to_string(tp)},  {"fp", std::to_string(fp)},   {"fn", std::to_string(fn)},
            {"precision", fmt(precision)}, {"recall", fmt(recall)}, {"f_measure", fmt(f_measure)}};
}

ScoreReport score_matches(const MatchSet& predicted, const std::set<std::pair<std::string, std::string>>& truth) {
    if (truth.empty())
        throw ConfigError("ground truth is empty");
    ScoreReport r;
    auto pred = predicted.pairs();
    for (const auto& p : pred) {
        if (truth.contains(p))
            ++r.tp;
        else
            ++r.fp;
    }
    r.fn = truth.size() - r.tp;
    r.precision = pred.empty() ? 0.0 : static_cast<double>(r.tp) / static_cast<double>(pred.size());
    r.recall = static_cast<double>(r.tp) / static_cast<double>(truth.size());
    r.f_measure = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

double EqReport::average() const {
    if (kinds.empty())
        return 0.0;
    double s = 0;
    for (const auto& [k, v] : kinds)
        s += v.fraction();
    return s / static_cast<double>(kinds.size());
}

std::map<std::string, std::string> EqReport::to_kv() const {
    std::map<std::string, std::string> kv;
    char buf[32];
    for (const auto& [k, v] : kinds) {
        auto name = to_string(k);
        std::snprintf(buf, sizeof buf, "%.6f", v.fraction());
        kv[name] = buf;
        kv[name + ".tests"] = std::to_string(v.tests);
        kv[name + ".passed"] = std::to_string(v.passed);
        kv[name + ".missing"] = std::to_string(v.missing);
        if (v.tests == 0)
            kv[name + ".empty"] = "true";
    }
    std::snprintf(buf, sizeof buf, "%.6f", average());
    kv["average"] = buf;
    return kv;
}

EqReport run_eq_suite(const EmbeddingSpace& space, const std::vector<OddOneOutTest>& tests,
                      const TokenizationStrategy& strategy) {
    EqReport report;
    std::map<std::string, std::optional<std::vector<double>>> cache;
    auto item_vector = [&](const std::string& item) -> const std::optional<std::vector<double>>& {
        if (auto it = cache.find(item); it != cache.end())
            return it->second;
        std::optional<std::vector<double>> v;
        std::size_t found = 0;
        std::vector<double> sum(space.dim(), 0.0);
        for (const auto& tok : tokenize_cell(std::string_view(item), strategy)) {
            auto idx = space.find(NodeId::token(tok).serialize());
            if (!idx)
                continue;
            auto x = space.vector(*idx);
            for (std::size_t c = 0; c < sum.size(); ++c)
                sum[c] += x[c];
            ++found;
        }
        if (found) {
            for (double& x : sum)
                x /= static_cast<double>(found);
            v = std::move(sum);
        }
        return cache.emplace(item, std::move(v)).first->second;
    };

    for (auto kind : {TestKind::MA, TestKind::MR, TestKind::MC})
        report.kinds[kind];
    for (const auto& t : tests) {
        auto& score = report.kinds[t.kind];
        ++score.tests;
        std::vector<std::vector<double>> vectors;
        bool ok = true;
        for (const auto& item : t.items) {
            const auto& v = item_vector(item);
            if (!v) {
                ok = false;
                break;
            }
            vectors.push_back(*v);
        }
        if (!ok) {
            ++score.missing;
            continue;
        }
        if (t.items[odd_one_out(vectors, t.items)] == t.expected)
            ++score.passed;
    }
    std::erase_if(report.kinds, [](const auto& kv) { return kv.second.tests == 0; });
    return report;
}

void write_tests(std::ostream& out, const std::vector<OddOneOutTest>& tests) {
    for (const auto& t : tests) {
        std::vector<std::string> rec{to_string(t.kind), t.expected, std::to_string(t.items.size())};
        rec.insert(rec.end(), t.items.begin(), t.items.end());
        rec.insert(rec.end(), t.sources.begin(), t.sources.end());
        csv::write_record(out, rec);
    }
}

void write_tests(const std::filesystem::path& path, const std::vector<OddOneOutTest>& tests) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    write_tests(out, tests);
}

std::vector<OddOneOutTest> read_tests(std::istream& in) {
    std::vector<OddOneOutTest> tests;
    csv::Reader reader(in);
    while (auto rec = reader.next()) {
        if (rec->size() == 1 && rec->front().empty())
            continue;
        auto bad = [&](const std::string& why) {
            return FormatError("test file line " + std::to_string(reader.line()) + ": " + why);
        };
        if (rec->size() < 3)
            throw bad("too few fields");
        std::size_t n = 0;
        try {
            n = std::stoul((*rec)[2]);
        } catch (const std::exception&) {
            throw bad("bad item count");
        }
        if (rec->size() != 3 + 2 * n && rec->size() != 3 + n)
            throw bad("item count does not match the record");
        OddOneOutTest t{parse_test_kind((*rec)[0]), {}, (*rec)[1], {}};
        t.items.assign(rec->begin() + 3, rec->begin() + 3 + static_cast<std::ptrdiff_t>(n));
        if (rec->size() == 3 + 2 * n)
            t.sources.assign(rec->begin() + 3 + static_cast<std::ptrdiff_t>(n), rec->end());
        if (std::find(t.items.begin(), t.items.end(), t.expected) == t.items.end())
            throw bad("expected item is not part of the set");
        tests.push_back(std::move(t));
    }
    return tests;
}

std::vector<OddOneOutTest> read_tests(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open test file " + path.string());
    return read_tests(in);
}

void write_kv(std::ostream& out, const std::map<std::string, std::string>& kv) {
    for (const auto& [k, v] : kv)
        out << k << '=' << v << '\n';
}

std::map<std::string, std::string> read_kv(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#')
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw FormatError("line " + std::to_string(lineno) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

} // namespace relemb
