#include "relemb/integrate.hpp"

#include "relemb/csv.hpp"
#include "relemb/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

namespace relemb {

std::string to_string(MatchTask t) {
    switch (t) {
    case MatchTask::schema: return "SM";
    case MatchTask::entity: return "ER";
    case MatchTask::token: return "TM";
    }
    return "?";
}

MatchTask parse_match_task(std::string_view s) {
    if (s == "SM" || s == "sm" || s == "schema")
        return MatchTask::schema;
    if (s == "ER" || s == "er" || s == "entity")
        return MatchTask::entity;
    if (s == "TM" || s == "tm" || s == "token")
        return MatchTask::token;
    throw FormatError("unknown match task '" + std::string(s) + "'");
}

std::string to_string(CandidatePool p) {
    switch (p) {
    case CandidatePool::vocab: return "vocab";
    case CandidatePool::all: return "all";
    case CandidatePool::cross: return "cross";
    }
    return "?";
}

CandidatePool parse_candidate_pool(std::string_view s) {
    if (s == "all")
        return CandidatePool::all;
    if (s == "cross")
        return CandidatePool::cross;
    if (s == "vocab")
        return CandidatePool::vocab;
    throw ConfigError("unknown candidate pool '" + std::string(s) + "' (expected vocab, all or cross)");
}

std::set<std::pair<std::string, std::string>> MatchSet::pairs() const {
    std::set<std::pair<std::string, std::string>> out;
    for (const auto& m : matches)
        out.emplace(m.left, m.right);
    return out;
}

bool MatchSet::one_to_one() const {
    std::unordered_set<std::string> left, right;
    for (const auto& m : matches)
        if (!left.insert(m.left).second || !right.insert(m.right).second)
            return false;
    return true;
}

namespace {

void require_vocabulary(const EmbeddingSpace& space, const std::vector<std::string>& ids) {
    for (const auto& id : ids)
        if (!space.contains(id))
            throw LookupError("'" + id + "' is not in the embedding vocabulary");
}

} // namespace

MatchSet match_schemas(const EmbeddingSpace& space, const std::vector<std::string>& first,
                       const std::vector<std::string>& second, std::size_t max_passes) {
    require_vocabulary(space, first);
    require_vocabulary(space, second);
    MatchSet result{MatchTask::schema, {}};
    if (first.empty() || second.empty())
        return result;

    CosineIndex left(space, first), right(space, second);
    std::map<std::string, std::vector<Neighbor>> pool;
    std::set<std::string> in_first(first.begin(), first.end());
    for (std::size_t i = 0; i < left.size(); ++i)
        pool[left.id(i)] = right.rank(left.unit(i), right.size());
    for (std::size_t i = 0; i < right.size(); ++i)
        pool[right.id(i)] = left.rank(right.unit(i), left.size());

    std::vector<std::string> todo(first);
    todo.insert(todo.end(), second.begin(), second.end());
    std::unordered_set<std::string> pending(todo.begin(), todo.end());

    auto drop = [](std::vector<Neighbor>& list, const std::string& id) {
        list.erase(std::remove_if(list.begin(), list.end(), [&](const Neighbor& n) { return n.id == id; }),
                   list.end());
    };

    for (std::size_t pass = 0; pass < max_passes && !pending.empty(); ++pass) {
        for (const auto& c : todo) {
            if (!pending.contains(c))
                continue;
            auto& dc = pool[c];
            if (dc.empty()) {
                pending.erase(c);
                continue;
            }
            const auto closest = dc.front();
            auto& back = pool[closest.id];
            if (!back.empty() && back.front().id == c) {
                if (in_first.contains(c))
                    result.matches.push_back({c, closest.id, closest.distance});
                else
                    result.matches.push_back({closest.id, c, closest.distance});
                pending.erase(c);
                pending.erase(closest.id);
            } else {
                drop(dc, closest.id);
                drop(back, c);
            }
        }
        std::erase_if(todo, [&](const std::string& c) { return !pending.contains(c); });
    }
    return result;
}

MatchSet match_entities(const EmbeddingSpace& space, const std::vector<std::string>& first,
                        const std::vector<std::string>& second, const EntityOptions& options) {
    if (options.n_top == 0)
        throw ConfigError("n_top must be at least 1");
    require_vocabulary(space, first);
    require_vocabulary(space, second);
    MatchSet result{MatchTask::entity, {}};
    if (first.empty() || second.empty())
        return result;

    const std::unordered_set<std::string> in_first(first.begin(), first.end());
    const std::unordered_set<std::string> in_second(second.begin(), second.end());
    std::vector<std::string> everyone(first);
    everyone.insert(everyone.end(), second.begin(), second.end());
    CosineIndex all(space, everyone);
    std::optional<CosineIndex> left, right, vocab;
    if (options.pool == CandidatePool::cross) {
        left.emplace(space, first);
        right.emplace(space, second);
    } else if (options.pool == CandidatePool::vocab) {
        vocab.emplace(space, space.words());
    }

    // Closest cross-dataset entry among the n_top kept for `id`.
    std::unordered_map<std::string, std::optional<Neighbor>> cache;
    auto closest = [&](const std::string& id) -> const std::optional<Neighbor>& {
        if (auto it = cache.find(id); it != cache.end())
            return it->second;
        const bool from_first = in_first.contains(id);
        auto pos = all.position(id);
        std::vector<Neighbor> ranked;
        if (options.pool == CandidatePool::all)
            ranked = all.rank(all.unit(*pos), options.n_top, pos);
        else if (options.pool == CandidatePool::vocab)
            ranked = vocab->rank(all.unit(*pos), options.n_top, vocab->position(id));
        else
            ranked = (from_first ? *right : *left).rank(all.unit(*pos), options.n_top);
        const auto& other = from_first ? in_second : in_first;
        std::optional<Neighbor> best;
        for (auto& n : ranked) {
            if (other.contains(n.id)) {
                best = std::move(n);
                break;
            }
        }
        return cache.emplace(id, std::move(best)).first->second;
    };

    for (const auto& r : first) {
        const auto& r1 = closest(r);
        if (!r1)
            continue;
        const auto& r2 = closest(r1->id);
        if (r2 && r2->id == r)
            result.matches.push_back({r, r1->id, r1->distance});
    }
    return result;
}

MatchSet match_tokens(const EmbeddingSpace& space, const std::vector<std::string>& domain_a,
                      const std::set<std::string>& domain_b, std::size_t n) {
    MatchSet result{MatchTask::token, {}};
    CosineIndex vocab(space, space.words());
    for (const auto& t : domain_a) {
        auto pos = vocab.position(t);
        if (!pos)
            continue;
        for (const auto& nb : vocab.rank(vocab.unit(*pos), n, pos)) {
            if (domain_b.contains(nb.id)) {
                result.matches.push_back({t, nb.id, nb.distance});
                break;
            }
        }
    }
    return result;
}

void write_matches(std::ostream& out, const MatchSet& m) {
    out << "# task=" << to_string(m.task) << '\n';
    csv::write_record(out, {"left", "right", "distance"});
    char buf[32];
    for (const auto& x : m.matches) {
        std::snprintf(buf, sizeof buf, "%.9g", x.distance);
        csv::write_record(out, {x.left, x.right, buf});
    }
}

void write_matches(const std::filesystem::path& path, const MatchSet& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    write_matches(out, m);
}

MatchSet read_matches(std::istream& in) {
    MatchSet m;
    std::string first;
    if (in.peek() == '#') {
        std::getline(in, first);
        auto p = first.find("task=");
        if (p != std::string::npos)
            m.task = parse_match_task(first.substr(p + 5));
    }
    csv::Reader reader(in);
    bool header = true;
    while (auto rec = reader.next()) {
        if (header) {
            header = false;
            if (!rec->empty() && (*rec)[0] == "left")
                continue;
        }
        if (rec->size() != 3)
            throw FormatError("match file line " + std::to_string(reader.line()) + ": expected 3 columns");
        double dist = 0;
        const auto& d = (*rec)[2];
        auto [ptr, ec] = std::from_chars(d.data(), d.data() + d.size(), dist);
        if (ec != std::errc() || ptr != d.data() + d.size())
            throw FormatError("match file line " + std::to_string(reader.line()) + ": bad distance '" + d + "'");
        m.matches.push_back({(*rec)[0], (*rec)[1], dist});
    }
    return m;
}

MatchSet read_matches(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open match file " + path.string());
    return read_matches(in);
}

std::set<std::pair<std::string, std::string>> parse_truth(std::istream& in, const TruthFormat& fmt) {
    auto node = [&](const std::string& raw, const std::string& dataset) {
        if (NodeId::kind_of(raw))
            return NodeId::parse(raw).serialize();
        auto label = simple_token(raw);
        return NodeId{fmt.kind, label, fmt.kind == NodeKind::token ? std::string() : dataset}.serialize();
    };
    std::set<std::pair<std::string, std::string>> out;
    csv::Reader reader(in, fmt.delimiter);
    bool skip = fmt.header;
    while (auto rec = reader.next()) {
        if (skip) {
            skip = false;
            continue;
        }
        if (rec->size() == 1 && rec->front().empty())
            continue;
        if (rec->size() < 2)
            throw FormatError("truth line " + std::to_string(reader.line()) + ": expected two columns");
        if (fmt.label_column) {
            if (*fmt.label_column >= rec->size())
                throw FormatError("truth line " + std::to_string(reader.line()) + ": missing label column");
            if ((*rec)[*fmt.label_column] != "1")
                continue;
        }
        out.emplace(node((*rec)[0], fmt.left_dataset), node((*rec)[1], fmt.right_dataset));
    }
    return out;
}

std::set<std::pair<std::string, std::string>> load_truth(const std::filesystem::path& path, const TruthFormat& fmt) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open truth file " + path.string());
    return parse_truth(in, fmt);
}

} // namespace relemb
