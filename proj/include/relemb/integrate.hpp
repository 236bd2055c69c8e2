#pragma once

#include "relemb/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace relemb {

enum class MatchTask { schema, entity, token };

std::string to_string(MatchTask t);
MatchTask parse_match_task(std::string_view s);

struct Match {
    std::string left;
    std::string right;
    double distance = 0.0;
    friend bool operator==(const Match&, const Match&) = default;
};

struct MatchSet {
    MatchTask task = MatchTask::entity;
    std::vector<Match> matches;

    std::set<std::pair<std::string, std::string>> pairs() const;
    // True when no left and no right id repeats.
    bool one_to_one() const;
};

// Mutual closest columns with candidate removal, at most `max_passes`
// passes over the unmatched columns.
MatchSet match_schemas(const EmbeddingSpace& space, const std::vector<std::string>& first,
                       const std::vector<std::string>& second, std::size_t max_passes = 2);

enum class CandidatePool {
    // Rank each record against the whole vocabulary (tokens, records and
    // columns) and keep the cross-dataset records among the n_top.
    vocab,
    // Rank each record against every record of both datasets and keep the
    // cross-dataset entries that survive the cut.
    all,
    // Rank only against the other dataset.
    cross,
};

std::string to_string(CandidatePool p);
CandidatePool parse_candidate_pool(std::string_view s);

struct EntityOptions {
    std::size_t n_top = 10;
    CandidatePool pool = CandidatePool::vocab;
};

// Record r in the first dataset matches r' when r' is the closest
// cross-dataset entry in r's list and r is the closest in r''s list.
MatchSet match_entities(const EmbeddingSpace& space, const std::vector<std::string>& first,
                        const std::vector<std::string>& second, const EntityOptions& options = {});

// For each token of `domain_a`, the first member of `domain_b` in its n
// nearest neighbors over the whole vocabulary.
MatchSet match_tokens(const EmbeddingSpace& space, const std::vector<std::string>& domain_a,
                      const std::set<std::string>& domain_b, std::size_t n = 10);

void write_matches(std::ostream& out, const MatchSet& m);
void write_matches(const std::filesystem::path& path, const MatchSet& m);
MatchSet read_matches(std::istream& in);
MatchSet read_matches(const std::filesystem::path& path);

// Two-column file of true pairs. Unprefixed entries are record keys of the
// given datasets and are turned into record node ids.
struct TruthFormat {
    char delimiter = ',';
    bool header = true;
    std::string left_dataset;
    std::string right_dataset;
    NodeKind kind = NodeKind::rid;
    // When set, only rows whose value in this column is "1" are pairs.
    std::optional<std::size_t> label_column;
};

std::set<std::pair<std::string, std::string>> load_truth(const std::filesystem::path& path, const TruthFormat& fmt);
std::set<std::pair<std::string, std::string>> parse_truth(std::istream& in, const TruthFormat& fmt);

} // namespace relemb
