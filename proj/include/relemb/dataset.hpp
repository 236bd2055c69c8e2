#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace relemb {

// A single table cell. Placeholders are produced by apply_skolem and are
// never normalized or split by the tokenizer.
struct Cell {
    std::optional<std::string> text;
    bool placeholder = false;

    static Cell null() { return {}; }
    static Cell value(std::string v) { return {std::move(v), false}; }
    static Cell skolem(std::string id) { return {std::move(id), true}; }

    bool is_null() const { return !text.has_value(); }
    friend bool operator==(const Cell&, const Cell&) = default;
};

struct Relation {
    std::string name;
    std::vector<std::string> attributes;
    std::vector<std::vector<Cell>> rows;
    // Values of the key column, when the input declared one. The key column
    // is not an attribute: it only labels record ids.
    std::vector<std::string> row_keys;

    std::size_t attribute_index(std::string_view attr) const; // throws SchemaError
    bool has_attribute(std::string_view attr) const;
    std::size_t size() const { return rows.size(); }

    friend bool operator==(const Relation&, const Relation&) = default;
};

struct DelimitedFormat {
    char delimiter = ',';
    std::vector<std::string> null_markers = {"", "nan", "null", "n/a"};
    // Column holding record identifiers; dropped from the attributes.
    std::optional<std::string> key_column;
    // Relation name; defaults to the file stem.
    std::optional<std::string> name;
};

Relation load_relation(const std::filesystem::path& path, const DelimitedFormat& format = {});
Relation parse_relation(std::istream& in, const std::string& name, const DelimitedFormat& format = {});

// Lowercase, trim, collapse internal whitespace and turn the reserved
// separator '_' into '-'. Words stay separated by single spaces.
std::string normalize_value(std::string_view raw);

// Whole-value token: normalized words joined by '_'.
std::string simple_token(std::string_view raw);

enum class TokenizationKind { simple, flatten, overlap };

TokenizationKind parse_tokenization(std::string_view s); // throws ConfigError
std::string to_string(TokenizationKind k);

struct TokenizationStrategy {
    TokenizationKind kind = TokenizationKind::simple;
    // simple-normalized whole values shared by both relations; consulted
    // only by the overlap strategy.
    std::unordered_set<std::string> overlap_set;
};

std::vector<std::string> tokenize_cell(std::string_view value, const TokenizationStrategy& strategy);
std::vector<std::string> tokenize_cell(const Cell& cell, const TokenizationStrategy& strategy);

struct OverlapReport {
    std::unordered_set<std::string> shared;
    std::size_t distinct_total = 0; // distinct values across both relations
    double percent() const {
        return distinct_total ? 100.0 * static_cast<double>(shared.size()) / static_cast<double>(distinct_total) : 0.0;
    }
};

OverlapReport compute_overlap(const Relation& r1, const Relation& r2);

// Number of distinct simple-normalized non-null values across relations.
std::size_t count_distinct_values(const std::vector<Relation>& relations);

// Rounds a numeric literal to `sig_figs` significant figures using exact
// decimal arithmetic (half away from zero). Non-numeric text is returned
// unchanged.
std::string round_numeric(std::string_view value, int sig_figs);

struct NumericConfig {
    std::set<std::string> attributes; // attribute names treated as numeric
    int sig_figs = 3;
};

// Rewrites numeric attributes in place with round_numeric.
Relation apply_numeric(Relation r, const NumericConfig& cfg);

struct FunctionalDependency {
    std::vector<std::string> lhs;
    std::vector<std::string> rhs;
    enum class Scope { both, first, second } scope = Scope::both;
};

// Parses "a,b->c,d" (optionally prefixed "1:" or "2:" to restrict scope).
FunctionalDependency parse_fd(std::string_view text);

struct SkolemResult {
    Relation first;
    Relation second;
    std::size_t placeholders = 0;
};

// Repairs nulls and conflicts implied by the FDs with shared placeholders.
// Iterates to a fixpoint so a second application is a no-op.
SkolemResult apply_skolem(Relation r1, Relation r2, const std::vector<FunctionalDependency>& fds);

// Prefix of placeholder labels. Normalized data never starts with '_'.
inline constexpr std::string_view kPlaceholderPrefix = "_sk";

} // namespace relemb
