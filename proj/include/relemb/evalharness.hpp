#pragma once

#include "relemb/integrate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace relemb {

enum class TestKind { MA, MR, MC };

std::string to_string(TestKind k);
TestKind parse_test_kind(std::string_view s);

// Items are normalized cell values; `sources` records "relation.attribute"
// for each item.
struct OddOneOutTest {
    TestKind kind = TestKind::MA;
    std::vector<std::string> items;
    std::string expected;
    std::vector<std::string> sources;
    friend bool operator==(const OddOneOutTest&, const OddOneOutTest&) = default;
};

// A one-to-many attribute pair inside one relation, e.g. director -> title.
struct ConceptPair {
    std::string relation;
    std::string one;
    std::string many;
};

ConceptPair parse_concept_pair(std::string_view text); // "relation:one->many"

struct TestGenOptions {
    std::size_t count = 1000;
    std::uint64_t seed = 1;
    std::vector<ConceptPair> concepts; // required for MC
};

std::vector<OddOneOutTest> gen_tests(const std::vector<Relation>& relations, TestKind kind,
                                     const TestGenOptions& options);

// The word farthest (cosine) from the normalized mean of the unit vectors.
// Ties go to the lexicographically smallest word.
std::string doesnt_match(const EmbeddingSpace& space, const std::vector<std::string>& words);

// Same rule over explicit vectors; returns the position of the odd one.
std::size_t odd_one_out(const std::vector<std::vector<double>>& vectors, const std::vector<std::string>& labels);

struct ScoreReport {
    std::size_t tp = 0, fp = 0, fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_measure = 0.0;

    std::map<std::string, std::string> to_kv() const;
};

ScoreReport score_matches(const MatchSet& predicted, const std::set<std::pair<std::string, std::string>>& truth);

struct KindScore {
    std::size_t tests = 0;
    std::size_t passed = 0;
    std::size_t missing = 0; // items not representable in the space
    double fraction() const { return tests ? static_cast<double>(passed) / static_cast<double>(tests) : 0.0; }
};

struct EqReport {
    std::map<TestKind, KindScore> kinds;
    double average() const;
    std::map<std::string, std::string> to_kv() const;
};

// Each item is represented by the mean vector of its tokens under `strategy`.
EqReport run_eq_suite(const EmbeddingSpace& space, const std::vector<OddOneOutTest>& tests,
                      const TokenizationStrategy& strategy);

void write_tests(std::ostream& out, const std::vector<OddOneOutTest>& tests);
void write_tests(const std::filesystem::path& path, const std::vector<OddOneOutTest>& tests);
std::vector<OddOneOutTest> read_tests(std::istream& in);
std::vector<OddOneOutTest> read_tests(const std::filesystem::path& path);

void write_kv(std::ostream& out, const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> read_kv(std::istream& in);

} // namespace relemb
