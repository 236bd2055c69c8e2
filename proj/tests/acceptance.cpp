// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
// and exits non-zero when any criterion fails. Pass criterion numbers as
// arguments to run a subset.

#include "relemb/align.hpp"
#include "relemb/error.hpp"
#include "relemb/evalharness.hpp"
#include "relemb/integrate.hpp"
#include "relemb/pipeline.hpp"

#include "oracles.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace relemb;
namespace fs = std::filesystem;
using Eigen::MatrixXd;

namespace {

const fs::path data_dir = RELEMB_DATA_DIR;
const std::vector<std::uint64_t> seeds = {1, 2, 3};

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fixed(double x, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PipelineConfig fz_config(std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.inputs = {data_dir / "fz" / "fodors.csv", data_dir / "fz" / "zagats.csv"};
    cfg.key_column = "id";
    cfg.tokenization = TokenizationKind::overlap;
    cfg.task = PipelineTask::ER;
    cfg.truth = data_dir / "fz" / "matches.csv";
    cfg.seed = seed;
    cfg.deterministic = true;
    cfg.output_dir.reset();
    return cfg;
}

// Entity matching runs use overlap tokenization like the FZ runs; embedding
// quality runs keep the default tokenization.
PipelineConfig da_config(std::uint64_t seed, TokenizationKind tokenization) {
    PipelineConfig cfg;
    cfg.inputs = {data_dir / "da" / "dblp.csv", data_dir / "da" / "acm.csv"};
    cfg.key_column = "id";
    cfg.tokenization = tokenization;
    cfg.numeric_attributes = {"year"};
    cfg.sig_figs = 4;
    cfg.task = PipelineTask::EQ;
    cfg.eq_tests = 1000;
    cfg.eq_concepts = {"dblp:venue->title", "acm:venue->title"};
    cfg.seed = seed;
    cfg.deterministic = true;
    cfg.output_dir.reset();
    return cfg;
}

// FZ runs are shared by the ER and SM criteria. DA runs are cached per seed
// and tokenization.
std::map<std::uint64_t, PipelineResult> fz_runs;
std::map<std::pair<std::uint64_t, TokenizationKind>, PipelineResult> da_runs;

const PipelineResult& fz_run(std::uint64_t seed) {
    if (!fz_runs.contains(seed)) {
        auto t0 = std::chrono::steady_clock::now();
        fz_runs.emplace(seed, run_pipeline(fz_config(seed)));
        std::cout << "  [fz seed " << seed << ": " << fixed(seconds_since(t0), 1) << " s]" << std::endl;
    }
    return fz_runs.at(seed);
}

const PipelineResult& da_run(std::uint64_t seed, TokenizationKind tokenization) {
    const auto key = std::pair{seed, tokenization};
    if (!da_runs.contains(key)) {
        auto t0 = std::chrono::steady_clock::now();
        da_runs.emplace(key, run_pipeline(da_config(seed, tokenization)));
        std::cout << "  [da seed " << seed << ", " << to_string(tokenization) << ": " << fixed(seconds_since(t0), 1)
                  << " s]" << std::endl;
    }
    return da_runs.at(key);
}

// 1. Sentence counts from the budget formula.
Outcome corpus_size() {
    WalkConfig defaults;
    const auto fz_table = sentence_count(3282, 864, defaults);
    const auto da_table = sentence_count(6555, 4910, defaults);
    bool ok = fz_table == 69100 && (da_table >= 191082 && da_table <= 191084);

    std::string measured;
    for (auto [name, cfg] : {std::pair{"FZ", fz_config(1)}, std::pair{"DA", da_config(1, TokenizationKind::overlap)}}) {
        cfg = validate_config(cfg);
        auto rels = load_inputs(cfg);
        auto graph = make_graph(rels, cfg);
        std::set<std::string> values;
        for (const auto& r : rels)
            for (const auto& row : r.rows)
                for (const auto& c : row)
                    if (!c.is_null() && !normalize_value(*c.text).empty())
                        values.insert(normalize_value(*c.text));
        std::size_t rows = 0;
        for (const auto& r : rels)
            rows += r.size();
        auto corpus = build_corpus(graph, assign_budgets(graph, cfg.walks), {}, cfg.walks);
        const auto expected = (values.size() + rows) * 1000 / cfg.walks.length;
        ok = ok && corpus.sentences.size() == expected;
        measured += std::string(" ") + name + " data: " + std::to_string(values.size()) + " values + " +
                    std::to_string(rows) + " rows -> " + std::to_string(corpus.sentences.size()) + " sentences;";
    }
    return {ok, "table counts give FZ " + std::to_string(fz_table) + ", DA " + std::to_string(da_table) + ";" +
                    measured};
}

// 2. FZ entity resolution, median F over seeds.
Outcome fz_entity_resolution() {
    std::vector<double> f, walk_embed;
    std::string per_seed;
    for (auto seed : seeds) {
        const auto& r = fz_run(seed);
        f.push_back(r.score->f_measure);
        walk_embed.push_back(r.times.walks + r.times.embedding);
        per_seed += " seed " + std::to_string(seed) + ": P " + fixed(r.score->precision) + " R " +
                    fixed(r.score->recall) + " F " + fixed(r.score->f_measure) + ";";
    }
    const double m = median(f);
    return {m >= 0.95, "median F " + fixed(m) + " (need >= 0.95);" + per_seed + " walks+embedding median " +
                           fixed(median(walk_embed), 1) + " s"};
}

// 3. FZ schema matching on the same embeddings.
Outcome fz_schema_matching() {
    bool ok = true;
    std::string per_seed;
    for (auto seed : seeds) {
        const auto& r = fz_run(seed);
        const auto& rels = r.relations;
        auto m = match_schemas(r.space, column_ids(rels[0]), column_ids(rels[1]), r.config.sm_passes);
        std::set<std::pair<std::string, std::string>> truth;
        for (std::size_t a = 0; a < rels[0].attributes.size(); ++a) {
            auto b = rels[1].attribute_index(rels[0].attributes[a]);
            truth.insert({cid_of(rels[0], a).serialize(), cid_of(rels[1], b).serialize()});
        }
        auto s = score_matches(m, truth);
        ok = ok && s.f_measure == 1.0;
        per_seed += " seed " + std::to_string(seed) + ": F " + fixed(s.f_measure) + " (" + std::to_string(s.tp) + "/" +
                    std::to_string(truth.size()) + ");";
    }
    return {ok, "F = 1.00 required;" + per_seed};
}

// 4. Precision falls and recall rises from n_top = 1 to n_top = 10.
Outcome da_ntop_tradeoff() {
    const auto& r = da_run(1, TokenizationKind::overlap);
    const auto& rels = r.relations;
    auto left = record_ids(rels[0]), right = record_ids(rels[1]);

    std::set<std::pair<std::string, std::string>> truth;
    std::string how;
    if (fs::exists(data_dir / "da" / "matches.csv")) {
        TruthFormat tf;
        tf.left_dataset = dataset_tag(rels[0]);
        tf.right_dataset = dataset_tag(rels[1]);
        truth = load_truth(data_dir / "da" / "matches.csv", tf);
        how = "full truth";
    } else {
        // Only a labeled sample ships with the data: score the records it
        // covers, treating its positive pairs as their only true partners.
        TruthFormat tf;
        tf.left_dataset = dataset_tag(rels[0]);
        tf.right_dataset = dataset_tag(rels[1]);
        tf.label_column = 2;
        truth = load_truth(data_dir / "da" / "labeled_sample.csv", tf);
        how = "labeled-sample proxy, " + std::to_string(truth.size()) + " positive pairs";
    }
    std::set<std::string> covered_left, covered_right;
    for (const auto& [a, b] : truth) {
        covered_left.insert(a);
        covered_right.insert(b);
    }

    std::map<std::size_t, ScoreReport> at;
    for (std::size_t n_top : {1, 10}) {
        auto m = match_entities(r.space, left, right, {n_top, r.config.entity.pool});
        MatchSet scored{MatchTask::entity, {}};
        for (const auto& x : m.matches)
            if (covered_left.contains(x.left) || covered_right.contains(x.right))
                scored.matches.push_back(x);
        at[n_top] = score_matches(scored, truth);
    }
    const auto &p1 = at[1], &p10 = at[10];
    bool ok = p1.precision > p10.precision && p10.recall > p1.recall;
    return {ok, how + "; n_top 1: P " + fixed(p1.precision) + " R " + fixed(p1.recall) + "; n_top 10: P " +
                    fixed(p10.precision) + " R " + fixed(p10.recall)};
}

// 5. Embedding quality on regenerated tests.
Outcome da_embedding_quality() {
    std::map<TestKind, std::vector<double>> acc;
    std::string per_seed;
    for (auto seed : seeds) {
        const auto& r = da_run(seed, PipelineConfig{}.tokenization);
        per_seed += " seed " + std::to_string(seed) + ":";
        for (auto kind : {TestKind::MA, TestKind::MR, TestKind::MC}) {
            double a = r.eq->kinds.contains(kind) ? r.eq->kinds.at(kind).fraction() : 0.0;
            acc[kind].push_back(a);
            per_seed += " " + to_string(kind) + " " + fixed(a);
        }
        per_seed += ";";
    }
    const double ma = median(acc[TestKind::MA]), mr = median(acc[TestKind::MR]), mc = median(acc[TestKind::MC]);
    bool ok = ma >= 0.70 && mr >= 0.85 && mc >= 0.55;
    return {ok, to_string(PipelineConfig{}.tokenization) + " tokenization; median MA " + fixed(ma) + " (>= .70), MR " + fixed(mr) + " (>= .85), MC " + fixed(mc) + " (>= .55);" +
                    per_seed};
}

// 6. Property suites.

Relation random_table(std::mt19937_64& rng, const std::string& name, std::size_t max_rows, std::size_t cols,
                      std::size_t alphabet, double null_rate) {
    Relation r;
    r.name = name;
    for (std::size_t a = 0; a < cols; ++a)
        r.attributes.push_back("c" + std::to_string(a));
    std::uniform_real_distribution<double> u;
    const auto rows = 1 + rng() % max_rows;
    for (std::size_t i = 0; i < rows; ++i) {
        std::vector<Cell> row;
        for (std::size_t a = 0; a < cols; ++a) {
            if (u(rng) < null_rate)
                row.push_back(Cell::null());
            else if (u(rng) < 0.2)
                row.push_back(Cell::value("v" + std::to_string(rng() % alphabet) + " w" + std::to_string(rng() % alphabet)));
            else
                row.push_back(Cell::value("v" + std::to_string(rng() % alphabet)));
        }
        r.rows.push_back(std::move(row));
    }
    return r;
}

std::string property_tripartite() {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Relation> rels = {random_table(rng, "r", 6, 1 + rng() % 4, 6, 0.25),
                                      random_table(rng, "s", 6, 1 + rng() % 4, 6, 0.25)};
        GraphOptions o{TokenizationStrategy{trial % 2 ? TokenizationKind::flatten : TokenizationKind::simple, {}}, {}};
        auto g = build_graph(rels, o);
        std::string why;
        if (!g.is_tripartite(&why))
            return "build trial " + std::to_string(trial) + ": " + why;
        MergeDictionary d;
        d.add("v0", "v1");
        d.add("idx__r__0", "idx__s__0");
        auto m = merge_nodes(g, d);
        if (!m.is_tripartite(&why))
            return "merge trial " + std::to_string(trial) + ": " + why;
    }
    return {};
}

std::string property_walks() {
    std::mt19937_64 rng(202);
    std::size_t checked = 0;
    for (int trial = 0; checked < 10000; ++trial) {
        std::vector<Relation> rels = {random_table(rng, "r", 8, 3, 10, 0.2), random_table(rng, "s", 8, 3, 10, 0.2)};
        GraphOptions o{TokenizationStrategy{TokenizationKind::flatten, {}}, {}};
        auto g = build_graph(rels, o);

        // adjacency recomputed from the cells
        std::set<std::pair<std::string, std::string>> edges;
        for (const auto& r : rels)
            for (std::size_t i = 0; i < r.rows.size(); ++i)
                for (std::size_t a = 0; a < r.attributes.size(); ++a) {
                    const auto& c = r.rows[i][a];
                    if (c.is_null())
                        continue;
                    std::istringstream words(*c.text);
                    std::string w;
                    while (words >> w) {
                        auto t = "tt__" + w;
                        for (const auto& other : {rid_of(r, i).serialize(), cid_of(r, a).serialize()}) {
                            edges.insert({t, other});
                            edges.insert({other, t});
                        }
                    }
                }

        WalkConfig cfg;
        cfg.length = 2 + rng() % 12;
        cfg.token_target = cfg.length * 500;
        cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        cfg.weighted = trial % 2 == 1;
        auto corpus = build_corpus(g, assign_budgets(g, cfg), {}, cfg);
        for (const auto& s : corpus.sentences) {
            if (s.size() != cfg.length)
                return "walk of length " + std::to_string(s.size());
            const auto& prefix = corpus.symbols[s[0]];
            if (prefix.rfind("idx__", 0) != 0 || !edges.contains({prefix, corpus.symbols[s[1]]}))
                return "bad prefix " + prefix;
            if (corpus.symbols[s[1]].rfind("tt__", 0) != 0)
                return "walk does not start on a token";
            for (std::size_t k = 1; k + 1 < s.size(); ++k)
                if (!edges.contains({corpus.symbols[s[k]], corpus.symbols[s[k + 1]]}))
                    return "non-edge " + corpus.symbols[s[k]] + " -> " + corpus.symbols[s[k + 1]];
            if (++checked == 10000)
                break;
        }
    }
    return {};
}

std::string property_procrustes() {
    std::mt19937_64 rng(303);
    MatrixXd A = oracle::random_matrix(rng, 12, 5);
    if ((solve_procrustes(A, A) - MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() > 1e-6)
        return "identity case";
    MatrixXd R(2, 2);
    R << 0, -1, 1, 0;
    MatrixXd A2 = oracle::random_matrix(rng, 8, 2);
    if ((solve_procrustes(A2, A2 * R.transpose()) - R).cwiseAbs().maxCoeff() > 1e-6)
        return "90 degree case";
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + trial % 9;
        MatrixXd X = oracle::random_matrix(rng, 2 * d + 3, d), Y = oracle::random_matrix(rng, 2 * d + 3, d);
        MatrixXd W = solve_procrustes(X, Y);
        if ((W.transpose() * W - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-6)
            return "W^T W != I at trial " + std::to_string(trial);
        MatrixXd U, V;
        oracle::jacobi_svd(Y.transpose() * X, U, V);
        const double res = oracle::residual(X, Y, W);
        if (res > oracle::residual(X, Y, U * V.transpose()) + 1e-9)
            return "worse than the reference SVD at trial " + std::to_string(trial);
        for (int k = 0; k < 100; ++k)
            if (res > oracle::residual(X, Y, oracle::random_orthogonal(rng, d)) + 1e-9)
                return "worse than a random rotation at trial " + std::to_string(trial);
    }
    return {};
}

std::string property_gradient() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> nd(0.0, 0.5);
    const std::size_t d = 9;
    const double h = 1e-6;
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> in(d);
        std::vector<std::vector<double>> outs(1 + rng() % 6, std::vector<double>(d));
        for (auto& x : in)
            x = nd(rng);
        for (auto& o : outs)
            for (auto& x : o)
                x = nd(rng);
        auto loss_at = [&](const std::vector<double>& i, const std::vector<std::vector<double>>& o) {
            std::vector<const double*> p;
            for (const auto& v : o)
                p.push_back(v.data());
            return sgns_loss<double>(i.data(), p, d);
        };
        auto after = outs;
        std::vector<double*> p;
        for (auto& v : after)
            p.push_back(v.data());
        std::vector<double> in_step(d, 0.0);
        sgns_step<double>(in.data(), p, d, 1.0, in_step.data(), nullptr);
        auto rel = [](double a, double n) {
            return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8});
        };
        for (std::size_t c = 0; c < d; ++c) {
            auto plus = in, minus = in;
            plus[c] += h;
            minus[c] -= h;
            worst = std::max(worst, rel(-in_step[c], (loss_at(plus, outs) - loss_at(minus, outs)) / (2 * h)));
        }
        for (std::size_t j = 0; j < outs.size(); ++j)
            for (std::size_t c = 0; c < d; ++c) {
                auto plus = outs, minus = outs;
                plus[j][c] += h;
                minus[j][c] -= h;
                worst = std::max(worst, rel(outs[j][c] - after[j][c], (loss_at(in, plus) - loss_at(in, minus)) / (2 * h)));
            }
    }
    if (worst >= 1e-5)
        return "relative gradient error " + std::to_string(worst);
    return {};
}

std::string property_mutual_nn() {
    std::mt19937_64 rng(505);
    for (int trial = 0; trial < 500; ++trial) {
        auto n1 = 1 + rng() % 10, n2 = 1 + rng() % 10;
        auto c1 = oracle::ids("cid__a__", n1), c2 = oracle::ids("cid__b__", n2);
        std::vector<std::string> words(c1);
        words.insert(words.end(), c2.begin(), c2.end());
        for (const auto& t : oracle::ids("tt__", rng() % 5))
            words.push_back(t);
        auto s = oracle::random_space(rng, words, 2 + rng() % 5);
        const int passes = 1 + static_cast<int>(rng() % 3);
        if (match_schemas(s, c1, c2, static_cast<std::size_t>(passes)).pairs() != oracle::schema_oracle(s, c1, c2, passes))
            return "schema matching differs at trial " + std::to_string(trial);
        const std::size_t n_top = 1 + rng() % 8;
        for (auto pool : {CandidatePool::vocab, CandidatePool::all, CandidatePool::cross})
            if (match_entities(s, c1, c2, {n_top, pool}).pairs() != oracle::entity_oracle(s, c1, c2, n_top, to_string(pool)))
                return "entity matching (" + to_string(pool) + ") differs at trial " + std::to_string(trial);
    }
    return {};
}

std::string property_doesnt_match() {
    std::mt19937_64 rng(606);
    std::normal_distribution<double> nd;
    const std::vector<std::string> labels = {"p", "q", "r", "s", "t"};
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<std::vector<double>> set(5, std::vector<double>(3));
        EmbeddingSpace space(3);
        for (std::size_t i = 0; i < 5; ++i) {
            std::vector<float> f(3);
            for (std::size_t c = 0; c < 3; ++c) {
                f[c] = static_cast<float>(nd(rng));
                set[i][c] = f[c];
            }
            space.add(labels[i], f);
        }
        const auto expected = labels[oracle::exhaustive_odd(set, labels)];
        if (doesnt_match(space, labels) != expected)
            return "odd one out differs at trial " + std::to_string(trial);
    }
    return {};
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string property_determinism() {
    auto dir = fs::temp_directory_path() / "relemb_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::mt19937_64 rng(707);
    auto a = random_table(rng, "left", 30, 4, 25, 0.1), b = random_table(rng, "right", 30, 4, 25, 0.1);
    for (auto [rel, file] : {std::pair{&a, "left.csv"}, std::pair{&b, "right.csv"}}) {
        std::ofstream os(dir / file);
        os << "c0,c1,c2,c3\n";
        for (const auto& row : rel->rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << (i ? "," : "") << (row[i].is_null() ? "" : *row[i].text);
            os << "\n";
        }
    }
    std::vector<std::string> files = {"corpus.txt", "embeddings.txt", "matches.csv"};
    std::vector<std::map<std::string, std::string>> runs;
    for (int run = 0; run < 2; ++run) {
        PipelineConfig cfg;
        cfg.inputs = {dir / "left.csv", dir / "right.csv"};
        cfg.task = PipelineTask::ER;
        cfg.training.dim = 32;
        cfg.deterministic = true;
        cfg.seed = 9;
        cfg.output_dir = dir / ("run" + std::to_string(run));
        run_pipeline(cfg);
        std::map<std::string, std::string> bytes;
        for (const auto& f : files)
            bytes[f] = read_bytes(*cfg.output_dir / f);
        runs.push_back(std::move(bytes));
    }
    for (const auto& f : files) {
        if (runs[0][f].empty())
            return f + " is empty";
        if (runs[0][f] != runs[1][f])
            return f + " differs between runs";
    }
    fs::remove_all(dir);
    return {};
}

Outcome property_suites() {
    const std::vector<std::pair<std::string, std::function<std::string()>>> suites = {
        {"tripartite", property_tripartite}, {"walks", property_walks},
        {"procrustes", property_procrustes}, {"gradient", property_gradient},
        {"mutual-nn", property_mutual_nn},   {"doesnt_match", property_doesnt_match},
        {"determinism", property_determinism},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [name, run] : suites) {
        auto t0 = std::chrono::steady_clock::now();
        std::string failure;
        try {
            failure = run();
        } catch (const std::exception& e) {
            failure = std::string("exception: ") + e.what();
        }
        const double secs = seconds_since(t0);
        if (secs >= 60)
            failure += (failure.empty() ? "" : ", ") + std::string("took ") + fixed(secs, 1) + " s";
        ok = ok && failure.empty();
        detail += " " + name + (failure.empty() ? " ok" : " FAILED (" + failure + ")") + " " + fixed(secs, 2) + "s;";
    }
    return {ok, detail};
}

// 7. The two-row Skolem example.
Outcome skolem_example() {
    auto row = [](std::vector<const char*> v) {
        std::vector<Cell> cells;
        for (auto* x : v)
            cells.push_back(x ? Cell::value(x) : Cell::null());
        return cells;
    };
    Relation r1{"R1", {"A1", "A2", "A3", "A4"}, {row({"a", nullptr, "c", nullptr})}, {}};
    Relation r2{"R2", {"A1", "A2", "A3", "A4"}, {row({"a", "b", "c2", nullptr})}, {}};
    auto res = apply_skolem(r1, r2, {parse_fd("A1->A2,A3,A4")});
    const auto& t1 = res.first.rows[0];
    const auto& t2 = res.second.rows[0];
    auto show = [](const std::vector<Cell>& t) {
        std::string s;
        for (const auto& c : t)
            s += (s.empty() ? "" : ", ") + (c.is_null() ? std::string("null") : *c.text);
        return "(" + s + ")";
    };
    bool ok = t1[0] == Cell::value("a") && t2[0] == Cell::value("a") && t1[1] == Cell::value("b") &&
              t2[1] == Cell::value("b") && t1[2].placeholder && t1[3].placeholder && t1[2] == t2[2] &&
              t1[3] == t2[3] && t1[2] != t1[3] && res.placeholders == 2;
    return {ok, "R1" + show(t1) + " R2" + show(t2)};
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"corpus size", corpus_size},
        {"FZ entity resolution", fz_entity_resolution},
        {"FZ schema matching", fz_schema_matching},
        {"DA n_top trade-off", da_ntop_tradeoff},
        {"DA embedding quality", da_embedding_quality},
        {"property suites", property_suites},
        {"skolem example", skolem_example},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i)
        selected.insert(std::atoi(argv[i]));

    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.contains(number))
            continue;
        Outcome o;
        auto t0 = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << number << " (" << criteria[i].first
                  << "): " << o.detail << " [" << fixed(seconds_since(t0), 1) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
