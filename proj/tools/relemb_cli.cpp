#include "relemb/pipeline.hpp"
#include "relemb/error.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

using namespace relemb;

namespace {

std::vector<std::string> ids_of(const EmbeddingSpace& space, NodeKind kind, const std::string& dataset) {
    std::vector<std::string> out;
    for (const auto& w : space.words()) {
        if (NodeId::kind_of(w) != kind)
            continue;
        if (NodeId::parse(w).dataset == dataset)
            out.push_back(w);
    }
    std::sort(out.begin(), out.end());
    if (out.empty())
        throw LookupError("no " + to_string(kind) + " ids of dataset '" + dataset + "' in the embeddings");
    return out;
}

void print_kv(const std::map<std::string, std::string>& kv) { write_kv(std::cout, kv); }

struct Inputs {
    std::vector<std::string> paths;
    std::vector<std::string> names;
    std::string key_column;
    std::string delimiter = ",";

    void attach(CLI::App* app) {
        app->add_option("-i,--input", paths, "Input relation files (one or two)")->required()->check(CLI::ExistingFile);
        app->add_option("--names", names, "Relation names (default: file stems)");
        app->add_option("--key-column", key_column, "Column holding record ids");
        app->add_option("--delimiter", delimiter, "Field delimiter");
    }

    PipelineConfig config() const {
        PipelineConfig cfg;
        for (const auto& p : paths)
            cfg.inputs.emplace_back(p);
        cfg.names = names;
        if (!key_column.empty())
            cfg.key_column = key_column;
        set_config_value(cfg, "delimiter", delimiter);
        return cfg;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Relational embeddings for schema matching, entity resolution and token matching"};
    app.require_subcommand(1);
    bool deterministic = false;
    std::string log_level = "info";
    app.add_flag("--deterministic", deterministic, "Force single-worker walks and training");
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

    // graph
    auto* graph_cmd = app.add_subcommand("graph", "Build the token/record/column graph");
    Inputs graph_in;
    graph_in.attach(graph_cmd);
    std::string graph_out, graph_tok = "simple", graph_merge;
    std::vector<std::string> graph_numeric;
    int graph_sig = 3;
    graph_cmd->add_option("-o,--out", graph_out, "Graph file")->required();
    graph_cmd->add_option("--tokenization", graph_tok, "simple, flatten or overlap");
    graph_cmd->add_option("--numeric", graph_numeric, "Numeric attributes");
    graph_cmd->add_option("--sig-figs", graph_sig, "Significant figures for numeric attributes");
    graph_cmd->add_option("--merge-dictionary", graph_merge, "Two-column file of nodes to merge");

    // walks
    auto* walks_cmd = app.add_subcommand("walks", "Generate the sentence corpus from a graph");
    std::string walks_graph, walks_out, walks_repl;
    WalkConfig wc;
    walks_cmd->add_option("-g,--graph", walks_graph, "Graph file")->required()->check(CLI::ExistingFile);
    walks_cmd->add_option("-o,--out", walks_out, "Corpus file")->required();
    walks_cmd->add_option("--walk-length", wc.length, "Sentence length");
    walks_cmd->add_option("--corpus-tokens", wc.token_target, "Corpus token target (0: derived from the data)");
    walks_cmd->add_option("--seed", wc.seed, "Random seed");
    walks_cmd->add_option("--workers", wc.workers, "Parallel workers");
    walks_cmd->add_flag("--shared-starts-only", wc.shared_starts_only, "Start only from tokens in both datasets");
    walks_cmd->add_flag("--weighted-walks", wc.weighted, "Follow edges proportionally to multiplicity");
    walks_cmd->add_flag("--cid-prefix", wc.cid_prefix, "Draw the prefix from records and columns");
    walks_cmd->add_option("--replacement-table", walks_repl, "Three-column file of node substitutions");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train embeddings on a corpus");
    std::string train_corpus, train_out, train_model = "skipgram";
    TrainingConfig tc;
    train_cmd->add_option("-c,--corpus", train_corpus, "Corpus file")->required()->check(CLI::ExistingFile);
    train_cmd->add_option("-o,--out", train_out, "Embedding file")->required();
    train_cmd->add_option("--model", train_model, "skipgram or cbow");
    train_cmd->add_option("--dim", tc.dim, "Dimensions");
    train_cmd->add_option("--window", tc.window, "Context window");
    train_cmd->add_option("--epochs", tc.epochs, "Epochs");
    train_cmd->add_option("--negatives", tc.negatives, "Negative samples");
    train_cmd->add_option("--alpha", tc.alpha, "Initial learning rate");
    train_cmd->add_option("--min-count", tc.min_count, "Minimum token frequency");
    train_cmd->add_option("--seed", tc.seed, "Random seed");
    train_cmd->add_option("--workers", tc.workers, "Parallel workers (non-deterministic above 1)");

    // align
    auto* align_cmd = app.add_subcommand("align", "Rotate one embedding space onto another and fuse them");
    std::string align_first, align_second, align_out, align_anchors = "shared-tokens", align_matches;
    bool align_norm = false;
    align_cmd->add_option("--first", align_first, "Space to rotate")->required()->check(CLI::ExistingFile);
    align_cmd->add_option("--second", align_second, "Reference space")->required()->check(CLI::ExistingFile);
    align_cmd->add_option("-o,--out", align_out, "Fused embedding file")->required();
    align_cmd->add_option("--anchors", align_anchors, "shared-tokens or matched-ids");
    align_cmd->add_option("--matches", align_matches, "Match file for matched-ids anchors");
    align_cmd->add_flag("--normalize", align_norm, "Unit-normalize vectors before solving");

    // match-schema / match-entity
    std::string m_emb, m_first, m_second, m_out;
    auto add_match_opts = [&](CLI::App* c) {
        c->add_option("-e,--embeddings", m_emb, "Embedding file")->required()->check(CLI::ExistingFile);
        c->add_option("--first", m_first, "Name of the first dataset")->required();
        c->add_option("--second", m_second, "Name of the second dataset")->required();
        c->add_option("-o,--out", m_out, "Match file (default: stdout)");
    };
    auto* sm_cmd = app.add_subcommand("match-schema", "Match columns across two datasets");
    add_match_opts(sm_cmd);
    std::size_t sm_passes = 2;
    sm_cmd->add_option("--passes", sm_passes, "Maximum passes");
    auto* er_cmd = app.add_subcommand("match-entity", "Match records across two datasets");
    add_match_opts(er_cmd);
    EntityOptions eo;
    std::string er_pool = "vocab";
    er_cmd->add_option("--n-top", eo.n_top, "Candidates kept per record");
    er_cmd->add_option("--pool", er_pool, "vocab, all or cross");

    // match-token
    auto* tm_cmd = app.add_subcommand("match-token", "Match tokens between two aligned attributes");
    Inputs tm_in;
    tm_in.attach(tm_cmd);
    std::string tm_emb, tm_attrs, tm_tok = "simple", tm_out;
    std::size_t tm_n = 10;
    tm_cmd->add_option("-e,--embeddings", tm_emb, "Embedding file")->required()->check(CLI::ExistingFile);
    tm_cmd->add_option("--attributes", tm_attrs, "attr_in_first,attr_in_second")->required();
    tm_cmd->add_option("--tokenization", tm_tok, "Tokenization used for the graph");
    tm_cmd->add_option("--neighbors", tm_n, "Neighbors scanned per token");
    tm_cmd->add_option("-o,--out", tm_out, "Match file (default: stdout)");

    // eval-eq
    auto* eq_cmd = app.add_subcommand("eval-eq", "Run MA/MR/MC odd-one-out tests");
    Inputs eq_in;
    eq_in.attach(eq_cmd);
    std::string eq_emb, eq_tok = "simple", eq_fixture, eq_save;
    std::vector<std::string> eq_concepts;
    std::size_t eq_count = 1000;
    std::uint64_t eq_seed = 1;
    eq_cmd->add_option("-e,--embeddings", eq_emb, "Embedding file")->required()->check(CLI::ExistingFile);
    eq_cmd->add_option("--tokenization", eq_tok, "Tokenization used for the graph");
    eq_cmd->add_option("--tests", eq_count, "Tests per kind");
    eq_cmd->add_option("--concept", eq_concepts, "relation:one->many pairs for MC");
    eq_cmd->add_option("--fixture", eq_fixture, "Read tests from this file instead of generating them");
    eq_cmd->add_option("--save-tests", eq_save, "Write the tests used");
    eq_cmd->add_option("--seed", eq_seed, "Random seed for test generation");

    // score
    auto* score_cmd = app.add_subcommand("score", "Precision, recall and F-measure of a match file");
    std::string sc_matches, sc_truth, sc_first, sc_second, sc_kind = "rid";
    bool sc_no_header = false;
    score_cmd->add_option("-m,--matches", sc_matches, "Match file")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("-t,--truth", sc_truth, "Two-column truth file")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--first", sc_first, "Name of the first dataset")->required();
    score_cmd->add_option("--second", sc_second, "Name of the second dataset")->required();
    score_cmd->add_option("--kind", sc_kind, "rid, cid or token");
    score_cmd->add_flag("--no-header", sc_no_header, "Truth file has no header row");

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the full pipeline from a config file");
    std::string run_config;
    run_cmd->add_option("-c,--config", run_config, "Config file (key = value)")->check(CLI::ExistingFile);
    std::map<std::string, std::string> run_overrides;
    for (const auto& key : config_keys()) {
        std::string flag = "--" + key;
        std::replace(flag.begin() + 2, flag.end(), '_', '-');
        run_cmd->add_option_function<std::string>(
            flag, [&run_overrides, key](const std::string& v) { run_overrides[key] = v; }, "Config key " + key);
    }

    CLI11_PARSE(app, argc, argv);
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_pattern("%^[%l]%$ %v");

    const std::string stage_name = app.get_subcommands().front()->get_name();
    try {
        if (*graph_cmd) {
            auto cfg = graph_in.config();
            cfg.tokenization = parse_tokenization(graph_tok);
            cfg.numeric_attributes = {graph_numeric.begin(), graph_numeric.end()};
            cfg.sig_figs = graph_sig;
            if (!graph_merge.empty())
                cfg.merge_dictionary = graph_merge;
            auto rels = load_inputs(cfg);
            auto g = make_graph(rels, cfg);
            std::ofstream os(graph_out);
            g.dump(os);
            write_stats(std::cout, graph_stats(g));
        } else if (*walks_cmd) {
            std::ifstream is(walks_graph);
            auto g = TripartiteGraph::load(is);
            if (deterministic)
                wc.workers = 1;
            ReplacementTable table;
            if (!walks_repl.empty())
                table = ReplacementTable::load(walks_repl);
            auto corpus = build_corpus(g, assign_budgets(g, wc), table, wc);
            write_corpus(walks_out, corpus);
            std::cout << "sentences=" << corpus.sentences.size() << "\ntokens=" << corpus.token_count() << '\n';
        } else if (*train_cmd) {
            tc.model = parse_model(train_model);
            if (deterministic)
                tc.workers = 1;
            auto res = train_embeddings(read_corpus(std::filesystem::path(train_corpus)), tc);
            save_embeddings(std::filesystem::path(train_out), res.space);
            std::cout << "vocabulary=" << res.space.size() << "\ndim=" << res.space.dim() << '\n';
        } else if (*align_cmd) {
            auto e1 = load_embeddings(std::filesystem::path(align_first));
            auto e2 = load_embeddings(std::filesystem::path(align_second));
            std::optional<MatchSet> prior;
            auto mode = parse_anchor_mode(align_anchors);
            if (!align_matches.empty())
                prior = read_matches(std::filesystem::path(align_matches));
            auto anchors = select_anchors(e1, e2, mode, prior ? &*prior : nullptr);
            auto res = align_embeddings(e1, e2, anchors, {align_norm});
            save_embeddings(std::filesystem::path(align_out), res.fused);
            std::cout << "anchors=" << anchors.size() << "\nresidual_before=" << res.anchor_residual_before
                      << "\nresidual_after=" << res.anchor_residual_after << '\n';
        } else if (*sm_cmd || *er_cmd) {
            auto space = load_embeddings(std::filesystem::path(m_emb));
            const bool schema = sm_cmd->parsed();
            auto kind = schema ? NodeKind::cid : NodeKind::rid;
            auto a = ids_of(space, kind, simple_token(m_first));
            auto b = ids_of(space, kind, simple_token(m_second));
            MatchSet m;
            if (schema) {
                m = match_schemas(space, a, b, sm_passes);
            } else {
                eo.pool = parse_candidate_pool(er_pool);
                m = match_entities(space, a, b, eo);
            }
            if (m_out.empty())
                write_matches(std::cout, m);
            else
                write_matches(std::filesystem::path(m_out), m);
        } else if (*tm_cmd) {
            auto cfg = tm_in.config();
            auto rels = load_inputs(cfg);
            if (rels.size() != 2)
                throw ConfigError("match-token needs two inputs");
            auto strategy = make_strategy(rels, parse_tokenization(tm_tok));
            auto comma = tm_attrs.find(',');
            if (comma == std::string::npos)
                throw ConfigError("--attributes expects attr_in_first,attr_in_second");
            auto collect = [&](const Relation& r, const std::string& attr) {
                std::vector<std::string> out;
                auto idx = r.attribute_index(attr);
                std::set<std::string> seen;
                for (const auto& row : r.rows)
                    for (const auto& t : tokenize_cell(row[idx], strategy))
                        if (seen.insert(t).second)
                            out.push_back(NodeId::token(t).serialize());
                return out;
            };
            auto dom_a = collect(rels[0], tm_attrs.substr(0, comma));
            auto dom_b = collect(rels[1], tm_attrs.substr(comma + 1));
            auto space = load_embeddings(std::filesystem::path(tm_emb));
            auto m = match_tokens(space, dom_a, {dom_b.begin(), dom_b.end()}, tm_n);
            if (tm_out.empty())
                write_matches(std::cout, m);
            else
                write_matches(std::filesystem::path(tm_out), m);
        } else if (*eq_cmd) {
            auto cfg = eq_in.config();
            auto rels = load_inputs(cfg);
            auto kind = parse_tokenization(eq_tok);
            auto strategy = kind == TokenizationKind::overlap ? make_strategy(rels, kind) : TokenizationStrategy{kind, {}};
            std::vector<OddOneOutTest> tests;
            if (!eq_fixture.empty()) {
                tests = read_tests(std::filesystem::path(eq_fixture));
            } else {
                TestGenOptions o{eq_count, eq_seed, {}};
                for (const auto& c : eq_concepts)
                    o.concepts.push_back(parse_concept_pair(c));
                for (auto k : {TestKind::MA, TestKind::MR, TestKind::MC}) {
                    if (k == TestKind::MC && o.concepts.empty())
                        continue;
                    auto t = gen_tests(rels, k, o);
                    tests.insert(tests.end(), t.begin(), t.end());
                }
            }
            if (!eq_save.empty())
                write_tests(std::filesystem::path(eq_save), tests);
            auto space = load_embeddings(std::filesystem::path(eq_emb));
            print_kv(run_eq_suite(space, tests, strategy).to_kv());
        } else if (*score_cmd) {
            TruthFormat tf;
            tf.header = !sc_no_header;
            tf.left_dataset = simple_token(sc_first);
            tf.right_dataset = simple_token(sc_second);
            tf.kind = sc_kind == "cid" ? NodeKind::cid : sc_kind == "token" ? NodeKind::token : NodeKind::rid;
            auto truth = load_truth(sc_truth, tf);
            auto m = read_matches(std::filesystem::path(sc_matches));
            print_kv(score_matches(m, truth).to_kv());
        } else if (*run_cmd) {
            PipelineConfig cfg = run_config.empty() ? PipelineConfig{} : load_config(run_config);
            for (const auto& [k, v] : run_overrides)
                set_config_value(cfg, k, v);
            if (deterministic)
                cfg.deterministic = true;
            auto res = run_pipeline(cfg);
            std::cout << "sentences=" << res.sentences << '\n';
            write_timing(std::cout, res.times);
            if (res.score)
                print_kv(res.score->to_kv());
            if (res.eq)
                print_kv(res.eq->to_kv());
            if (res.matches && !res.score)
                std::cout << "matches=" << res.matches->matches.size() << '\n';
        }
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << stage_name << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << stage_name << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
