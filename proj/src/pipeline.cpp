#include "relemb/pipeline.hpp"

#include "relemb/error.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace relemb {

std::string to_string(PipelineTask t) {
    switch (t) {
    case PipelineTask::EQ: return "EQ";
    case PipelineTask::SM: return "SM";
    case PipelineTask::ER: return "ER";
    case PipelineTask::TM: return "TM";
    }
    return "?";
}

std::string to_string(TrainingMode m) { return m == TrainingMode::pooled ? "pooled" : "aligned"; }

namespace {

std::string trim_ws(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    if (trim_ws(s).empty())
        return out;
    std::size_t start = 0;
    while (true) {
        auto p = s.find(sep, start);
        out.push_back(trim_ws(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
        if (p == std::string_view::npos)
            break;
        start = p + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& v, char sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            out.push_back(sep);
        out += v[i];
    }
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError(key + ": '" + value + "' is not a valid number");
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on")
        return true;
    if (value == "false" || value == "0" || value == "no" || value == "off")
        return false;
    throw ConfigError(key + ": '" + value + "' is not a boolean");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const PipelineConfig&)>;

struct Key {
    Setter set;
    Getter get;
};

const std::map<std::string, Key>& keys() {
    static const std::map<std::string, Key> table = {
        {"inputs",
         {[](auto& c, auto&, auto& v) {
              c.inputs.clear();
              for (auto& p : split(v, ','))
                  c.inputs.emplace_back(p);
          },
          [](auto& c) {
              std::vector<std::string> v;
              for (auto& p : c.inputs)
                  v.push_back(p.string());
              return join(v, ',');
          }}},
        {"names", {[](auto& c, auto&, auto& v) { c.names = split(v, ','); }, [](auto& c) { return join(c.names, ','); }}},
        {"key_column",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.key_column.reset();
              else
                  c.key_column = v;
          },
          [](auto& c) { return c.key_column.value_or(""); }}},
        {"delimiter",
         {[](auto& c, auto& k, auto& v) {
              std::string d = v == "\\t" || v == "tab" ? "\t" : v;
              if (d.size() != 1)
                  throw ConfigError(k + ": delimiter must be a single character");
              c.delimiter = d[0];
          },
          [](auto& c) { return c.delimiter == '\t' ? std::string("tab") : std::string(1, c.delimiter); }}},
        {"null_markers",
         {[](auto& c, auto&, auto& v) {
              c.null_markers = split(v, '|');
              if (std::find(c.null_markers.begin(), c.null_markers.end(), "") == c.null_markers.end())
                  c.null_markers.push_back("");
          },
          [](auto& c) { return join(c.null_markers, '|'); }}},
        {"task",
         {[](auto& c, auto& k, auto& v) {
              if (v == "EQ" || v == "eq")
                  c.task = PipelineTask::EQ;
              else if (v == "SM" || v == "sm")
                  c.task = PipelineTask::SM;
              else if (v == "ER" || v == "er")
                  c.task = PipelineTask::ER;
              else if (v == "TM" || v == "tm")
                  c.task = PipelineTask::TM;
              else
                  throw ConfigError(k + ": unknown task '" + v + "' (EQ, SM, ER, TM)");
          },
          [](auto& c) { return to_string(c.task); }}},
        {"tokenization", {[](auto& c, auto&, auto& v) { c.tokenization = parse_tokenization(v); },
                          [](auto& c) { return to_string(c.tokenization); }}},
        {"numeric_attributes",
         {[](auto& c, auto&, auto& v) {
              auto parts = split(v, ',');
              c.numeric_attributes = {parts.begin(), parts.end()};
          },
          [](auto& c) { return join({c.numeric_attributes.begin(), c.numeric_attributes.end()}, ','); }}},
        {"sig_figs", {[](auto& c, auto& k, auto& v) { c.sig_figs = parse_number<int>(k, v); },
                      [](auto& c) { return std::to_string(c.sig_figs); }}},
        {"fds", {[](auto& c, auto&, auto& v) { c.fds = split(v, ';'); }, [](auto& c) { return join(c.fds, ';'); }}},
        {"merge_dictionary",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.merge_dictionary.reset();
              else
                  c.merge_dictionary = v;
          },
          [](auto& c) { return c.merge_dictionary ? c.merge_dictionary->string() : std::string(); }}},
        {"replacement_table",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.replacement_table.reset();
              else
                  c.replacement_table = v;
          },
          [](auto& c) { return c.replacement_table ? c.replacement_table->string() : std::string(); }}},
        {"walk_length", {[](auto& c, auto& k, auto& v) { c.walks.length = parse_number<std::size_t>(k, v); },
                         [](auto& c) { return std::to_string(c.walks.length); }}},
        {"corpus_tokens", {[](auto& c, auto& k, auto& v) { c.walks.token_target = parse_number<std::uint64_t>(k, v); },
                           [](auto& c) { return std::to_string(c.walks.token_target); }}},
        {"tokens_per_item",
         {[](auto& c, auto& k, auto& v) { c.walks.tokens_per_item = parse_number<std::uint64_t>(k, v); },
          [](auto& c) { return std::to_string(c.walks.tokens_per_item); }}},
        {"shared_starts_only",
         {[](auto& c, auto& k, auto& v) { c.walks.shared_starts_only = parse_bool(k, v); },
          [](auto& c) { return bool_str(c.walks.shared_starts_only); }}},
        {"weighted_walks", {[](auto& c, auto& k, auto& v) { c.walks.weighted = parse_bool(k, v); },
                            [](auto& c) { return bool_str(c.walks.weighted); }}},
        {"cid_prefix", {[](auto& c, auto& k, auto& v) { c.walks.cid_prefix = parse_bool(k, v); },
                        [](auto& c) { return bool_str(c.walks.cid_prefix); }}},
        {"model", {[](auto& c, auto&, auto& v) { c.training.model = parse_model(v); },
                   [](auto& c) { return to_string(c.training.model); }}},
        {"dim", {[](auto& c, auto& k, auto& v) { c.training.dim = parse_number<std::size_t>(k, v); },
                 [](auto& c) { return std::to_string(c.training.dim); }}},
        {"window", {[](auto& c, auto& k, auto& v) { c.training.window = parse_number<std::size_t>(k, v); },
                    [](auto& c) { return std::to_string(c.training.window); }}},
        {"epochs", {[](auto& c, auto& k, auto& v) { c.training.epochs = parse_number<std::size_t>(k, v); },
                    [](auto& c) { return std::to_string(c.training.epochs); }}},
        {"negatives", {[](auto& c, auto& k, auto& v) { c.training.negatives = parse_number<std::size_t>(k, v); },
                       [](auto& c) { return std::to_string(c.training.negatives); }}},
        {"alpha", {[](auto& c, auto& k, auto& v) { c.training.alpha = parse_number<double>(k, v); },
                   [](auto& c) { return num(c.training.alpha); }}},
        {"min_alpha", {[](auto& c, auto& k, auto& v) { c.training.min_alpha = parse_number<double>(k, v); },
                       [](auto& c) { return num(c.training.min_alpha); }}},
        {"min_count", {[](auto& c, auto& k, auto& v) { c.training.min_count = parse_number<std::size_t>(k, v); },
                       [](auto& c) { return std::to_string(c.training.min_count); }}},
        {"dynamic_window", {[](auto& c, auto& k, auto& v) { c.training.dynamic_window = parse_bool(k, v); },
                            [](auto& c) { return bool_str(c.training.dynamic_window); }}},
        {"workers",
         {[](auto& c, auto& k, auto& v) {
              auto n = parse_number<unsigned>(k, v);
              c.walks.workers = n;
              c.training.workers = n;
          },
          [](auto& c) { return std::to_string(c.training.workers); }}},
        {"training_mode",
         {[](auto& c, auto& k, auto& v) {
              if (v == "pooled")
                  c.mode = TrainingMode::pooled;
              else if (v == "aligned")
                  c.mode = TrainingMode::aligned;
              else
                  throw ConfigError(k + ": expected pooled or aligned");
          },
          [](auto& c) { return to_string(c.mode); }}},
        {"anchors", {[](auto& c, auto&, auto& v) { c.anchors = parse_anchor_mode(v); },
                     [](auto& c) {
                         return std::string(c.anchors == AnchorMode::shared_tokens ? "shared-tokens" : "matched-ids");
                     }}},
        {"anchor_matches",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.anchor_matches.reset();
              else
                  c.anchor_matches = v;
          },
          [](auto& c) { return c.anchor_matches ? c.anchor_matches->string() : std::string(); }}},
        {"normalize_before_align",
         {[](auto& c, auto& k, auto& v) { c.normalize_before_align = parse_bool(k, v); },
          [](auto& c) { return bool_str(c.normalize_before_align); }}},
        {"n_top", {[](auto& c, auto& k, auto& v) { c.entity.n_top = parse_number<std::size_t>(k, v); },
                   [](auto& c) { return std::to_string(c.entity.n_top); }}},
        {"er_pool", {[](auto& c, auto&, auto& v) { c.entity.pool = parse_candidate_pool(v); },
                     [](auto& c) { return to_string(c.entity.pool); }}},
        {"sm_passes", {[](auto& c, auto& k, auto& v) { c.sm_passes = parse_number<std::size_t>(k, v); },
                       [](auto& c) { return std::to_string(c.sm_passes); }}},
        {"tm_attributes",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.tm_attributes.reset();
              else
                  c.tm_attributes = v;
          },
          [](auto& c) { return c.tm_attributes.value_or(""); }}},
        {"tm_neighbors", {[](auto& c, auto& k, auto& v) { c.tm_neighbors = parse_number<std::size_t>(k, v); },
                          [](auto& c) { return std::to_string(c.tm_neighbors); }}},
        {"truth",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.truth.reset();
              else
                  c.truth = v;
          },
          [](auto& c) { return c.truth ? c.truth->string() : std::string(); }}},
        {"truth_header", {[](auto& c, auto& k, auto& v) { c.truth_header = parse_bool(k, v); },
                          [](auto& c) { return bool_str(c.truth_header); }}},
        {"eq_tests", {[](auto& c, auto& k, auto& v) { c.eq_tests = parse_number<std::size_t>(k, v); },
                      [](auto& c) { return std::to_string(c.eq_tests); }}},
        {"eq_concepts", {[](auto& c, auto&, auto& v) { c.eq_concepts = split(v, ';'); },
                         [](auto& c) { return join(c.eq_concepts, ';'); }}},
        {"eq_fixture",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.eq_fixture.reset();
              else
                  c.eq_fixture = v;
          },
          [](auto& c) { return c.eq_fixture ? c.eq_fixture->string() : std::string(); }}},
        {"seed", {[](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); },
                  [](auto& c) { return std::to_string(c.seed); }}},
        {"deterministic", {[](auto& c, auto& k, auto& v) { c.deterministic = parse_bool(k, v); },
                           [](auto& c) { return bool_str(c.deterministic); }}},
        {"output_dir",
         {[](auto& c, auto&, auto& v) {
              if (v.empty())
                  c.output_dir.reset();
              else
                  c.output_dir = v;
          },
          [](auto& c) { return c.output_dir ? c.output_dir->string() : std::string(); }}},
        {"write_corpus", {[](auto& c, auto& k, auto& v) { c.write_corpus = parse_bool(k, v); },
                          [](auto& c) { return bool_str(c.write_corpus); }}},
    };
    return table;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

} // namespace

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    auto it = keys().find(key);
    if (it == keys().end())
        throw ConfigError("unknown configuration key '" + key + "'");
    it->second.set(cfg, key, trim_ws(value));
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& [k, v] : keys())
        out.push_back(k);
    return out;
}

PipelineConfig parse_config(std::istream& in) {
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos)
            line.resize(hash);
        if (trim_ws(line).empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        try {
            set_config_value(cfg, trim_ws(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    return parse_config(in);
}

std::map<std::string, std::string> config_to_kv(const PipelineConfig& cfg) {
    std::map<std::string, std::string> kv;
    for (const auto& [k, v] : keys())
        kv[k] = v.get(cfg);
    return kv;
}

std::vector<std::string> config_errors(const PipelineConfig& cfg) {
    std::vector<std::string> errors;
    auto err = [&](const std::string& key, const std::string& msg) { errors.push_back(key + ": " + msg); };

    if (cfg.inputs.empty())
        err("inputs", "at least one input relation is required");
    if (cfg.inputs.size() > 2)
        err("inputs", "at most two input relations are supported");
    for (const auto& p : cfg.inputs)
        if (!std::filesystem::is_regular_file(p))
            err("inputs", "'" + p.string() + "' does not exist");
    if (!cfg.names.empty() && cfg.names.size() != cfg.inputs.size())
        err("names", "one name per input is required");
    {
        std::vector<std::string> tags;
        for (std::size_t i = 0; i < cfg.inputs.size(); ++i)
            tags.push_back(simple_token(i < cfg.names.size() ? cfg.names[i] : cfg.inputs[i].stem().string()));
        if (tags.size() == 2 && tags[0] == tags[1])
            err("names", "the two relations need distinct names");
    }
    if (cfg.walks.length < 2)
        err("walk_length", "must be at least 2 (a record prefix plus the start token)");
    if (cfg.training.dim == 0)
        err("dim", "must be positive");
    if (cfg.training.window == 0)
        err("window", "must be at least 1");
    if (cfg.training.epochs == 0)
        err("epochs", "must be positive");
    if (!(cfg.training.alpha > 0) || cfg.training.min_alpha < 0 || cfg.training.min_alpha > cfg.training.alpha)
        err("alpha", "need alpha > 0 and 0 <= min_alpha <= alpha");
    if (cfg.sig_figs < 1)
        err("sig_figs", "must be positive");
    if (cfg.entity.n_top == 0)
        err("n_top", "must be at least 1");
    if (cfg.walks.tokens_per_item == 0 && cfg.walks.token_target == 0)
        err("tokens_per_item", "must be positive when corpus_tokens is not set");
    for (const auto& fd : cfg.fds) {
        try {
            parse_fd(fd);
        } catch (const Error& e) {
            err("fds", e.what());
        }
    }
    for (const auto& c : cfg.eq_concepts) {
        try {
            parse_concept_pair(c);
        } catch (const Error& e) {
            err("eq_concepts", e.what());
        }
    }
    for (const auto& [key, path] : {std::pair{"merge_dictionary", cfg.merge_dictionary},
                                    std::pair{"replacement_table", cfg.replacement_table},
                                    std::pair{"truth", cfg.truth}, std::pair{"eq_fixture", cfg.eq_fixture},
                                    std::pair{"anchor_matches", cfg.anchor_matches}})
        if (path && !std::filesystem::is_regular_file(*path))
            err(key, "'" + path->string() + "' does not exist");

    const bool two = cfg.inputs.size() == 2;
    if (cfg.mode == TrainingMode::aligned && !two)
        err("training_mode", "aligned training needs two inputs");
    if (cfg.mode == TrainingMode::aligned && cfg.anchors == AnchorMode::matched_ids && !cfg.anchor_matches)
        err("anchor_matches", "matched-ids anchors need a match file");
    if ((cfg.task == PipelineTask::SM || cfg.task == PipelineTask::ER || cfg.task == PipelineTask::TM) && !two)
        err("task", to_string(cfg.task) + " needs two inputs");
    if (cfg.tokenization == TokenizationKind::overlap && !two)
        err("tokenization", "overlap tokenization needs two inputs");
    if (cfg.task == PipelineTask::TM) {
        if (!cfg.tm_attributes)
            err("tm_attributes", "TM needs the aligned attribute pair 'attr_in_first,attr_in_second'");
        else if (split(*cfg.tm_attributes, ',').size() != 2)
            err("tm_attributes", "expected exactly two attribute names");
    }
    if (cfg.task == PipelineTask::EQ && cfg.eq_tests == 0 && !cfg.eq_fixture)
        err("eq_tests", "must be positive");
    return errors;
}

PipelineConfig validate_config(PipelineConfig cfg) {
    auto errors = config_errors(cfg);
    if (!errors.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& e : errors)
            msg += "\n  " + e;
        throw ConfigError(msg);
    }
    if (cfg.deterministic) {
        cfg.walks.workers = 1;
        cfg.training.workers = 1;
    }
    cfg.walks.seed = cfg.seed;
    cfg.training.seed = cfg.seed;
    return cfg;
}

std::vector<Relation> load_inputs(const PipelineConfig& cfg) {
    std::vector<Relation> rels;
    for (std::size_t i = 0; i < cfg.inputs.size(); ++i) {
        DelimitedFormat fmt;
        fmt.delimiter = cfg.delimiter;
        fmt.null_markers = cfg.null_markers;
        fmt.key_column = cfg.key_column;
        if (i < cfg.names.size())
            fmt.name = cfg.names[i];
        rels.push_back(load_relation(cfg.inputs[i], fmt));
    }
    if (!cfg.numeric_attributes.empty()) {
        NumericConfig nc{cfg.numeric_attributes, cfg.sig_figs};
        for (auto& r : rels)
            r = apply_numeric(std::move(r), nc);
    }
    if (!cfg.fds.empty()) {
        std::vector<FunctionalDependency> fds;
        for (const auto& f : cfg.fds)
            fds.push_back(parse_fd(f));
        Relation second;
        if (rels.size() == 2) {
            second = rels[1];
        } else {
            second.name = rels[0].name + "-empty";
            second.attributes = rels[0].attributes;
        }
        auto res = apply_skolem(rels[0], second, fds);
        rels[0] = std::move(res.first);
        if (rels.size() == 2)
            rels[1] = std::move(res.second);
        spdlog::info("skolem: {} placeholders", res.placeholders);
    }
    return rels;
}

TokenizationStrategy make_strategy(const std::vector<Relation>& relations, TokenizationKind kind) {
    TokenizationStrategy s{kind, {}};
    if (kind == TokenizationKind::overlap) {
        if (relations.size() != 2)
            throw ConfigError("overlap tokenization needs two relations");
        s.overlap_set = compute_overlap(relations[0], relations[1]).shared;
    }
    return s;
}

TripartiteGraph make_graph(const std::vector<Relation>& relations, const PipelineConfig& cfg) {
    GraphOptions go{make_strategy(relations, cfg.tokenization), cfg.numeric_attributes};
    auto g = build_graph(relations, go);
    if (cfg.merge_dictionary)
        g = merge_nodes(g, MergeDictionary::load(*cfg.merge_dictionary, cfg.delimiter));
    return g;
}

EmbeddingSpace embed(const TripartiteGraph& graph, const PipelineConfig& cfg, WalkCorpus* corpus_out) {
    auto budget = assign_budgets(graph, cfg.walks);
    ReplacementTable table;
    if (cfg.replacement_table)
        table = ReplacementTable::load(*cfg.replacement_table, cfg.delimiter);
    auto corpus = build_corpus(graph, budget, table, cfg.walks);
    auto space = train_embeddings(corpus, cfg.training).space;
    if (corpus_out)
        *corpus_out = std::move(corpus);
    return space;
}

std::vector<std::string> record_ids(const Relation& r) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        out.push_back(rid_of(r, i).serialize());
    return out;
}

std::vector<std::string> column_ids(const Relation& r) {
    std::vector<std::string> out;
    for (std::size_t a = 0; a < r.attributes.size(); ++a)
        out.push_back(cid_of(r, a).serialize());
    return out;
}

void write_timing(std::ostream& out, const StageTimes& t) {
    out << "graph_seconds=" << t.graph << '\n'
        << "walks_seconds=" << t.walks << '\n'
        << "embedding_seconds=" << t.embedding << '\n'
        << "walks_plus_embedding_seconds=" << t.walks + t.embedding << '\n'
        << "tasks_seconds=" << t.tasks << '\n';
}

namespace {

std::vector<std::string> present(const EmbeddingSpace& space, const std::vector<std::string>& ids,
                                 const char* what) {
    std::vector<std::string> out;
    for (const auto& id : ids)
        if (space.contains(id))
            out.push_back(id);
    if (out.size() != ids.size())
        spdlog::warn("{} of {} {} never appeared in a walk and are left out", ids.size() - out.size(), ids.size(),
                     what);
    return out;
}

std::vector<std::string> attribute_tokens(const Relation& r, const std::string& attr,
                                          const TokenizationStrategy& strategy) {
    auto a = r.attribute_index(attr);
    std::set<std::string> seen;
    std::vector<std::string> out;
    for (const auto& row : r.rows)
        for (auto& t : tokenize_cell(row[a], strategy))
            if (auto id = NodeId::token(t).serialize(); seen.insert(id).second)
                out.push_back(id);
    return out;
}

} // namespace

PipelineResult run_pipeline(const PipelineConfig& raw) {
    PipelineResult res;
    res.config = stage("config", [&] { return validate_config(raw); });
    const auto& cfg = res.config;
    const auto out_dir = cfg.output_dir;
    auto artifact = [&](const std::string& name) {
        auto p = *out_dir / name;
        res.artifacts[name] = p;
        return p;
    };
    if (out_dir) {
        stage("output", [&] {
            std::filesystem::create_directories(*out_dir);
            std::ofstream os(artifact("config.txt"));
            write_kv(os, config_to_kv(cfg));
            return 0;
        });
    }

    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    res.relations = stage("ingest", [&] { return load_inputs(cfg); });

    if (cfg.mode == TrainingMode::pooled) {
        auto graph = stage("graph", [&] { return make_graph(res.relations, cfg); });
        res.graph_stats = graph_stats(graph);
        res.times.graph = seconds_since(t0);
        spdlog::info("graph: {} tokens, {} records, {} columns, {} edges", res.graph_stats.tokens,
                     res.graph_stats.rids, res.graph_stats.cids, res.graph_stats.edges);
        if (out_dir)
            stage("graph", [&] {
                std::ofstream os(artifact("graph_stats.txt"));
                write_stats(os, res.graph_stats);
                std::ofstream gs(artifact("graph.txt"));
                graph.dump(gs);
                return 0;
            });

        auto t1 = clock::now();
        WalkCorpus corpus = stage("walks", [&] {
            auto budget = assign_budgets(graph, cfg.walks);
            ReplacementTable table;
            if (cfg.replacement_table)
                table = ReplacementTable::load(*cfg.replacement_table, cfg.delimiter);
            return build_corpus(graph, budget, table, cfg.walks);
        });
        res.sentences = corpus.sentences.size();
        if (out_dir && cfg.write_corpus)
            stage("walks", [&] {
                write_corpus(artifact("corpus.txt"), corpus);
                return 0;
            });
        res.times.walks = seconds_since(t1);
        spdlog::info("walks: {} sentences in {:.1f}s", res.sentences, res.times.walks);

        auto t2 = clock::now();
        res.space = stage("embedding", [&] { return train_embeddings(corpus, cfg.training).space; });
        res.times.embedding = seconds_since(t2);
        spdlog::info("embedding: {} vectors in {:.1f}s", res.space.size(), res.times.embedding);
    } else {
        // One graph, corpus and space per relation, then rotate the first
        // onto the second.
        std::vector<EmbeddingSpace> spaces;
        for (std::size_t i = 0; i < res.relations.size(); ++i) {
            auto tg = clock::now();
            std::vector<Relation> one{res.relations[i]};
            auto graph = stage("graph", [&] {
                GraphOptions go{TokenizationStrategy{cfg.tokenization, {}}, cfg.numeric_attributes};
                if (cfg.tokenization == TokenizationKind::overlap)
                    go.strategy = make_strategy(res.relations, cfg.tokenization);
                return build_graph(one, go);
            });
            res.times.graph += seconds_since(tg);
            auto st = graph_stats(graph);
            res.graph_stats.tokens += st.tokens;
            res.graph_stats.rids += st.rids;
            res.graph_stats.cids += st.cids;
            res.graph_stats.edges += st.edges;
            auto tw = clock::now();
            WalkCorpus corpus = stage("walks", [&] {
                auto budget = assign_budgets(graph, cfg.walks);
                return build_corpus(graph, budget, ReplacementTable{}, cfg.walks);
            });
            res.sentences += corpus.sentences.size();
            if (out_dir && cfg.write_corpus)
                stage("walks", [&] {
                    write_corpus(artifact("corpus_" + std::to_string(i + 1) + ".txt"), corpus);
                    return 0;
                });
            res.times.walks += seconds_since(tw);
            auto te = clock::now();
            spaces.push_back(stage("embedding", [&] { return train_embeddings(corpus, cfg.training).space; }));
            res.times.embedding += seconds_since(te);
            if (out_dir)
                stage("embedding", [&] {
                    save_embeddings(artifact("embeddings_" + std::to_string(i + 1) + ".txt"), spaces.back());
                    return 0;
                });
        }
        auto ta = clock::now();
        res.space = stage("align", [&] {
            std::optional<MatchSet> prior;
            if (cfg.anchors == AnchorMode::matched_ids)
                prior = read_matches(*cfg.anchor_matches);
            auto anchors = select_anchors(spaces[0], spaces[1], cfg.anchors, prior ? &*prior : nullptr);
            auto aligned = align_embeddings(spaces[0], spaces[1], anchors, {cfg.normalize_before_align});
            spdlog::info("align: {} anchors, residual {:.4f} -> {:.4f}", anchors.size(),
                         aligned.anchor_residual_before, aligned.anchor_residual_after);
            return std::move(aligned.fused);
        });
        res.times.embedding += seconds_since(ta);
    }
    if (out_dir)
        stage("embedding", [&] {
            save_embeddings(artifact("embeddings.txt"), res.space);
            return 0;
        });

    auto t3 = clock::now();
    stage("task", [&] {
        const auto& rels = res.relations;
        switch (cfg.task) {
        case PipelineTask::SM:
            res.matches = match_schemas(res.space, present(res.space, column_ids(rels[0]), "columns"),
                                        present(res.space, column_ids(rels[1]), "columns"), cfg.sm_passes);
            break;
        case PipelineTask::ER:
            res.matches = match_entities(res.space, present(res.space, record_ids(rels[0]), "records"),
                                         present(res.space, record_ids(rels[1]), "records"), cfg.entity);
            break;
        case PipelineTask::TM: {
            auto attrs = split(*cfg.tm_attributes, ',');
            auto strategy = make_strategy(rels, cfg.tokenization);
            auto dom_a = attribute_tokens(rels[0], attrs[0], strategy);
            auto dom_b = attribute_tokens(rels[1], attrs[1], strategy);
            res.matches = match_tokens(res.space, dom_a, {dom_b.begin(), dom_b.end()}, cfg.tm_neighbors);
            break;
        }
        case PipelineTask::EQ: {
            std::vector<OddOneOutTest> tests;
            if (cfg.eq_fixture) {
                tests = read_tests(*cfg.eq_fixture);
            } else {
                TestGenOptions o{cfg.eq_tests, cfg.seed, {}};
                for (const auto& c : cfg.eq_concepts)
                    o.concepts.push_back(parse_concept_pair(c));
                for (auto kind : {TestKind::MA, TestKind::MR, TestKind::MC}) {
                    if (kind == TestKind::MC && o.concepts.empty())
                        continue;
                    auto t = gen_tests(rels, kind, o);
                    tests.insert(tests.end(), t.begin(), t.end());
                }
            }
            if (out_dir)
                write_tests(artifact("eq_tests.csv"), tests);
            auto strategy = rels.size() == 2 ? make_strategy(rels, cfg.tokenization)
                                             : TokenizationStrategy{cfg.tokenization, {}};
            res.eq = run_eq_suite(res.space, tests, strategy);
            break;
        }
        }
        if (res.matches && cfg.truth) {
            TruthFormat tf;
            tf.delimiter = cfg.delimiter;
            tf.header = cfg.truth_header;
            tf.left_dataset = dataset_tag(rels[0]);
            tf.right_dataset = dataset_tag(rels[1]);
            tf.kind = cfg.task == PipelineTask::SM   ? NodeKind::cid
                      : cfg.task == PipelineTask::TM ? NodeKind::token
                                                     : NodeKind::rid;
            res.score = score_matches(*res.matches, load_truth(*cfg.truth, tf));
        }
        return 0;
    });
    res.times.tasks = seconds_since(t3);

    if (out_dir) {
        stage("report", [&] {
            if (res.matches)
                write_matches(artifact("matches.csv"), *res.matches);
            if (res.score) {
                std::ofstream os(artifact("score.txt"));
                write_kv(os, res.score->to_kv());
            }
            if (res.eq) {
                std::ofstream os(artifact("eq_report.txt"));
                write_kv(os, res.eq->to_kv());
            }
            std::ofstream ts(artifact("timing.txt"));
            write_timing(ts, res.times);
            return 0;
        });
    }
    return res;
}

} // namespace relemb
