#include "relemb/trainer.hpp"

#include "relemb/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

namespace relemb {

ModelKind parse_model(std::string_view s) {
    if (s == "skipgram" || s == "skip-gram" || s == "sg")
        return ModelKind::skipgram;
    if (s == "cbow")
        return ModelKind::cbow;
    throw ConfigError("unknown model '" + std::string(s) + "' (expected skipgram or cbow)");
}

std::string to_string(ModelKind m) { return m == ModelKind::skipgram ? "skipgram" : "cbow"; }

void validate(const TrainingConfig& cfg) {
    if (cfg.dim == 0)
        throw ConfigError("dim must be positive");
    if (cfg.window == 0)
        throw ConfigError("window must be at least 1");
    if (cfg.epochs == 0)
        throw ConfigError("epochs must be positive");
    if (!(cfg.alpha > 0) || cfg.min_alpha < 0 || cfg.min_alpha > cfg.alpha)
        throw ConfigError("learning rate must satisfy 0 <= min_alpha <= alpha, alpha > 0");
}

std::optional<std::size_t> EmbeddingSpace::find(const std::string& w) const {
    auto it = index_.find(w);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

std::size_t EmbeddingSpace::index_of(const std::string& w) const {
    auto it = index_.find(w);
    if (it == index_.end())
        throw LookupError("'" + w + "' is not in the vocabulary");
    return it->second;
}

std::size_t EmbeddingSpace::add(const std::string& w, std::span<const float> v) {
    if (v.size() != dim_)
        throw FormatError("vector for '" + w + "' has dimension " + std::to_string(v.size()) + ", expected " +
                          std::to_string(dim_));
    auto [it, inserted] = index_.emplace(w, words_.size());
    if (!inserted)
        throw FormatError("duplicate vocabulary entry '" + w + "'");
    words_.push_back(w);
    data_.insert(data_.end(), v.begin(), v.end());
    return it->second;
}

void EmbeddingSpace::reserve(std::size_t n) {
    words_.reserve(n);
    index_.reserve(n);
    data_.reserve(n * dim_);
}

namespace {

inline void axpy(float g, const float* __restrict x, float* __restrict y, std::size_t d) {
#pragma omp simd
    for (std::size_t c = 0; c < d; ++c)
        y[c] += g * x[c];
}

inline std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

struct Model {
    std::size_t dim;
    std::vector<float> syn0;
    std::vector<float> syn1;
    std::vector<std::uint32_t> table;
};

struct Worker {
    const TrainingConfig& cfg;
    Model& model;
    const std::vector<std::vector<std::uint32_t>>& sentences;
    std::atomic<std::uint64_t>& processed;
    std::uint64_t total_words;

    double loss = 0.0;
    std::uint64_t loss_terms = 0;

    float learning_rate(std::uint64_t done) const {
        double progress = static_cast<double>(done) / static_cast<double>(total_words);
        double a = cfg.alpha - (cfg.alpha - cfg.min_alpha) * progress;
        return static_cast<float>(std::max(a, cfg.min_alpha));
    }

    std::vector<float*> outs;

    // Negative-sampling step for input vector l1 against `target`;
    // accumulates the input step into neu1e.
    void train_pair(const float* l1, std::uint32_t target, float lr, float* neu1e, std::mt19937_64& rng) {
        const std::size_t d = model.dim;
        outs.clear();
        outs.push_back(model.syn1.data() + static_cast<std::size_t>(target) * d);
        for (std::size_t j = 0; j < cfg.negatives; ++j) {
            auto out = model.table[bounded(rng, model.table.size())];
            if (out != target)
                outs.push_back(model.syn1.data() + static_cast<std::size_t>(out) * d);
        }
        if (cfg.track_loss)
            loss_terms += outs.size();
        sgns_step<float>(l1, outs, d, lr, neu1e, cfg.track_loss ? &loss : nullptr);
    }

    void run(std::size_t begin, std::size_t end, std::size_t step, std::mt19937_64& rng) {
        const std::size_t d = model.dim;
        std::vector<float> neu1e(d), neu1(d);
        std::uint64_t local = 0;
        float lr = learning_rate(processed.load(std::memory_order_relaxed));
        for (std::size_t si = begin; si < end; si += step) {
            const auto& sent = sentences[si];
            const std::size_t n = sent.size();
            for (std::size_t pos = 0; pos < n; ++pos) {
                if (++local == 10000) {
                    auto done = processed.fetch_add(local, std::memory_order_relaxed) + local;
                    local = 0;
                    lr = learning_rate(done);
                }
                const std::size_t shrink = cfg.dynamic_window ? bounded(rng, cfg.window) : 0;
                const std::size_t w = cfg.window - shrink;
                const std::size_t lo = pos >= w ? pos - w : 0;
                const std::size_t hi = std::min(n - 1, pos + w);
                const std::uint32_t word = sent[pos];
                if (cfg.model == ModelKind::skipgram) {
                    for (std::size_t c = lo; c <= hi; ++c) {
                        if (c == pos)
                            continue;
                        float* l1 = model.syn0.data() + static_cast<std::size_t>(sent[c]) * d;
                        std::fill(neu1e.begin(), neu1e.end(), 0.f);
                        train_pair(l1, word, lr, neu1e.data(), rng);
                        axpy(1.f, neu1e.data(), l1, d);
                    }
                } else {
                    std::fill(neu1.begin(), neu1.end(), 0.f);
                    std::size_t count = 0;
                    for (std::size_t c = lo; c <= hi; ++c) {
                        if (c == pos)
                            continue;
                        axpy(1.f, model.syn0.data() + static_cast<std::size_t>(sent[c]) * d, neu1.data(), d);
                        ++count;
                    }
                    if (!count)
                        continue;
                    const float inv = 1.f / static_cast<float>(count);
                    for (auto& x : neu1)
                        x *= inv;
                    std::fill(neu1e.begin(), neu1e.end(), 0.f);
                    train_pair(neu1.data(), word, lr, neu1e.data(), rng);
                    for (std::size_t c = lo; c <= hi; ++c)
                        if (c != pos)
                            axpy(1.f, neu1e.data(), model.syn0.data() + static_cast<std::size_t>(sent[c]) * d, d);
                }
            }
        }
        processed.fetch_add(local, std::memory_order_relaxed);
    }
};

} // namespace

TrainingResult train_embeddings(const WalkCorpus& corpus, const TrainingConfig& cfg) {
    validate(cfg);

    std::vector<std::uint64_t> counts(corpus.symbols.size(), 0);
    for (const auto& s : corpus.sentences)
        for (auto t : s) {
            if (t >= counts.size())
                throw TrainingError("corpus sentence refers to unknown symbol " + std::to_string(t));
            ++counts[t];
        }

    // Vocabulary: frequency descending, then lexicographic.
    std::vector<std::uint32_t> order;
    for (std::uint32_t i = 0; i < counts.size(); ++i)
        if (counts[i] > 0 && counts[i] >= cfg.min_count)
            order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (counts[a] != counts[b])
            return counts[a] > counts[b];
        return corpus.symbols[a] < corpus.symbols[b];
    });
    constexpr std::uint32_t kDropped = UINT32_MAX;
    std::vector<std::uint32_t> to_vocab(corpus.symbols.size(), kDropped);
    for (std::uint32_t v = 0; v < order.size(); ++v)
        to_vocab[order[v]] = v;

    std::vector<std::vector<std::uint32_t>> sentences;
    sentences.reserve(corpus.sentences.size());
    std::uint64_t total = 0;
    for (const auto& s : corpus.sentences) {
        std::vector<std::uint32_t> mapped;
        mapped.reserve(s.size());
        for (auto t : s)
            if (to_vocab[t] != kDropped)
                mapped.push_back(to_vocab[t]);
        total += mapped.size();
        if (mapped.size() > 1)
            sentences.push_back(std::move(mapped));
    }
    if (order.empty() || total <= cfg.window || sentences.empty())
        throw TrainingError("corpus has " + std::to_string(total) + " tokens, smaller than one window of " +
                            std::to_string(cfg.window));

    const std::size_t d = cfg.dim;
    const std::size_t V = order.size();
    Model model{d, std::vector<float>(V * d), std::vector<float>(V * d, 0.f), {}};

    std::mt19937_64 init_rng(walk_seed(cfg.seed, 0xfeedULL));
    std::uniform_real_distribution<float> init(-0.5f / static_cast<float>(d), 0.5f / static_cast<float>(d));
    for (auto& x : model.syn0)
        x = init(init_rng);

    // Unigram^0.75 table for negatives.
    const std::size_t table_size = std::clamp<std::size_t>(V * 1000, 100000, 10000000);
    model.table.resize(table_size);
    {
        double norm = 0;
        for (auto s : order)
            norm += std::pow(static_cast<double>(counts[s]), 0.75);
        std::size_t v = 0;
        double cum = std::pow(static_cast<double>(counts[order[0]]), 0.75) / norm;
        for (std::size_t a = 0; a < table_size; ++a) {
            model.table[a] = static_cast<std::uint32_t>(v);
            if (static_cast<double>(a + 1) / static_cast<double>(table_size) > cum && v + 1 < V) {
                ++v;
                cum += std::pow(static_cast<double>(counts[order[v]]), 0.75) / norm;
            }
        }
    }

    std::atomic<std::uint64_t> processed{0};
    const std::uint64_t total_words = total * cfg.epochs;
    const unsigned workers = std::max(1u, cfg.workers);
    TrainingResult result;
    std::vector<std::mt19937_64> rngs;
    for (unsigned w = 0; w < workers; ++w)
        rngs.emplace_back(walk_seed(cfg.seed, 0x5eed0000ULL + w));

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::vector<Worker> ws;
        for (unsigned w = 0; w < workers; ++w)
            ws.push_back(Worker{cfg, model, sentences, processed, total_words, 0.0, 0, {}});
        if (workers == 1) {
            ws[0].run(0, sentences.size(), 1, rngs[0]);
        } else {
            std::vector<std::thread> threads;
            for (unsigned w = 0; w < workers; ++w)
                threads.emplace_back([&, w] { ws[w].run(w, sentences.size(), workers, rngs[w]); });
            for (auto& t : threads)
                t.join();
        }
        if (cfg.track_loss) {
            double loss = 0;
            std::uint64_t terms = 0;
            for (const auto& w : ws) {
                loss += w.loss;
                terms += w.loss_terms;
            }
            result.epoch_loss.push_back(terms ? loss / static_cast<double>(terms) : 0.0);
        }
        spdlog::debug("epoch {}/{} done", epoch + 1, cfg.epochs);
    }

    result.space = EmbeddingSpace(d);
    result.space.reserve(V);
    for (std::size_t v = 0; v < V; ++v)
        result.space.add(corpus.symbols[order[v]], {model.syn0.data() + v * d, d});
    auto& meta = result.space.metadata;
    meta["model"] = to_string(cfg.model);
    meta["dim"] = std::to_string(cfg.dim);
    meta["window"] = std::to_string(cfg.window);
    meta["epochs"] = std::to_string(cfg.epochs);
    meta["negatives"] = std::to_string(cfg.negatives);
    meta["seed"] = std::to_string(cfg.seed);
    meta["workers"] = std::to_string(workers);
    return result;
}

std::vector<double> unit_vector(std::span<const float> v) {
    std::vector<double> u(v.begin(), v.end());
    double n = 0;
    for (double x : u)
        n += x * x;
    n = std::sqrt(n);
    if (n > 0)
        for (double& x : u)
            x /= n;
    return u;
}

namespace {

double unit_dot(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

} // namespace

double cosine_distance(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw LookupError("dimension mismatch in cosine distance");
    auto ua = unit_vector(a);
    auto ub = unit_vector(b);
    return 1.0 - unit_dot(ua, ub);
}

CosineIndex::CosineIndex(const EmbeddingSpace& space, const std::vector<std::string>& ids)
    : dim_(space.dim()), ids_(ids) {
    units_.reserve(ids.size() * dim_);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto u = unit_vector(space.vector(ids[i]));
        units_.insert(units_.end(), u.begin(), u.end());
        positions_.emplace(ids[i], i);
    }
}

std::optional<std::size_t> CosineIndex::position(const std::string& id) const {
    auto it = positions_.find(id);
    if (it == positions_.end())
        return std::nullopt;
    return it->second;
}

std::vector<Neighbor> CosineIndex::rank(std::span<const double> query_unit, std::size_t k,
                                        std::optional<std::size_t> skip) const {
    std::vector<std::pair<double, std::size_t>> all;
    all.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (i != skip)
            all.emplace_back(1.0 - unit_dot(query_unit, unit(i)), i);
    auto less = [this](const std::pair<double, std::size_t>& a, const std::pair<double, std::size_t>& b) {
        if (a.first != b.first)
            return a.first < b.first;
        return ids_[a.second] < ids_[b.second];
    };
    if (k < all.size()) {
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
        all.resize(k);
    } else {
        std::sort(all.begin(), all.end(), less);
    }
    std::vector<Neighbor> out;
    out.reserve(all.size());
    for (const auto& [dist, i] : all)
        out.push_back({ids_[i], dist});
    return out;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, const std::string& query,
                                        const std::vector<std::string>& candidates, std::size_t k) {
    auto q = unit_vector(space.vector(query));
    CosineIndex index(space, candidates);
    return index.rank(q, k, index.position(query));
}

void save_embeddings(std::ostream& out, const EmbeddingSpace& space) {
    out << space.size() << ' ' << space.dim() << '\n';
    char buf[32];
    std::string line;
    for (std::size_t i = 0; i < space.size(); ++i) {
        line = space.word(i);
        for (float x : space.vector(i)) {
            int n = std::snprintf(buf, sizeof buf, " %.9g", static_cast<double>(x));
            line.append(buf, static_cast<std::size_t>(n));
        }
        line.push_back('\n');
        out << line;
    }
    if (!out)
        throw FormatError("failed writing embeddings");
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingSpace& space) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot open " + path.string() + " for writing");
    save_embeddings(out, space);
}

EmbeddingSpace load_embeddings(std::istream& in) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line))
        throw FormatError("line 1: missing header");
    std::size_t vocab = 0, dim = 0;
    {
        std::istringstream hs(line);
        std::string extra;
        if (!(hs >> vocab >> dim) || (hs >> extra) || dim == 0)
            throw FormatError("line 1: malformed header '" + line + "'");
    }
    EmbeddingSpace space(dim);
    space.reserve(vocab);
    std::vector<float> v(dim);
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        if (space.size() == vocab)
            throw FormatError("line " + std::to_string(lineno) + ": more entries than the header's " +
                              std::to_string(vocab));
        auto fail = [&](const std::string& why) { return FormatError("line " + std::to_string(lineno) + ": " + why); };
        std::size_t p = line.find(' ');
        if (p == std::string::npos || p == 0)
            throw fail("missing vector");
        std::string word = line.substr(0, p);
        const char* s = line.data() + p;
        const char* end = line.data() + line.size();
        for (std::size_t c = 0; c < dim; ++c) {
            while (s < end && *s == ' ')
                ++s;
            auto [ptr, ec] = std::from_chars(s, end, v[c]);
            if (ec != std::errc())
                throw fail("expected " + std::to_string(dim) + " values, parsed " + std::to_string(c));
            s = ptr;
        }
        while (s < end && (*s == ' ' || *s == '\r'))
            ++s;
        if (s != end)
            throw fail("more than " + std::to_string(dim) + " values");
        try {
            space.add(word, v);
        } catch (const FormatError& e) {
            throw fail(e.what());
        }
    }
    if (space.size() != vocab)
        throw FormatError("line " + std::to_string(lineno + 1) + ": header declares " + std::to_string(vocab) +
                          " entries, found " + std::to_string(space.size()));
    return space;
}

EmbeddingSpace load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open embeddings " + path.string());
    return load_embeddings(in);
}

} // namespace relemb
