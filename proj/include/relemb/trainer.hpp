#pragma once

#include "relemb/walks.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace relemb {

enum class ModelKind { skipgram, cbow };

ModelKind parse_model(std::string_view s); // throws ConfigError
std::string to_string(ModelKind m);

struct TrainingConfig {
    ModelKind model = ModelKind::skipgram;
    std::size_t dim = 300;
    std::size_t window = 3;
    std::size_t epochs = 10;
    std::size_t negatives = 5;
    double alpha = 0.025;
    double min_alpha = 0.0001;
    std::size_t min_count = 0;
    bool dynamic_window = true;
    std::uint64_t seed = 1;
    // More than one worker trains lock-free and is not reproducible.
    unsigned workers = 1;
    bool track_loss = false;
};

void validate(const TrainingConfig& cfg); // throws ConfigError

class EmbeddingSpace {
public:
    EmbeddingSpace() = default;
    explicit EmbeddingSpace(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }
    const std::string& word(std::size_t i) const { return words_[i]; }

    bool contains(const std::string& w) const { return index_.contains(w); }
    std::optional<std::size_t> find(const std::string& w) const;
    std::size_t index_of(const std::string& w) const; // throws LookupError

    std::span<const float> vector(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    std::span<float> vector(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
    std::span<const float> vector(const std::string& w) const { return vector(index_of(w)); }

    // Appends a word; throws if already present or of the wrong dimension.
    std::size_t add(const std::string& w, std::span<const float> v);
    void reserve(std::size_t n);

    std::map<std::string, std::string> metadata;

    friend bool operator==(const EmbeddingSpace&, const EmbeddingSpace&) = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<float> data_;
};

struct TrainingResult {
    EmbeddingSpace space;
    // Mean negative-sampling loss per epoch, filled when track_loss is set.
    std::vector<double> epoch_loss;
};

TrainingResult train_embeddings(const WalkCorpus& corpus, const TrainingConfig& cfg);

// Cosine distance helpers. Both sides are compared through their unit
// vectors in double precision; a zero vector has distance 1 to everything.
std::vector<double> unit_vector(std::span<const float> v);
double cosine_distance(std::span<const float> a, std::span<const float> b);

struct Neighbor {
    std::string id;
    double distance;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Candidates with precomputed unit vectors, for repeated ranking.
class CosineIndex {
public:
    CosineIndex(const EmbeddingSpace& space, const std::vector<std::string>& ids); // throws LookupError

    std::size_t size() const { return ids_.size(); }
    const std::string& id(std::size_t i) const { return ids_[i]; }
    std::span<const double> unit(std::size_t i) const { return {units_.data() + i * dim_, dim_}; }

    std::optional<std::size_t> position(const std::string& id) const;

    // k lowest distances to `query`, ascending, ties by id. Entry `skip`
    // (an index into this index) is left out.
    std::vector<Neighbor> rank(std::span<const double> query_unit, std::size_t k,
                               std::optional<std::size_t> skip = std::nullopt) const;

private:
    std::size_t dim_;
    std::vector<std::string> ids_;
    std::vector<double> units_;
    std::unordered_map<std::string, std::size_t> positions_;
};

// The query itself is never returned.
std::vector<Neighbor> nearest_neighbors(const EmbeddingSpace& space, const std::string& query,
                                        const std::vector<std::string>& candidates, std::size_t k);

void save_embeddings(std::ostream& out, const EmbeddingSpace& space);
void save_embeddings(const std::filesystem::path& path, const EmbeddingSpace& space);
EmbeddingSpace load_embeddings(std::istream& in);
EmbeddingSpace load_embeddings(const std::filesystem::path& path);

// Single negative-sampling step: `in` is the input vector, outs[0] the true
// context and outs[1..] the negatives. Exposed for gradient checks.
template <class T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

template <class T>
T sgns_loss(const T* in, const std::vector<const T*>& outs, std::size_t dim) {
    T loss = 0;
    for (std::size_t j = 0; j < outs.size(); ++j) {
        T dot = 0;
        for (std::size_t c = 0; c < dim; ++c)
            dot += in[c] * outs[j][c];
        loss -= std::log(sigmoid(j == 0 ? dot : -dot));
    }
    return loss;
}

// Moves every output vector one step of size lr down the gradient of
// sgns_loss and accumulates the matching step for `in` into `in_step`
// without applying it. Adds the loss before the step to *loss if given.
template <class T>
void sgns_step(const T* in, const std::vector<T*>& outs, std::size_t dim, T lr, T* in_step,
               double* loss = nullptr) {
    for (std::size_t j = 0; j < outs.size(); ++j) {
        T* out = outs[j];
        T dot = 0;
#pragma omp simd reduction(+ : dot)
        for (std::size_t c = 0; c < dim; ++c)
            dot += in[c] * out[c];
        const T s = sigmoid(dot);
        const T label = j == 0 ? T(1) : T(0);
        if (loss) {
            double p = j == 0 ? static_cast<double>(s) : 1.0 - static_cast<double>(s);
            *loss -= std::log(p > 1e-12 ? p : 1e-12);
        }
        const T g = (label - s) * lr;
#pragma omp simd
        for (std::size_t c = 0; c < dim; ++c)
            in_step[c] += g * out[c];
#pragma omp simd
        for (std::size_t c = 0; c < dim; ++c)
            out[c] += g * in[c];
    }
}

// Full step on both the input and the output vectors; `work` must hold
// dim elements.
template <class T>
void sgns_update(T* in, const std::vector<T*>& outs, std::size_t dim, T lr, T* work) {
    for (std::size_t c = 0; c < dim; ++c)
        work[c] = 0;
    sgns_step(in, outs, dim, lr, work);
    for (std::size_t c = 0; c < dim; ++c)
        in[c] += work[c];
}

} // namespace relemb
