#pragma once

#include "relemb/trainer.hpp"

#include <Eigen/Dense>

#include <string>
#include <utility>
#include <vector>

namespace relemb {

struct MatchSet;

enum class AnchorMode { shared_tokens, matched_ids };

AnchorMode parse_anchor_mode(std::string_view s); // throws ConfigError

// Anchor i pairs first[i] in the first space with second[i] in the second.
// Shared-token anchors have the same name on both sides.
struct AnchorSet {
    std::vector<std::pair<std::string, std::string>> pairs;
    bool empty() const { return pairs.empty(); }
    std::size_t size() const { return pairs.size(); }
};

// matched_ids needs `matches`; throws AlignmentError when it is empty.
AnchorSet select_anchors(const EmbeddingSpace& first, const EmbeddingSpace& second, AnchorMode mode,
                         const MatchSet* matches = nullptr);

// Orthogonal W minimizing ||W a_i - b_i|| summed over rows a_i of A, b_i of B.
Eigen::MatrixXd solve_procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);

struct AlignOptions {
    // Scale every vector to unit length before solving and fusing.
    bool normalize_first = false;
};

struct AlignResult {
    EmbeddingSpace fused;
    Eigen::MatrixXd rotation;
    double anchor_residual_before = 0.0; // ||A - B||_F
    double anchor_residual_after = 0.0;  // ||A W^T - B||_F
};

// Rotates the first space onto the second. Words present in both get the
// average of the rotated and the second vector; the rest keep their own.
AlignResult align_embeddings(const EmbeddingSpace& first, const EmbeddingSpace& second, const AnchorSet& anchors,
                             const AlignOptions& options = {});

} // namespace relemb
