#include "relemb/align.hpp"

#include "relemb/error.hpp"
#include "relemb/integrate.hpp"

#include <cmath>

namespace relemb {

AnchorMode parse_anchor_mode(std::string_view s) {
    if (s == "shared-tokens" || s == "shared_tokens" || s == "tokens")
        return AnchorMode::shared_tokens;
    if (s == "matched-ids" || s == "matched_ids" || s == "ids")
        return AnchorMode::matched_ids;
    throw ConfigError("unknown anchor mode '" + std::string(s) + "' (expected shared-tokens or matched-ids)");
}

AnchorSet select_anchors(const EmbeddingSpace& first, const EmbeddingSpace& second, AnchorMode mode,
                         const MatchSet* matches) {
    AnchorSet anchors;
    if (mode == AnchorMode::shared_tokens) {
        for (const auto& w : first.words())
            if (NodeId::kind_of(w) == NodeKind::token && second.contains(w))
                anchors.pairs.emplace_back(w, w);
        return anchors;
    }
    if (!matches || matches->matches.empty())
        throw AlignmentError("matched-ids anchors need a non-empty match set");
    for (const auto& m : matches->matches) {
        if (first.contains(m.left) && second.contains(m.right))
            anchors.pairs.emplace_back(m.left, m.right);
        else if (first.contains(m.right) && second.contains(m.left))
            anchors.pairs.emplace_back(m.right, m.left);
    }
    if (anchors.empty())
        throw AlignmentError("none of the matched ids occur in both spaces");
    return anchors;
}

Eigen::MatrixXd solve_procrustes(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw AlignmentError("anchor matrices differ in shape: " + std::to_string(A.rows()) + "x" +
                             std::to_string(A.cols()) + " vs " + std::to_string(B.rows()) + "x" +
                             std::to_string(B.cols()));
    if (A.rows() == 0)
        throw AlignmentError("no anchors");
    Eigen::MatrixXd M = B.transpose() * A;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().transpose();
}

namespace {

Eigen::VectorXd as_vector(std::span<const float> v, bool normalize) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
        x(static_cast<Eigen::Index>(i)) = v[i];
    if (normalize) {
        double n = x.norm();
        if (n > 0)
            x /= n;
    }
    return x;
}

std::vector<float> as_floats(const Eigen::VectorXd& x) {
    std::vector<float> out(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        out[static_cast<std::size_t>(i)] = static_cast<float>(x(i));
    return out;
}

} // namespace

AlignResult align_embeddings(const EmbeddingSpace& first, const EmbeddingSpace& second, const AnchorSet& anchors,
                             const AlignOptions& options) {
    if (anchors.empty())
        throw AlignmentError("empty anchor set; the spaces share nothing to align on, train them pooled instead");
    if (first.dim() != second.dim())
        throw AlignmentError("spaces have different dimensions " + std::to_string(first.dim()) + " and " +
                             std::to_string(second.dim()));
    const auto d = static_cast<Eigen::Index>(first.dim());
    const auto n = static_cast<Eigen::Index>(anchors.size());
    Eigen::MatrixXd A(n, d), B(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& [a, b] = anchors.pairs[static_cast<std::size_t>(i)];
        A.row(i) = as_vector(first.vector(a), options.normalize_first).transpose();
        B.row(i) = as_vector(second.vector(b), options.normalize_first).transpose();
    }

    AlignResult result;
    result.rotation = solve_procrustes(A, B);
    result.anchor_residual_before = (A - B).norm();
    result.anchor_residual_after = (A * result.rotation.transpose() - B).norm();

    result.fused = EmbeddingSpace(first.dim());
    result.fused.reserve(first.size() + second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        const auto& w = first.word(i);
        Eigen::VectorXd x = result.rotation * as_vector(first.vector(i), options.normalize_first);
        if (auto j = second.find(w))
            x = 0.5 * (x + as_vector(second.vector(*j), options.normalize_first));
        result.fused.add(w, as_floats(x));
    }
    for (std::size_t j = 0; j < second.size(); ++j) {
        const auto& w = second.word(j);
        if (!first.contains(w))
            result.fused.add(w, as_floats(as_vector(second.vector(j), options.normalize_first)));
    }
    result.fused.metadata = second.metadata;
    result.fused.metadata["aligned_anchors"] = std::to_string(anchors.size());
    return result;
}

} // namespace relemb
