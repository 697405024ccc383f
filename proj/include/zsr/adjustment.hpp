#pragma once

#include "zsr/dataset.hpp"
#include "zsr/mapping.hpp"

#include <map>
#include <span>
#include <vector>

namespace zsr {

/// dot(a, b) / (‖a‖‖b‖). Throws DataError for a zero vector.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Neighbor {
    ClassId id;
    double similarity;
};

/// What went into a class's last blend.
struct BlendRecord {
    std::vector<double> original;
    /// Mapped class mean (seen) or weighted neighbour average (unseen).
    std::vector<double> blend_term;
    /// Unseen only: the k neighbours and their normalised weights.
    std::vector<Neighbor> neighbors;
    std::vector<double> weights;
    /// Unseen only: every floored weight was zero, prototype left as is.
    bool skipped = false;
};

struct AdjustedPrototypes {
    PrototypeTable table;
    std::map<ClassId, BlendRecord> provenance;
};

/// Seen prototype p ← λ₁ p + γ₁ mean(W x) over the class's instances.
/// `table` holds the original prototypes; unseen entries pass through.
AdjustedPrototypes adjust_seen(const PrototypeTable& table, const MappingModel& model, const LabeledDataset& seen,
                               const HyperParams& hp);

/// The k seen classes most cosine-similar to `unseen_id`, descending,
/// ties broken by ascending id. Throws DataError when k exceeds the seen count.
std::vector<Neighbor> knn_seen(const PrototypeTable& table, ClassId unseen_id, int k);

/// Same ranking for an arbitrary query vector against `source`'s seen classes.
std::vector<Neighbor> knn_seen_from(std::span<const double> query, const PrototypeTable& source, int k);

/// Similarities floored at zero and divided by their sum. Empty when the
/// floored sum is zero.
std::vector<double> neighbor_weights(std::span<const Neighbor> neighbors);

/// Unseen prototype p ← λ₂ p + γ₂ Σ (Ω_j / ΣΩ) q_j over its k nearest seen
/// prototypes q_j. Seen entries pass through.
AdjustedPrototypes adjust_unseen(const PrototypeTable& table, const HyperParams& hp);

/// Variant whose neighbour search and averaging read seen prototypes from
/// `neighbor_source` rather than `table`.
AdjustedPrototypes adjust_unseen(const PrototypeTable& table, const PrototypeTable& neighbor_source,
                                 const HyperParams& hp);

}  // namespace zsr
