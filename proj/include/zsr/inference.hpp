#pragma once

#include "zsr/adjustment.hpp"
#include "zsr/dataset.hpp"
#include "zsr/mapping.hpp"

#include <map>
#include <optional>
#include <span>
#include <vector>

namespace zsr {

/// Where instances and prototypes are compared.
enum class PredictionSpace {
    Semantic,  // cos(W x, p)
    Visual,    // cos(x, Wᵀ p)
};

struct RankedClass {
    ClassId id;
    double similarity;
};

/// Unseen classes of `candidates` ranked by descending cosine similarity,
/// ties by ascending id. Throws DataError when there are no unseen
/// candidates or the compared instance vector is zero.
std::vector<RankedClass> predict(const MappingModel& model, std::span<const double> x, const PrototypeTable& candidates,
                                 PredictionSpace space = PredictionSpace::Semantic);

struct EvalReport {
    std::map<int, double> hit_at;
    std::map<ClassId, double> per_class_accuracy;  // Hit@1 within each class
    double hubness_skewness = 0.0;
    std::size_t instance_count = 0;
    std::size_t degenerate_count = 0;  // zero mapped vectors, scored as misses
    double elapsed_ms = 0.0;
};

struct EvalOptions {
    PredictionSpace space = PredictionSpace::Semantic;
    /// Instances are sharded over this many threads; the report does not
    /// depend on the value.
    unsigned threads = 1;
};

EvalReport evaluate(const MappingModel& model, const LabeledDataset& unseen, const PrototypeTable& table,
                    const std::vector<int>& ks, const EvalOptions& opts = {});
EvalReport evaluate(const MappingModel& model, const LabeledDataset& unseen, const AdjustedPrototypes& table,
                    const std::vector<int>& ks, const EvalOptions& opts = {});

/// Skewness m₃ / m₂^{3/2} of the per-prototype 1-NN counts (population
/// moments). Zero when every count is equal.
double hubness_skewness(std::span<const std::size_t> counts);

/// Hit@1 after a full train + evaluate for each k, everything else fixed.
std::map<int, double> sweep_k(const LabeledDataset& seen, const LabeledDataset& unseen, const PrototypeTable& table,
                              const HyperParams& hp, const std::vector<int>& k_values, const EvalOptions& opts = {});

}  // namespace zsr
