#pragma once

#include "zsr/dataset.hpp"
#include "zsr/matrix.hpp"

#include <optional>

namespace zsr {

/// Everything that tunes training. Blend weights default to the values the
/// method reports; alpha/beta/k defaults come from the synthetic suite.
struct HyperParams {
    double lambda1 = 0.75;  // seen anchor weight
    double gamma1 = 0.25;   // seen mapped-centroid weight
    double lambda2 = 0.8;   // unseen anchor weight
    double gamma2 = 0.2;    // unseen neighbour weight
    double alpha = 0.5;     // centroid regulariser
    double beta = 1.0;      // relaxed WX = P constraint
    int k = 12;             // seen neighbours per unseen class
    int iterations = 5;
    double tol = 1e-4;      // stop when ‖ΔW‖_F / ‖W‖_F < tol

    /// Unseen adjustment reads the seen prototypes after this iteration's
    /// seen adjustment; false uses the original seen prototypes.
    bool unseen_uses_adjusted_seen = true;
    double pivot_floor = kDefaultPivotFloor;
    /// On a singular Sylvester pair, retry once with L + εI,
    /// ε = 1e-8 · trace(L) / d_s.
    bool ridge_retry = false;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Encoder weights W (d_s x d_v). The decoder is Wᵀ.
struct MappingModel {
    FeatureMatrix weights;

    std::size_t semantic_dim() const { return weights.rows(); }
    std::size_t visual_dim() const { return weights.cols(); }

    /// W x for a single visual vector.
    std::vector<double> encode(std::span<const double> x) const;
    /// Wᵀ s for a single semantic vector.
    std::vector<double> decode(std::span<const double> s) const;
};

/// d_s x m matrix whose column i is the prototype of labels[i].
FeatureMatrix expand_per_instance(const PrototypeTable& table, const std::vector<ClassId>& labels);

/// d_s x m matrix whose column i is the mean of W x over the instances of
/// labels[i]'s class.
FeatureMatrix class_centroids(const MappingModel& model, const LabeledDataset& data);

/// ½‖X − WᵀP‖² + (α/2)‖WX − O‖² + (β/2)‖WX − P‖²
double objective(const MappingModel& model, const LabeledDataset& data, const FeatureMatrix& protos,
                 const FeatureMatrix& centroids, const HyperParams& hp);

/// PPᵀW + (α+β)WXXᵀ − [(1+β)P + αO]Xᵀ
FeatureMatrix objective_gradient(const MappingModel& model, const LabeledDataset& data, const FeatureMatrix& protos,
                                 const FeatureMatrix& centroids, const HyperParams& hp);

/// XXᵀ and its eigendecomposition. X is fixed across the alternating loop,
/// so callers that solve repeatedly compute this once.
struct VisualGram {
    FeatureMatrix gram;
    SymEig eig;
};

VisualGram visual_gram(const FeatureMatrix& features);

/// The Sylvester system L = PPᵀ, R = (α+β)XXᵀ, M = −[(1+β)P + αO]Xᵀ.
SylvesterSystem assemble_system(const LabeledDataset& data, const FeatureMatrix& protos,
                                const FeatureMatrix& centroids, const HyperParams& hp);

/// Minimiser of the relaxed objective for fixed P and O.
MappingModel solve_weights(const LabeledDataset& data, const FeatureMatrix& protos, const FeatureMatrix& centroids,
                           const HyperParams& hp);
MappingModel solve_weights(const LabeledDataset& data, const FeatureMatrix& protos, const FeatureMatrix& centroids,
                           const HyperParams& hp, const VisualGram& gram);

}  // namespace zsr
