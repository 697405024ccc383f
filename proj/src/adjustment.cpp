#include "zsr/adjustment.hpp"

#include "zsr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zsr {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("cosine_similarity: length mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw DataError("cosine_similarity: zero vector");
    const double c = dot / (std::sqrt(na) * std::sqrt(nb));
    return std::clamp(c, -1.0, 1.0);
}

AdjustedPrototypes adjust_seen(const PrototypeTable& table, const MappingModel& model, const LabeledDataset& seen,
                               const HyperParams& hp) {
    const FeatureMatrix mapped = matmul(model.weights, seen.features);
    if (mapped.rows() != table.semantic_dim()) {
        throw DimensionError("adjust_seen: model semantic dim does not match prototypes");
    }
    FeatureMatrix vectors = table.vectors();
    AdjustedPrototypes out;
    for (std::size_t c = 0; c < table.size(); ++c) {
        if (table.partition()[c] != Partition::Seen) continue;
        const ClassId id = table.ids()[c];
        const auto members = seen.instances_of(id);
        if (members.empty()) throw DataError("adjust_seen: seen class " + std::to_string(id) + " has no instances");

        Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mapped.rows()));
        for (auto i : members) mean += mapped.eigen().col(static_cast<Eigen::Index>(i));
        mean /= static_cast<double>(members.size());

        const auto col = static_cast<Eigen::Index>(c);
        BlendRecord rec;
        rec.original = table.vectors().column(c);
        rec.blend_term.assign(mean.data(), mean.data() + mean.size());
        vectors.eigen().col(col) = hp.lambda1 * table.vectors().eigen().col(col) + hp.gamma1 * mean;
        if (vectors.eigen().col(col).squaredNorm() == 0.0) {
            throw DataError("adjust_seen: prototype of class " + std::to_string(id) + " collapsed to zero");
        }
        out.provenance.emplace(id, std::move(rec));
    }
    out.table = PrototypeTable(std::move(vectors), table.ids(), table.partition());
    return out;
}

std::vector<Neighbor> knn_seen(const PrototypeTable& table, ClassId unseen_id, int k) {
    if (table.partition_of(unseen_id) != Partition::Unseen) {
        throw DataError("knn_seen: class " + std::to_string(unseen_id) + " is not unseen");
    }
    return knn_seen_from(table.prototype(unseen_id), table, k);
}

std::vector<Neighbor> knn_seen_from(std::span<const double> query, const PrototypeTable& source, int k) {
    const auto seen = source.seen_ids();
    if (k < 1 || static_cast<std::size_t>(k) > seen.size()) {
        throw DataError("knn_seen: k = " + std::to_string(k) + " but only " + std::to_string(seen.size()) +
                        " seen classes");
    }
    std::vector<Neighbor> all;
    all.reserve(seen.size());
    for (auto id : seen) all.push_back({id, cosine_similarity(query, source.prototype(id))});
    const auto better = [](const Neighbor& a, const Neighbor& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
    };
    std::partial_sort(all.begin(), all.begin() + k, all.end(), better);
    all.resize(static_cast<std::size_t>(k));
    return all;
}

std::vector<double> neighbor_weights(std::span<const Neighbor> neighbors) {
    std::vector<double> w(neighbors.size());
    double total = 0.0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
        w[j] = std::max(0.0, neighbors[j].similarity);
        total += w[j];
    }
    if (total <= 0.0) return {};
    for (auto& x : w) x /= total;
    return w;
}

AdjustedPrototypes adjust_unseen(const PrototypeTable& table, const HyperParams& hp) {
    return adjust_unseen(table, table, hp);
}

AdjustedPrototypes adjust_unseen(const PrototypeTable& table, const PrototypeTable& neighbor_source,
                                 const HyperParams& hp) {
    if (neighbor_source.semantic_dim() != table.semantic_dim()) {
        throw DimensionError("adjust_unseen: neighbour table has a different semantic dim");
    }
    FeatureMatrix vectors = table.vectors();
    AdjustedPrototypes out;
    const auto ds = static_cast<Eigen::Index>(table.semantic_dim());
    for (std::size_t c = 0; c < table.size(); ++c) {
        if (table.partition()[c] != Partition::Unseen) continue;
        const ClassId id = table.ids()[c];
        const auto original = table.vectors().column(c);

        BlendRecord rec;
        rec.original = original;
        rec.neighbors = knn_seen_from(original, neighbor_source, hp.k);
        rec.weights = neighbor_weights(rec.neighbors);
        if (rec.weights.empty()) {
            rec.skipped = true;
            out.provenance.emplace(id, std::move(rec));
            continue;
        }
        Eigen::VectorXd avg = Eigen::VectorXd::Zero(ds);
        for (std::size_t j = 0; j < rec.neighbors.size(); ++j) {
            const auto q = neighbor_source.vectors().eigen().col(
                static_cast<Eigen::Index>(neighbor_source.require_index(rec.neighbors[j].id)));
            avg += rec.weights[j] * q;
        }
        rec.blend_term.assign(avg.data(), avg.data() + avg.size());
        const auto col = static_cast<Eigen::Index>(c);
        vectors.eigen().col(col) = hp.lambda2 * table.vectors().eigen().col(col) + hp.gamma2 * avg;
        if (vectors.eigen().col(col).squaredNorm() == 0.0) {
            throw DataError("adjust_unseen: prototype of class " + std::to_string(id) + " collapsed to zero");
        }
        out.provenance.emplace(id, std::move(rec));
    }
    out.table = PrototypeTable(std::move(vectors), table.ids(), table.partition());
    return out;
}

}  // namespace zsr
