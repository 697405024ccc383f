#include "zsr/inference.hpp"

#include "zsr/errors.hpp"
#include "zsr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

namespace zsr {

namespace {

struct Candidates {
    std::vector<ClassId> ids;
    Eigen::MatrixXd unit;  // one unit-norm compared vector per column
};

Candidates prepare(const MappingModel& model, const PrototypeTable& table, PredictionSpace space) {
    Candidates c;
    std::vector<Eigen::Index> cols;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table.partition()[i] != Partition::Unseen) continue;
        c.ids.push_back(table.ids()[i]);
        cols.push_back(static_cast<Eigen::Index>(i));
    }
    if (c.ids.empty()) throw DataError("predict: no unseen candidate classes");
    if (table.semantic_dim() != model.semantic_dim()) {
        throw DimensionError("predict: prototype dim does not match model semantic dim");
    }
    const auto dim = space == PredictionSpace::Semantic ? model.semantic_dim() : model.visual_dim();
    c.unit.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        Eigen::VectorXd v = table.vectors().eigen().col(cols[j]);
        if (space == PredictionSpace::Visual) v = model.weights.eigen().transpose() * v;
        const double n = v.norm();
        if (n == 0.0) {
            throw DataError("predict: candidate " + std::to_string(c.ids[j]) + " has a zero comparison vector");
        }
        c.unit.col(static_cast<Eigen::Index>(j)) = v / n;
    }
    return c;
}

// Empty when the compared instance vector is zero.
std::vector<RankedClass> rank(const MappingModel& model, const Eigen::Ref<const Eigen::VectorXd>& x,
                              const Candidates& c, PredictionSpace space) {
    Eigen::VectorXd q = space == PredictionSpace::Semantic ? Eigen::VectorXd(model.weights.eigen() * x)
                                                           : Eigen::VectorXd(x);
    const double n = q.norm();
    if (n == 0.0) return {};
    q /= n;
    std::vector<RankedClass> out(c.ids.size());
    for (std::size_t j = 0; j < c.ids.size(); ++j) {
        const double s = c.unit.col(static_cast<Eigen::Index>(j)).dot(q);
        out[j] = {c.ids[j], std::clamp(s, -1.0, 1.0)};
    }
    std::sort(out.begin(), out.end(), [](const RankedClass& a, const RankedClass& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
    });
    return out;
}

struct InstanceOutcome {
    std::size_t true_rank = 0;  // position of the true class; SIZE_MAX on a miss
    std::size_t top = 0;        // candidate index ranked first
    bool degenerate = false;
};

}  // namespace

std::vector<RankedClass> predict(const MappingModel& model, std::span<const double> x, const PrototypeTable& candidates,
                                 PredictionSpace space) {
    if (x.size() != model.visual_dim()) throw DimensionError("predict: instance length does not match visual dim");
    const Candidates c = prepare(model, candidates, space);
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    auto ranked = rank(model, xv, c, space);
    if (ranked.empty()) throw DataError("predict: mapped instance is the zero vector");
    return ranked;
}

double hubness_skewness(std::span<const std::size_t> counts) {
    if (counts.empty()) return 0.0;
    const double n = static_cast<double>(counts.size());
    double mean = 0.0;
    for (auto c : counts) mean += static_cast<double>(c);
    mean /= n;
    double m2 = 0.0, m3 = 0.0;
    for (auto c : counts) {
        const double d = static_cast<double>(c) - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if (m2 <= 0.0) return 0.0;
    return m3 / std::pow(m2, 1.5);
}

EvalReport evaluate(const MappingModel& model, const LabeledDataset& unseen, const PrototypeTable& table,
                    const std::vector<int>& ks, const EvalOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    unseen.validate();
    if (unseen.size() == 0) throw DataError("evaluate: unseen dataset is empty");
    if (unseen.visual_dim() != model.visual_dim()) throw DimensionError("evaluate: data does not match model");
    for (int k : ks) {
        if (k < 1) throw ConfigError("evaluate: k must be >= 1");
    }
    const Candidates cand = prepare(model, table, opts.space);
    std::map<ClassId, std::size_t> position;
    for (std::size_t j = 0; j < cand.ids.size(); ++j) position[cand.ids[j]] = j;
    for (auto l : unseen.labels) {
        if (!position.contains(l)) {
            throw DataError("evaluate: label " + std::to_string(l) + " has no unseen prototype");
        }
    }

    const std::size_t m = unseen.size();
    std::vector<InstanceOutcome> outcomes(m);
    const auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto ranked = rank(model, unseen.features.eigen().col(static_cast<Eigen::Index>(i)), cand, opts.space);
            if (ranked.empty()) {
                outcomes[i] = {SIZE_MAX, 0, true};
                continue;
            }
            const auto hit = std::find_if(ranked.begin(), ranked.end(),
                                          [&](const RankedClass& r) { return r.id == unseen.labels[i]; });
            outcomes[i] = {static_cast<std::size_t>(hit - ranked.begin()), position.at(ranked.front().id), false};
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(m)));
    if (threads == 1) {
        work(0, m);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (m + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = t * chunk, e = std::min(m, b + chunk);
            if (b < e) pool.emplace_back(work, b, e);
        }
    }

    EvalReport report;
    report.instance_count = m;
    std::vector<std::size_t> hub_counts(cand.ids.size(), 0);
    std::map<ClassId, std::pair<std::size_t, std::size_t>> per_class;  // (hits, total)
    for (std::size_t i = 0; i < m; ++i) {
        const auto& o = outcomes[i];
        auto& pc = per_class[unseen.labels[i]];
        ++pc.second;
        if (o.degenerate) {
            ++report.degenerate_count;
            continue;
        }
        ++hub_counts[o.top];
        if (o.true_rank == 0) ++pc.first;
    }
    for (int k : ks) {
        std::size_t hits = 0;
        for (const auto& o : outcomes) {
            if (!o.degenerate && o.true_rank < static_cast<std::size_t>(k)) ++hits;
        }
        report.hit_at[k] = static_cast<double>(hits) / static_cast<double>(m);
    }
    for (const auto& [id, hc] : per_class) {
        report.per_class_accuracy[id] = static_cast<double>(hc.first) / static_cast<double>(hc.second);
    }
    report.hubness_skewness = hubness_skewness(hub_counts);
    report.elapsed_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return report;
}

EvalReport evaluate(const MappingModel& model, const LabeledDataset& unseen, const AdjustedPrototypes& table,
                    const std::vector<int>& ks, const EvalOptions& opts) {
    return evaluate(model, unseen, table.table, ks, opts);
}

std::map<int, double> sweep_k(const LabeledDataset& seen, const LabeledDataset& unseen, const PrototypeTable& table,
                              const HyperParams& hp, const std::vector<int>& k_values, const EvalOptions& opts) {
    const auto seen_classes = table.seen_ids().size();
    std::map<int, double> out;
    for (int k : k_values) {
        if (k < 1 || static_cast<std::size_t>(k) > seen_classes) {
            throw ConfigError("sweep_k: k = " + std::to_string(k) + " outside [1, " + std::to_string(seen_classes) +
                              "]");
        }
        HyperParams run = hp;
        run.k = k;
        const TrainResult trained = train(seen, table, run);
        out[k] = evaluate(trained.model, unseen, trained.prototypes, {1}, opts).hit_at.at(1);
    }
    return out;
}

}  // namespace zsr
