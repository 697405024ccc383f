#include "zsr/trainer.hpp"

#include "zsr/errors.hpp"

#include <algorithm>
#include <chrono>

namespace zsr {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

double displacement(const PrototypeTable& before, const PrototypeTable& after, Partition which) {
    double sq = 0.0;
    for (std::size_t c = 0; c < before.size(); ++c) {
        if (before.partition()[c] != which) continue;
        const auto col = static_cast<Eigen::Index>(c);
        sq += (after.vectors().eigen().col(col) - before.vectors().eigen().col(col)).squaredNorm();
    }
    return std::sqrt(sq);
}

}  // namespace

TrainResult train(const LabeledDataset& seen, const PrototypeTable& table, const HyperParams& hp) {
    hp.validate();
    seen.validate();
    if (seen.size() == 0) throw DataError("train: seen dataset is empty");
    for (auto l : seen.labels) {
        if (table.partition_of(l) != Partition::Seen) {
            throw DataError("train: instance label " + std::to_string(l) + " is not a seen class");
        }
    }

    const VisualGram gram = visual_gram(seen.features);

    HyperParams initial = hp;
    initial.alpha = 0.0;
    const FeatureMatrix original_protos = expand_per_instance(table, seen.labels);

    TrainResult result;
    try {
        result.model = solve_weights(seen, original_protos, original_protos, initial, gram);
    } catch (const SolverError& e) {
        throw SolverError(std::string("initial solve: ") + e.what());
    }
    result.prototypes.table = table;

    for (int it = 1; it <= hp.iterations; ++it) {
        const auto start = Clock::now();
        try {
            AdjustedPrototypes seen_adj = adjust_seen(table, result.model, seen, hp);
            AdjustedPrototypes unseen_adj = hp.unseen_uses_adjusted_seen
                                                ? adjust_unseen(seen_adj.table, hp)
                                                : adjust_unseen(seen_adj.table, table, hp);
            unseen_adj.provenance.merge(seen_adj.provenance);

            const FeatureMatrix centroids = class_centroids(result.model, seen);
            const FeatureMatrix protos = expand_per_instance(unseen_adj.table, seen.labels);
            MappingModel next = solve_weights(seen, protos, centroids, hp, gram);

            IterationRecord rec;
            rec.iteration = it;
            rec.objective = objective(next, seen, protos, centroids, hp);
            const double w_norm = frobenius_norm(next.weights);
            const double dw = (next.weights.eigen() - result.model.weights.eigen()).norm();
            rec.weight_change = w_norm > 0.0 ? dw / w_norm : dw;
            rec.seen_displacement = displacement(result.prototypes.table, unseen_adj.table, Partition::Seen);
            rec.unseen_displacement = displacement(result.prototypes.table, unseen_adj.table, Partition::Unseen);

            result.model = std::move(next);
            result.prototypes = std::move(unseen_adj);
            rec.elapsed_ms = ms_since(start);
            result.trace.records.push_back(rec);
            if (!std::isfinite(rec.objective)) throw SolverError("objective is not finite");
            if (rec.weight_change < hp.tol) break;
        } catch (const SolverError& e) {
            throw SolverError("iteration " + std::to_string(it) + ": " + e.what());
        }
    }
    return result;
}

BenchmarkSummary benchmark_training(const LabeledDataset& seen, const PrototypeTable& table, const HyperParams& hp,
                                    int repeats) {
    if (repeats < 1) throw ConfigError("benchmark: repeats must be >= 1");
    BenchmarkSummary out;
    for (int r = 0; r < repeats; ++r) {
        const auto start = Clock::now();
        const TrainResult res = train(seen, table, hp);
        out.samples_ms.push_back(ms_since(start));
        out.iterations_run = res.trace.records.size();
        out.final_objective = res.trace.records.empty() ? 0.0 : res.trace.records.back().objective;
        out.weight_norm = frobenius_norm(res.model.weights);
    }
    auto sorted = out.samples_ms;
    std::sort(sorted.begin(), sorted.end());
    const auto n = sorted.size();
    out.median_ms = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    out.max_ms = sorted.back();
    return out;
}

BenchmarkSummary benchmark_training(const SynthSpec& spec, const HyperParams& hp, int repeats) {
    const SynthData synth = synthesize(spec);
    const SplitData parts = split(synth.data, synth.prototypes);
    return benchmark_training(parts.seen, synth.prototypes, hp, repeats);
}

}  // namespace zsr
