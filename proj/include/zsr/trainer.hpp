#pragma once

#include "zsr/adjustment.hpp"
#include "zsr/dataset.hpp"
#include "zsr/mapping.hpp"

#include <vector>

namespace zsr {

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    double weight_change = 0.0;        // ‖W_t − W_{t−1}‖_F / ‖W_t‖_F
    double seen_displacement = 0.0;    // ‖ΔP_seen‖_F against the previous iterate
    double unseen_displacement = 0.0;  // ‖ΔP_unseen‖_F against the previous iterate
    double elapsed_ms = 0.0;
};

struct TrainingTrace {
    std::vector<IterationRecord> records;
};

struct TrainResult {
    MappingModel model;
    AdjustedPrototypes prototypes;
    TrainingTrace trace;
};

/// Alternating optimisation. An initial α = 0 solve against the original
/// prototypes, then per iteration: seen adjustment, unseen adjustment,
/// centroids from the current W, full re-solve. Stops after hp.iterations
/// or once the relative weight change drops below hp.tol.
///
/// Solver failures are rethrown as SolverError carrying the iteration index.
TrainResult train(const LabeledDataset& seen, const PrototypeTable& table, const HyperParams& hp);

struct BenchmarkSummary {
    std::vector<double> samples_ms;
    double median_ms = 0.0;
    double max_ms = 0.0;
    // Non-timing outputs of the last run, identical across repeats.
    double final_objective = 0.0;
    std::size_t iterations_run = 0;
    double weight_norm = 0.0;
};

/// Times `repeats` full train() calls on fixed inputs.
BenchmarkSummary benchmark_training(const LabeledDataset& seen, const PrototypeTable& table, const HyperParams& hp,
                                    int repeats);
/// Synthesises the data once, then benchmarks training on its seen split.
BenchmarkSummary benchmark_training(const SynthSpec& spec, const HyperParams& hp, int repeats);

}  // namespace zsr
