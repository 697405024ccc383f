#pragma once

#include "zsr/inference.hpp"
#include "zsr/trainer.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace zsr::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kDataError = 2,
    kSolverError = 3,
};

struct RunConfig {
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> labels;
    std::optional<std::filesystem::path> prototypes;
    std::optional<std::filesystem::path> partition;
    std::optional<std::filesystem::path> model;  // eval only
    std::filesystem::path out = "zsr_out";

    HyperParams hp;
    bool normalize = false;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    PredictionSpace space = PredictionSpace::Semantic;
    std::vector<int> report_ks = {1, 5};

    bool use_synth = false;
    SynthSpec synth;

    std::vector<int> k_list = {1, 5, 10};  // sweep-k
    int repeats = 3;                        // bench

    /// Throws ConfigError for bad hyperparameters or missing inputs and
    /// DataError when a referenced file does not exist.
    void validate() const;
};

/// Entry point shared by the executable and the tests. `argv[0]` is the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string report_to_text(const EvalReport& report);
std::string report_to_json(const EvalReport& report);
std::string trace_to_jsonl(const TrainingTrace& trace);
std::string sweep_to_csv(const std::map<int, double>& sweep);
std::string sweep_to_json(const std::map<int, double>& sweep);
std::string bench_to_text(const BenchmarkSummary& bench);
std::string bench_to_json(const BenchmarkSummary& bench);

}  // namespace zsr::cli
