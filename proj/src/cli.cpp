#include "zsr/cli.hpp"

#include "zsr/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace zsr::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct LoadedData {
    LabeledDataset all;
    PrototypeTable prototypes;
    SplitData parts;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
}

void prepare_out_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output directory " + dir.string() + " is not writable");
}

SynthSpec synth_spec(const RunConfig& cfg) {
    SynthSpec s = cfg.synth;
    s.seed = cfg.seed;
    return s;
}

LoadedData load_data(const RunConfig& cfg) {
    LoadedData d;
    if (cfg.use_synth) {
        SynthData s = synthesize(synth_spec(cfg));
        d.all = std::move(s.data);
        d.prototypes = std::move(s.prototypes);
    } else {
        d.prototypes = load_prototypes(*cfg.prototypes, *cfg.partition);
        d.all = make_dataset(load_matrix(*cfg.features), load_labels(*cfg.labels), d.prototypes);
    }
    if (cfg.normalize) {
        d.all.features = normalize_columns(d.all.features);
        d.prototypes = normalize_prototypes(d.prototypes);
    }
    if (d.prototypes.semantic_dim() == 0) throw DataError("prototype matrix has no rows");
    d.parts = split(d.all, d.prototypes);
    return d;
}

template <class T>
std::string kv(const std::string& key, const T& value) {
    std::ostringstream ss;
    ss << key << '=' << value << '\n';
    return ss.str();
}

}  // namespace

std::string format_double(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

void RunConfig::validate() const {
    hp.validate();
    if (threads == 0) throw ConfigError("--threads must be >= 1");
    if (repeats < 1) throw ConfigError("--repeats must be >= 1");
    for (int k : report_ks) {
        if (k < 1) throw ConfigError("--ks entries must be >= 1");
    }
    if (use_synth) {
        synth_spec(*this).validate();
        return;
    }
    const std::array<std::pair<const std::optional<fs::path>*, const char*>, 4> inputs{{
        {&features, "--features"},
        {&labels, "--labels"},
        {&prototypes, "--prototypes"},
        {&partition, "--partition"},
    }};
    for (auto [path, flag] : inputs) {
        if (!*path) throw ConfigError(std::string(flag) + " is required unless --synth is given");
    }
    for (auto [path, flag] : inputs) {
        if (!fs::exists(**path)) throw DataError(std::string(flag) + " file not found: " + (*path)->string());
    }
}

std::string report_to_text(const EvalReport& r) {
    std::string s;
    s += kv("instance_count", r.instance_count);
    for (const auto& [k, acc] : r.hit_at) s += kv("hit_at_" + std::to_string(k), format_double(acc));
    s += kv("hubness_skewness", format_double(r.hubness_skewness));
    s += kv("degenerate_count", r.degenerate_count);
    for (const auto& [id, acc] : r.per_class_accuracy) {
        s += kv("per_class_accuracy." + std::to_string(id), format_double(acc));
    }
    s += kv("elapsed_ms", format_double(r.elapsed_ms));
    return s;
}

std::string report_to_json(const EvalReport& r) {
    json j;
    j["instance_count"] = r.instance_count;
    j["hit_at"] = json::object();
    for (const auto& [k, acc] : r.hit_at) j["hit_at"][std::to_string(k)] = acc;
    j["per_class_accuracy"] = json::object();
    for (const auto& [id, acc] : r.per_class_accuracy) j["per_class_accuracy"][std::to_string(id)] = acc;
    j["hubness_skewness"] = r.hubness_skewness;
    j["degenerate_count"] = r.degenerate_count;
    j["elapsed_ms"] = r.elapsed_ms;
    return j.dump(2) + "\n";
}

std::string trace_to_jsonl(const TrainingTrace& trace) {
    std::string s;
    for (const auto& rec : trace.records) {
        json j{{"iteration", rec.iteration},
               {"objective", rec.objective},
               {"weight_change", rec.weight_change},
               {"seen_displacement", rec.seen_displacement},
               {"unseen_displacement", rec.unseen_displacement},
               {"elapsed_ms", rec.elapsed_ms}};
        s += j.dump() + "\n";
    }
    return s;
}

std::string sweep_to_csv(const std::map<int, double>& sweep) {
    std::string s = "k,hit_at_1\n";
    for (const auto& [k, acc] : sweep) s += std::to_string(k) + "," + format_double(acc) + "\n";
    return s;
}

std::string sweep_to_json(const std::map<int, double>& sweep) {
    json rows = json::array();
    for (const auto& [k, acc] : sweep) rows.push_back({{"k", k}, {"hit_at_1", acc}});
    return json{{"sweep_k", rows}}.dump(2) + "\n";
}

std::string bench_to_text(const BenchmarkSummary& b) {
    std::string s;
    s += kv("repeats", b.samples_ms.size());
    s += kv("median_ms", format_double(b.median_ms));
    s += kv("max_ms", format_double(b.max_ms));
    s += kv("iterations_run", b.iterations_run);
    s += kv("final_objective", format_double(b.final_objective));
    s += kv("weight_norm", format_double(b.weight_norm));
    return s;
}

std::string bench_to_json(const BenchmarkSummary& b) {
    json j{{"repeats", b.samples_ms.size()},
           {"samples_ms", b.samples_ms},
           {"median_ms", b.median_ms},
           {"max_ms", b.max_ms},
           {"iterations_run", b.iterations_run},
           {"final_objective", b.final_objective},
           {"weight_norm", b.weight_norm}};
    return j.dump(2) + "\n";
}

namespace {

int cmd_synth(const RunConfig& cfg, std::ostream& out) {
    prepare_out_dir(cfg.out);
    const SynthData s = synthesize(synth_spec(cfg));
    LabeledDataset data = s.data;
    PrototypeTable protos = s.prototypes;
    if (cfg.normalize) {
        data.features = normalize_columns(data.features);
        protos = normalize_prototypes(protos);
    }
    save_matrix(cfg.out / "features.zsrm", data.features);
    save_labels(cfg.out / "labels.txt", data.labels);
    save_prototypes(cfg.out / "prototypes.zsrm", cfg.out / "partition.txt", protos);
    save_matrix(cfg.out / "ground_truth.zsrm", s.ground_truth_map);
    out << "wrote " << data.size() << " instances, " << protos.size() << " classes to " << cfg.out.string() << "\n";
    return kOk;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
    prepare_out_dir(cfg.out);
    const LoadedData d = load_data(cfg);
    const TrainResult res = train(d.parts.seen, d.prototypes, cfg.hp);

    save_matrix(cfg.out / "model.zsrm", res.model.weights);
    save_prototypes(cfg.out / "prototypes_adjusted.zsrm", cfg.out / "partition_adjusted.txt", res.prototypes.table);
    write_text(cfg.out / "trace.jsonl", trace_to_jsonl(res.trace));
    out << "trained " << res.trace.records.size() << " iteration(s) on " << d.parts.seen.size()
        << " seen instances\n";

    if (d.parts.unseen.size() == 0) {
        out << "no unseen instances; skipping evaluation\n";
        return kOk;
    }
    const EvalReport report =
        evaluate(res.model, d.parts.unseen, res.prototypes, cfg.report_ks, {cfg.space, cfg.threads});
    write_text(cfg.out / "report.txt", report_to_text(report));
    write_text(cfg.out / "report.json", report_to_json(report));
    out << report_to_text(report);
    return kOk;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
    if (!cfg.model) throw ConfigError("eval requires --model");
    if (!fs::exists(*cfg.model)) throw DataError("--model file not found: " + cfg.model->string());
    const LoadedData d = load_data(cfg);
    const MappingModel model{load_matrix(*cfg.model)};
    if (d.parts.unseen.size() == 0) throw DataError("eval: no unseen instances in the data");
    const EvalReport report = evaluate(model, d.parts.unseen, d.prototypes, cfg.report_ks, {cfg.space, cfg.threads});
    prepare_out_dir(cfg.out);
    write_text(cfg.out / "report.txt", report_to_text(report));
    write_text(cfg.out / "report.json", report_to_json(report));
    out << report_to_text(report);
    return kOk;
}

int cmd_sweep_k(const RunConfig& cfg, std::ostream& out) {
    prepare_out_dir(cfg.out);
    const LoadedData d = load_data(cfg);
    if (d.parts.unseen.size() == 0) throw DataError("sweep-k: no unseen instances in the data");
    const auto sweep = sweep_k(d.parts.seen, d.parts.unseen, d.prototypes, cfg.hp, cfg.k_list, {cfg.space, cfg.threads});
    const auto csv = sweep_to_csv(sweep);
    write_text(cfg.out / "sweep_k.csv", csv);
    write_text(cfg.out / "sweep_k.json", sweep_to_json(sweep));
    out << csv;
    return kOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
    prepare_out_dir(cfg.out);
    const LoadedData d = load_data(cfg);
    const BenchmarkSummary b = benchmark_training(d.parts.seen, d.prototypes, cfg.hp, cfg.repeats);
    const auto text = bench_to_text(b);
    write_text(cfg.out / "bench.txt", text);
    write_text(cfg.out / "bench.json", bench_to_json(b));
    out << text;
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Zero-shot recognition with adaptive semantic prototype adjustment", "zsr"};
    app.set_config("--config", "", "Key=value config file; command-line flags take precedence");
    app.require_subcommand(1, 1);

    std::string features, labels, prototypes, partition, model, out_dir = cfg.out.string();
    std::string space = "semantic";
    bool original_seen = false;

    app.add_option("--features", features, "Visual feature matrix (d_v x m), .zsrm or .csv");
    app.add_option("--labels", labels, "Labels file, one class id per line");
    app.add_option("--prototypes", prototypes, "Prototype matrix (d_s x n_classes)");
    app.add_option("--partition", partition, "Partition sidecar, '<id> <S|U>' per line");
    app.add_option("--model", model, "Model weights for eval");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();

    app.add_option("--lambda1", cfg.hp.lambda1, "Seen prototype anchor weight")->capture_default_str();
    app.add_option("--gamma1", cfg.hp.gamma1, "Seen mapped-centroid weight")->capture_default_str();
    app.add_option("--lambda2", cfg.hp.lambda2, "Unseen prototype anchor weight")->capture_default_str();
    app.add_option("--gamma2", cfg.hp.gamma2, "Unseen neighbour weight")->capture_default_str();
    app.add_option("--alpha", cfg.hp.alpha, "Centroid regulariser weight")->capture_default_str();
    app.add_option("--beta", cfg.hp.beta, "Relaxed constraint weight")->capture_default_str();
    app.add_option("--k", cfg.hp.k, "Seen neighbours per unseen prototype")->capture_default_str();
    app.add_option("--iters", cfg.hp.iterations, "Alternating iterations")->capture_default_str();
    app.add_option("--tol", cfg.hp.tol, "Stop when relative weight change < tol")->capture_default_str();
    app.add_flag("--ridge-retry", cfg.hp.ridge_retry, "Retry singular solves with a small ridge on PP^T");
    app.add_flag("--unseen-original-seen", original_seen,
                 "Unseen adjustment uses original rather than adjusted seen prototypes");
    app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    app.add_flag("--normalize", cfg.normalize, "L2-normalise feature columns and prototypes");
    app.add_option("--threads", cfg.threads, "Evaluation threads")->capture_default_str();
    app.add_option("--space", space, "Comparison space")
        ->check(CLI::IsMember({"semantic", "visual"}))
        ->capture_default_str();
    app.add_option("--ks", cfg.report_ks, "Hit@k values reported by train/eval")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--k-list", cfg.k_list, "k values for sweep-k")->delimiter(',')->capture_default_str();
    app.add_option("--repeats", cfg.repeats, "Timed repeats for bench")->capture_default_str();

    app.add_flag("--synth", cfg.use_synth, "Use synthetic data instead of input files");
    app.add_option("--synth-dv", cfg.synth.visual_dim, "Synthetic visual dim")->capture_default_str();
    app.add_option("--synth-ds", cfg.synth.semantic_dim, "Synthetic semantic dim")->capture_default_str();
    app.add_option("--synth-seen", cfg.synth.seen_count, "Synthetic seen classes")->capture_default_str();
    app.add_option("--synth-unseen", cfg.synth.unseen_count, "Synthetic unseen classes")->capture_default_str();
    app.add_option("--synth-per-class", cfg.synth.per_class, "Synthetic instances per class")->capture_default_str();
    app.add_option("--synth-noise", cfg.synth.noise_sigma, "Synthetic noise sigma")->capture_default_str();
    app.add_option("--synth-shift", cfg.synth.shift_sigma, "Synthetic unseen-class shift sigma")->capture_default_str();

    auto* sub_train = app.add_subcommand("train", "Train, write model/prototypes/trace and evaluate on unseen");
    auto* sub_eval = app.add_subcommand("eval", "Evaluate a saved model on the unseen partition");
    auto* sub_sweep = app.add_subcommand("sweep-k", "Hit@1 for each k in --k-list");
    auto* sub_bench = app.add_subcommand("bench", "Time repeated training runs");
    auto* sub_synth = app.add_subcommand("synth", "Write a synthetic dataset to --out");
    for (auto* sub : {sub_train, sub_eval, sub_sweep, sub_bench, sub_synth}) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    }

    try {
        if (!features.empty()) cfg.features = features;
        if (!labels.empty()) cfg.labels = labels;
        if (!prototypes.empty()) cfg.prototypes = prototypes;
        if (!partition.empty()) cfg.partition = partition;
        if (!model.empty()) cfg.model = model;
        cfg.out = out_dir;
        cfg.hp.unseen_uses_adjusted_seen = !original_seen;
        cfg.space = space == "visual" ? PredictionSpace::Visual : PredictionSpace::Semantic;
        if (sub_synth->parsed()) cfg.use_synth = true;
        cfg.validate();

        if (sub_train->parsed()) return cmd_train(cfg, out);
        if (sub_eval->parsed()) return cmd_eval(cfg, out);
        if (sub_sweep->parsed()) return cmd_sweep_k(cfg, out);
        if (sub_bench->parsed()) return cmd_bench(cfg, out);
        return cmd_synth(cfg, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kDataError;
    } catch (const SolverError& e) {
        err << "solver error: " << e.what() << "\n";
        return kSolverError;
    }
}

}  // namespace zsr::cli
