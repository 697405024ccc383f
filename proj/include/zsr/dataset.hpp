#pragma once

#include "zsr/matrix.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace zsr {

using ClassId = std::int64_t;

/// Visual features with one class label per column.
struct LabeledDataset {
    FeatureMatrix features;       // d_v x m
    std::vector<ClassId> labels;  // length m
    std::size_t class_count = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t visual_dim() const { return features.rows(); }

    /// Throws DataError when labels and features disagree or a label is
    /// out of range.
    void validate() const;

    /// Column indices of every instance carrying `id`, in column order.
    std::vector<std::size_t> instances_of(ClassId id) const;
};

enum class Partition : std::uint8_t { Seen, Unseen };

/// One semantic prototype per class, each tagged seen or unseen.
class PrototypeTable {
public:
    PrototypeTable() = default;
    /// `vectors` is d_s x n; column i belongs to ids[i]. Throws DataError on
    /// duplicate ids, zero prototypes or length mismatches.
    PrototypeTable(FeatureMatrix vectors, std::vector<ClassId> ids, std::vector<Partition> partition);

    std::size_t semantic_dim() const { return vectors_.rows(); }
    std::size_t size() const { return ids_.size(); }

    const FeatureMatrix& vectors() const { return vectors_; }
    const std::vector<ClassId>& ids() const { return ids_; }
    const std::vector<Partition>& partition() const { return partition_; }

    std::optional<std::size_t> index_of(ClassId id) const;
    bool contains(ClassId id) const { return index_of(id).has_value(); }
    /// Throws DataError for an unknown id.
    std::size_t require_index(ClassId id) const;

    std::vector<double> prototype(ClassId id) const;
    Partition partition_of(ClassId id) const;

    /// Ids in table order.
    std::vector<ClassId> seen_ids() const;
    std::vector<ClassId> unseen_ids() const;

    /// Copy with the prototype of `id` replaced. Rejects the zero vector.
    PrototypeTable with_prototype(ClassId id, std::span<const double> v) const;

    friend bool operator==(const PrototypeTable&, const PrototypeTable&) = default;

private:
    FeatureMatrix vectors_;
    std::vector<ClassId> ids_;
    std::vector<Partition> partition_;
};

/// Parameters of the synthetic generator: prototypes on the unit sphere,
/// instances x = G p + noise, unseen classes drawn through G + Δ.
struct SynthSpec {
    std::size_t visual_dim = 50;
    std::size_t semantic_dim = 20;
    std::size_t seen_count = 40;
    std::size_t unseen_count = 10;
    std::size_t per_class = 25;
    double noise_sigma = 0.0;
    double shift_sigma = 0.0;
    std::uint64_t seed = 1;

    /// Throws ConfigError for non-positive counts or negative sigmas.
    void validate() const;
    /// True when d_s > d_v (allowed, but the mapping is then underdetermined).
    bool semantic_exceeds_visual() const { return semantic_dim > visual_dim; }
};

struct SynthData {
    LabeledDataset data;
    PrototypeTable prototypes;
    FeatureMatrix ground_truth_map;  // G, d_v x d_s
};

SynthData synthesize(const SynthSpec& spec);

/// Seen/unseen partition of a dataset. Labels keep their original ids.
struct SplitData {
    LabeledDataset seen;
    LabeledDataset unseen;
};

/// Throws DataError when a label has no prototype or no seen instance exists.
SplitData split(const LabeledDataset& dataset, const PrototypeTable& prototypes);

/// Scales every nonzero column to unit L2 norm.
FeatureMatrix normalize_columns(const FeatureMatrix& m);
PrototypeTable normalize_prototypes(const PrototypeTable& t);

// ---------------------------------------------------------------------------
// File formats.
//
// Binary matrix: "ZSRM", u32 LE rows, u32 LE cols, rows*cols f64 LE row-major.
// CSV matrix: one row per line, comma-separated, no header.
// Labels: one base-10 integer per line.
// Partition sidecar: "<id> <S|U>" per line, line i describes prototype column i.
// ---------------------------------------------------------------------------

enum class MatrixFormat { Binary, Csv };

/// Binary for ".zsrm"/".bin", CSV for ".csv"/".txt"; binary otherwise.
MatrixFormat format_for_path(const std::filesystem::path& path);

FeatureMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
FeatureMatrix load_matrix(const std::filesystem::path& path);
void save_matrix(const std::filesystem::path& path, const FeatureMatrix& m, MatrixFormat format);
void save_matrix(const std::filesystem::path& path, const FeatureMatrix& m);

FeatureMatrix parse_binary_matrix(const std::string& bytes, const std::string& origin = "<memory>");
std::string serialize_binary_matrix(const FeatureMatrix& m);
FeatureMatrix parse_csv_matrix(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_csv_matrix(const FeatureMatrix& m);

std::vector<ClassId> load_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<ClassId>& labels);

PrototypeTable load_prototypes(const std::filesystem::path& matrix_path,
                               const std::filesystem::path& partition_path);
void save_prototypes(const std::filesystem::path& matrix_path, const std::filesystem::path& partition_path,
                     const PrototypeTable& table);

/// Builds a dataset whose class_count is one past the largest label seen
/// in either the labels or the prototype ids.
LabeledDataset make_dataset(FeatureMatrix features, std::vector<ClassId> labels,
                            const PrototypeTable& prototypes);

}  // namespace zsr
