#include "zsr/dataset.hpp"

#include "zsr/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

namespace zsr {

namespace {

constexpr std::array<char, 4> kMagic = {'Z', 'S', 'R', 'M'};
constexpr std::size_t kHeaderBytes = 12;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

std::uint32_t read_u32(const std::string& bytes, std::size_t offset) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
    }
    return v;
}

void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f64(std::string& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

double read_f64(const std::string& bytes, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
        bits = (bits << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
    }
    return std::bit_cast<double>(bits);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::string location(const std::string& origin, std::size_t line) {
    return origin + ":" + std::to_string(line + 1);
}

std::vector<double> unit_gaussian(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = normal(rng);
    return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// LabeledDataset / PrototypeTable

void LabeledDataset::validate() const {
    if (labels.size() != features.cols()) {
        throw DataError("dataset has " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(features.cols()) + " feature columns");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count) {
            throw DataError("label " + std::to_string(labels[i]) + " of instance " + std::to_string(i) +
                            " outside [0, " + std::to_string(class_count) + ")");
        }
    }
}

std::vector<std::size_t> LabeledDataset::instances_of(ClassId id) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == id) out.push_back(i);
    }
    return out;
}

PrototypeTable::PrototypeTable(FeatureMatrix vectors, std::vector<ClassId> ids, std::vector<Partition> partition)
    : vectors_(std::move(vectors)), ids_(std::move(ids)), partition_(std::move(partition)) {
    if (ids_.size() != vectors_.cols() || partition_.size() != vectors_.cols()) {
        throw DataError("prototype table: " + std::to_string(vectors_.cols()) + " prototypes, " +
                        std::to_string(ids_.size()) + " ids, " + std::to_string(partition_.size()) +
                        " partition tags");
    }
    std::unordered_set<ClassId> unique;
    for (std::size_t c = 0; c < ids_.size(); ++c) {
        if (ids_[c] < 0) throw DataError("prototype table: negative class id " + std::to_string(ids_[c]));
        if (!unique.insert(ids_[c]).second) {
            throw DataError("prototype table: class " + std::to_string(ids_[c]) + " listed twice");
        }
        if (vectors_.eigen().col(static_cast<Eigen::Index>(c)).squaredNorm() == 0.0) {
            throw DataError("prototype table: class " + std::to_string(ids_[c]) + " has a zero prototype");
        }
    }
}

std::optional<std::size_t> PrototypeTable::index_of(ClassId id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

std::size_t PrototypeTable::require_index(ClassId id) const {
    const auto idx = index_of(id);
    if (!idx) throw DataError("class " + std::to_string(id) + " has no prototype");
    return *idx;
}

std::vector<double> PrototypeTable::prototype(ClassId id) const {
    return vectors_.column(require_index(id));
}

Partition PrototypeTable::partition_of(ClassId id) const {
    return partition_[require_index(id)];
}

std::vector<ClassId> PrototypeTable::seen_ids() const {
    std::vector<ClassId> out;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (partition_[i] == Partition::Seen) out.push_back(ids_[i]);
    }
    return out;
}

std::vector<ClassId> PrototypeTable::unseen_ids() const {
    std::vector<ClassId> out;
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (partition_[i] == Partition::Unseen) out.push_back(ids_[i]);
    }
    return out;
}

PrototypeTable PrototypeTable::with_prototype(ClassId id, std::span<const double> v) const {
    FeatureMatrix vectors = vectors_;
    vectors.set_column(require_index(id), v);
    return PrototypeTable(std::move(vectors), ids_, partition_);
}

// ---------------------------------------------------------------------------
// Synthesis and splitting

void SynthSpec::validate() const {
    if (visual_dim == 0 || semantic_dim == 0) throw ConfigError("synth: dimensions must be positive");
    if (seen_count == 0 || unseen_count == 0) throw ConfigError("synth: class counts must be positive");
    if (per_class == 0) throw ConfigError("synth: per_class must be positive");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ConfigError("synth: noise_sigma must be >= 0");
    if (!(shift_sigma >= 0.0) || !std::isfinite(shift_sigma)) throw ConfigError("synth: shift_sigma must be >= 0");
}

SynthData synthesize(const SynthSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const std::size_t n_classes = spec.seen_count + spec.unseen_count;
    const std::size_t dv = spec.visual_dim;
    const std::size_t ds = spec.semantic_dim;

    // Prototypes: normalised Gaussian draws, i.e. uniform on the sphere.
    FeatureMatrix protos(ds, n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::vector<double> v;
        double norm = 0.0;
        do {
            v = unit_gaussian(rng, ds);
            norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
        } while (norm == 0.0);
        for (auto& x : v) x /= norm;
        protos.set_column(c, v);
    }

    FeatureMatrix g(dv, ds, unit_gaussian(rng, dv * ds));
    FeatureMatrix g_shifted = g;
    {
        const auto delta = unit_gaussian(rng, dv * ds);
        for (std::size_t r = 0; r < dv; ++r) {
            for (std::size_t c = 0; c < ds; ++c) g_shifted(r, c) += spec.shift_sigma * delta[r * ds + c];
        }
    }

    const FeatureMatrix seen_images = matmul(g, protos);
    const FeatureMatrix unseen_images = matmul(g_shifted, protos);

    const std::size_t m = n_classes * spec.per_class;
    FeatureMatrix features(dv, m);
    std::vector<ClassId> labels(m);
    std::vector<ClassId> ids(n_classes);
    std::vector<Partition> partition(n_classes);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t col = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        ids[c] = static_cast<ClassId>(c);
        const bool seen = c < spec.seen_count;
        partition[c] = seen ? Partition::Seen : Partition::Unseen;
        const FeatureMatrix& images = seen ? seen_images : unseen_images;
        for (std::size_t j = 0; j < spec.per_class; ++j, ++col) {
            labels[col] = static_cast<ClassId>(c);
            for (std::size_t r = 0; r < dv; ++r) {
                features(r, col) = images(r, c) + spec.noise_sigma * normal(rng);
            }
        }
    }

    SynthData out;
    out.prototypes = PrototypeTable(std::move(protos), std::move(ids), std::move(partition));
    out.data = LabeledDataset{std::move(features), std::move(labels), n_classes};
    out.ground_truth_map = std::move(g);
    return out;
}

SplitData split(const LabeledDataset& dataset, const PrototypeTable& prototypes) {
    dataset.validate();
    std::vector<std::size_t> seen_cols, unseen_cols;
    for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
        const auto idx = prototypes.index_of(dataset.labels[i]);
        if (!idx) {
            throw DataError("instance " + std::to_string(i) + " has label " + std::to_string(dataset.labels[i]) +
                            " without a prototype");
        }
        (prototypes.partition()[*idx] == Partition::Seen ? seen_cols : unseen_cols).push_back(i);
    }
    if (seen_cols.empty()) throw DataError("split: no seen-class instances to train on");

    auto take = [&](const std::vector<std::size_t>& cols) {
        LabeledDataset part;
        part.class_count = dataset.class_count;
        part.features = FeatureMatrix(dataset.features.rows(), cols.size());
        part.labels.reserve(cols.size());
        for (std::size_t j = 0; j < cols.size(); ++j) {
            part.features.eigen().col(static_cast<Eigen::Index>(j)) =
                dataset.features.eigen().col(static_cast<Eigen::Index>(cols[j]));
            part.labels.push_back(dataset.labels[cols[j]]);
        }
        return part;
    };
    return SplitData{take(seen_cols), take(unseen_cols)};
}

FeatureMatrix normalize_columns(const FeatureMatrix& m) {
    FeatureMatrix out = m;
    for (Eigen::Index c = 0; c < out.eigen().cols(); ++c) {
        const double n = out.eigen().col(c).norm();
        if (n > 0.0) out.eigen().col(c) /= n;
    }
    return out;
}

PrototypeTable normalize_prototypes(const PrototypeTable& t) {
    return PrototypeTable(normalize_columns(t.vectors()), t.ids(), t.partition());
}

LabeledDataset make_dataset(FeatureMatrix features, std::vector<ClassId> labels, const PrototypeTable& prototypes) {
    ClassId max_id = -1;
    for (auto l : labels) max_id = std::max(max_id, l);
    for (auto id : prototypes.ids()) max_id = std::max(max_id, id);
    LabeledDataset ds{std::move(features), std::move(labels), static_cast<std::size_t>(max_id + 1)};
    ds.validate();
    return ds;
}

// ---------------------------------------------------------------------------
// Serialization

MatrixFormat format_for_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv" || ext == ".txt") return MatrixFormat::Csv;
    return MatrixFormat::Binary;
}

std::string serialize_binary_matrix(const FeatureMatrix& m) {
    if (m.rows() > UINT32_MAX || m.cols() > UINT32_MAX) throw DimensionError("matrix too large for binary format");
    std::string out(kMagic.begin(), kMagic.end());
    out.reserve(kHeaderBytes + 8 * m.rows() * m.cols());
    append_u32(out, static_cast<std::uint32_t>(m.rows()));
    append_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double d : m.data()) append_f64(out, d);
    return out;
}

FeatureMatrix parse_binary_matrix(const std::string& bytes, const std::string& origin) {
    if (bytes.size() < kHeaderBytes || !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw DataError(origin + ": bad magic (expected \"ZSRM\")");
    }
    const std::uint64_t rows = read_u32(bytes, 4);
    const std::uint64_t cols = read_u32(bytes, 8);
    const std::uint64_t expected = kHeaderBytes + 8 * rows * cols;
    if (bytes.size() != expected) {
        throw DataError(origin + ": header declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " (" + std::to_string(expected) + " bytes), file has " + std::to_string(bytes.size()));
    }
    std::vector<double> values(rows * cols);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = read_f64(bytes, kHeaderBytes + 8 * i);
        if (!std::isfinite(values[i])) {
            throw DataError(origin + ": non-finite entry at row " + std::to_string(i / cols) + ", col " +
                            std::to_string(i % cols));
        }
    }
    return FeatureMatrix(rows, cols, std::move(values));
}

std::string serialize_csv_matrix(const FeatureMatrix& m) {
    std::string out;
    std::array<char, 32> buf{};
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c > 0) out.push_back(',');
            const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), m(r, c));
            out.append(buf.data(), res.ptr);
        }
        out.push_back('\n');
    }
    return out;
}

FeatureMatrix parse_csv_matrix(const std::string& text, const std::string& origin) {
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    const auto lines = lines_of(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto line = trim(lines[ln]);
        if (line.empty()) continue;
        std::size_t count = 0;
        std::size_t start = 0;
        while (true) {
            auto end = line.find(',', start);
            const auto field = trim(line.substr(start, end == std::string_view::npos ? line.size() - start : end - start));
            double v = 0.0;
            const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
                throw DataError(location(origin, ln) + ": field " + std::to_string(count + 1) + " is not a number: \"" +
                                std::string(field) + "\"");
            }
            if (!std::isfinite(v)) {
                throw DataError(location(origin, ln) + ": field " + std::to_string(count + 1) + " is non-finite");
            }
            values.push_back(v);
            ++count;
            if (end == std::string_view::npos) break;
            start = end + 1;
        }
        if (rows == 0) {
            cols = count;
        } else if (count != cols) {
            throw DataError(location(origin, ln) + ": row has " + std::to_string(count) + " fields, expected " +
                            std::to_string(cols));
        }
        ++rows;
    }
    return FeatureMatrix(rows, cols, std::move(values));
}

FeatureMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    const auto bytes = read_file(path);
    return format == MatrixFormat::Binary ? parse_binary_matrix(bytes, path.string())
                                          : parse_csv_matrix(bytes, path.string());
}

FeatureMatrix load_matrix(const std::filesystem::path& path) {
    return load_matrix(path, format_for_path(path));
}

void save_matrix(const std::filesystem::path& path, const FeatureMatrix& m, MatrixFormat format) {
    write_file(path, format == MatrixFormat::Binary ? serialize_binary_matrix(m) : serialize_csv_matrix(m));
}

void save_matrix(const std::filesystem::path& path, const FeatureMatrix& m) {
    save_matrix(path, m, format_for_path(path));
}

std::vector<ClassId> load_labels(const std::filesystem::path& path) {
    const auto text = read_file(path);
    std::vector<ClassId> labels;
    const auto lines = lines_of(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto line = trim(lines[ln]);
        if (line.empty()) continue;
        ClassId v = 0;
        const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
        if (res.ec != std::errc() || res.ptr != line.data() + line.size() || v < 0) {
            throw DataError(location(path.string(), ln) + ": bad label \"" + std::string(line) + "\"");
        }
        labels.push_back(v);
    }
    return labels;
}

void save_labels(const std::filesystem::path& path, const std::vector<ClassId>& labels) {
    std::string out;
    for (auto l : labels) {
        out += std::to_string(l);
        out.push_back('\n');
    }
    write_file(path, out);
}

PrototypeTable load_prototypes(const std::filesystem::path& matrix_path, const std::filesystem::path& partition_path) {
    FeatureMatrix vectors = load_matrix(matrix_path);
    const auto text = read_file(partition_path);
    std::vector<ClassId> ids;
    std::vector<Partition> partition;
    const auto lines = lines_of(text);
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto line = trim(lines[ln]);
        if (line.empty()) continue;
        std::istringstream ss{std::string(line)};
        ClassId id = -1;
        std::string tag, extra;
        if (!(ss >> id >> tag) || (ss >> extra) || id < 0 || (tag != "S" && tag != "U")) {
            throw DataError(location(partition_path.string(), ln) + ": expected \"<id> <S|U>\", got \"" +
                            std::string(line) + "\"");
        }
        ids.push_back(id);
        partition.push_back(tag == "S" ? Partition::Seen : Partition::Unseen);
    }
    if (ids.size() != vectors.cols()) {
        throw DataError(partition_path.string() + ": " + std::to_string(ids.size()) + " entries for " +
                        std::to_string(vectors.cols()) + " prototype columns in " + matrix_path.string());
    }
    return PrototypeTable(std::move(vectors), std::move(ids), std::move(partition));
}

void save_prototypes(const std::filesystem::path& matrix_path, const std::filesystem::path& partition_path,
                     const PrototypeTable& table) {
    save_matrix(matrix_path, table.vectors());
    std::string out;
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += std::to_string(table.ids()[i]);
        out += table.partition()[i] == Partition::Seen ? " S\n" : " U\n";
    }
    write_file(partition_path, out);
}

}  // namespace zsr
