#include "zsr/mapping.hpp"

#include "zsr/errors.hpp"

#include <cmath>
#include <map>
#include <string>

namespace zsr {

namespace {

void check_conforming(const MappingModel& model, const LabeledDataset& data, const FeatureMatrix& protos,
                      const FeatureMatrix& centroids) {
    const auto m = data.features.cols();
    if (model.visual_dim() != data.visual_dim()) {
        throw DimensionError("model expects visual dim " + std::to_string(model.visual_dim()) + ", data has " +
                             std::to_string(data.visual_dim()));
    }
    if (protos.rows() != model.semantic_dim() || protos.cols() != m) {
        throw DimensionError("per-instance prototypes must be " + std::to_string(model.semantic_dim()) + "x" +
                             std::to_string(m));
    }
    if (centroids.rows() != protos.rows() || centroids.cols() != m) {
        throw DimensionError("centroids must match per-instance prototype shape");
    }
}

void check_finite_param(double v, const char* name) {
    if (!std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite");
}

}  // namespace

void HyperParams::validate() const {
    for (auto [v, name] : {std::pair{lambda1, "lambda1"}, {gamma1, "gamma1"}, {lambda2, "lambda2"},
                           {gamma2, "gamma2"}, {alpha, "alpha"}, {beta, "beta"}, {tol, "tol"},
                           {pivot_floor, "pivot_floor"}}) {
        check_finite_param(v, name);
        if (v < 0.0) throw ConfigError(std::string(name) + " must be >= 0");
    }
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (k < 1) throw ConfigError("k must be >= 1");
    if (iterations < 0) throw ConfigError("iterations must be >= 0");
}

std::vector<double> MappingModel::encode(std::span<const double> x) const {
    if (x.size() != visual_dim()) throw DimensionError("encode: vector length does not match visual dim");
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd s = weights.eigen() * xv;
    return {s.data(), s.data() + s.size()};
}

std::vector<double> MappingModel::decode(std::span<const double> s) const {
    if (s.size() != semantic_dim()) throw DimensionError("decode: vector length does not match semantic dim");
    const Eigen::Map<const Eigen::VectorXd> sv(s.data(), static_cast<Eigen::Index>(s.size()));
    const Eigen::VectorXd x = weights.eigen().transpose() * sv;
    return {x.data(), x.data() + x.size()};
}

FeatureMatrix expand_per_instance(const PrototypeTable& table, const std::vector<ClassId>& labels) {
    FeatureMatrix out(table.semantic_dim(), labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out.eigen().col(static_cast<Eigen::Index>(i)) =
            table.vectors().eigen().col(static_cast<Eigen::Index>(table.require_index(labels[i])));
    }
    return out;
}

FeatureMatrix class_centroids(const MappingModel& model, const LabeledDataset& data) {
    const FeatureMatrix mapped = matmul(model.weights, data.features);
    const auto ds = static_cast<Eigen::Index>(mapped.rows());

    std::map<ClassId, std::pair<Eigen::VectorXd, std::size_t>> sums;
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        auto [it, inserted] = sums.try_emplace(data.labels[i], Eigen::VectorXd::Zero(ds), 0);
        it->second.first += mapped.eigen().col(static_cast<Eigen::Index>(i));
        ++it->second.second;
    }
    for (auto& [id, acc] : sums) acc.first /= static_cast<double>(acc.second);

    FeatureMatrix out(mapped.rows(), mapped.cols());
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
        out.eigen().col(static_cast<Eigen::Index>(i)) = sums.at(data.labels[i]).first;
    }
    return out;
}

double objective(const MappingModel& model, const LabeledDataset& data, const FeatureMatrix& protos,
                 const FeatureMatrix& centroids, const HyperParams& hp) {
    check_conforming(model, data, protos, centroids);
    const auto& w = model.weights.eigen();
    const auto& x = data.features.eigen();
    const auto& p = protos.eigen();
    const Eigen::MatrixXd wx = w * x;
    const double reconstruction = (x - w.transpose() * p).squaredNorm();
    const double centroid = (wx - centroids.eigen()).squaredNorm();
    const double constraint = (wx - p).squaredNorm();
    return 0.5 * reconstruction + 0.5 * hp.alpha * centroid + 0.5 * hp.beta * constraint;
}

FeatureMatrix objective_gradient(const MappingModel& model, const LabeledDataset& data, const FeatureMatrix& protos,
                                 const FeatureMatrix& centroids, const HyperParams& hp) {
    check_conforming(model, data, protos, centroids);
    const auto& w = model.weights.eigen();
    const auto& x = data.features.eigen();
    const auto& p = protos.eigen();
    FeatureMatrix::Storage g = p * (p.transpose() * w) + (hp.alpha + hp.beta) * ((w * x) * x.transpose()) -
                               ((1.0 + hp.beta) * p + hp.alpha * centroids.eigen()) * x.transpose();
    return FeatureMatrix(std::move(g));
}

VisualGram visual_gram(const FeatureMatrix& features) {
    const auto& x = features.eigen();
    FeatureMatrix::Storage g(x.rows(), x.rows());
    g.setZero();
    g.selfadjointView<Eigen::Lower>().rankUpdate(x);
    g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
    VisualGram out{FeatureMatrix(std::move(g)), {}};
    out.eig = sym_eig(out.gram);
    return out;
}

namespace {

FeatureMatrix assemble_constant(const LabeledDataset& data, const FeatureMatrix& protos,
                                const FeatureMatrix& centroids, const HyperParams& hp) {
    FeatureMatrix::Storage m =
        -(((1.0 + hp.beta) * protos.eigen() + hp.alpha * centroids.eigen()) * data.features.eigen().transpose());
    return FeatureMatrix(std::move(m));
}

FeatureMatrix proto_gram(const FeatureMatrix& protos) {
    const auto& p = protos.eigen();
    FeatureMatrix::Storage l(p.rows(), p.rows());
    l.setZero();
    l.selfadjointView<Eigen::Lower>().rankUpdate(p);
    l.triangularView<Eigen::StrictlyUpper>() = l.transpose();
    return FeatureMatrix(std::move(l));
}

void check_inputs(const LabeledDataset& data, const FeatureMatrix& protos, const FeatureMatrix& centroids) {
    const auto m = data.features.cols();
    if (protos.cols() != m || centroids.cols() != m || centroids.rows() != protos.rows()) {
        throw DimensionError("solve_weights: P and O must be d_s x " + std::to_string(m));
    }
}

}  // namespace

SylvesterSystem assemble_system(const LabeledDataset& data, const FeatureMatrix& protos,
                                const FeatureMatrix& centroids, const HyperParams& hp) {
    check_inputs(data, protos, centroids);
    FeatureMatrix r = visual_gram(data.features).gram;
    r.eigen() *= hp.alpha + hp.beta;
    return SylvesterSystem{proto_gram(protos), std::move(r), assemble_constant(data, protos, centroids, hp)};
}

MappingModel solve_weights(const LabeledDataset& data, const FeatureMatrix& protos, const FeatureMatrix& centroids,
                           const HyperParams& hp) {
    return solve_weights(data, protos, centroids, hp, visual_gram(data.features));
}

MappingModel solve_weights(const LabeledDataset& data, const FeatureMatrix& protos, const FeatureMatrix& centroids,
                           const HyperParams& hp, const VisualGram& gram) {
    hp.validate();
    check_inputs(data, protos, centroids);
    if (gram.gram.rows() != data.visual_dim()) throw DimensionError("solve_weights: gram does not match data");

    const FeatureMatrix l = proto_gram(protos);
    SymEig l_eig = sym_eig(l);
    SymEig r_eig = gram.eig;
    for (auto& s : r_eig.values) s *= hp.alpha + hp.beta;
    const FeatureMatrix m = assemble_constant(data, protos, centroids, hp);

    try {
        return MappingModel{solve_sylvester(l_eig, r_eig, m, hp.pivot_floor)};
    } catch (const SolverError&) {
        if (!hp.ridge_retry) throw;
        double trace = 0.0;
        for (double v : l_eig.values) trace += v;
        const double ridge = 1e-8 * trace / static_cast<double>(l.rows());
        for (auto& v : l_eig.values) v += ridge;
        return MappingModel{solve_sylvester(l_eig, r_eig, m, hp.pivot_floor)};
    }
}

}  // namespace zsr
