#include "zsr/errors.hpp"
#include "zsr/mapping.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace zsr;
namespace oc = zsr::oracle;

namespace {

struct Instance {
    LabeledDataset data;
    FeatureMatrix protos;     // per-instance P
    FeatureMatrix centroids;  // per-instance O
    MappingModel model;
};

// Random problem with m >= d_v so that X has full row rank.
Instance random_instance(std::mt19937_64& rng, std::size_t dv, std::size_t ds, std::size_t m, std::size_t classes) {
    Instance in;
    std::vector<ClassId> labels(m);
    for (std::size_t i = 0; i < m; ++i) labels[i] = static_cast<ClassId>(i % classes);
    std::shuffle(labels.begin(), labels.end(), rng);
    in.data = LabeledDataset{oc::from_dense(oc::random_dense(rng, dv, m)), labels, classes};
    const auto table_vectors = oc::random_dense(rng, ds, classes);
    oc::Dense p(ds, std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t r = 0; r < ds; ++r) p[r][i] = table_vectors[r][static_cast<std::size_t>(labels[i])];
    in.protos = oc::from_dense(p);
    in.model = MappingModel{oc::from_dense(oc::random_dense(rng, ds, dv, 0.3))};
    in.centroids = class_centroids(in.model, in.data);
    return in;
}

HyperParams params(double alpha, double beta) {
    HyperParams hp;
    hp.alpha = alpha;
    hp.beta = beta;
    return hp;
}

double max_abs(const FeatureMatrix& a) {
    return a.empty() ? 0.0 : a.eigen().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("HyperParams validation") {
    HyperParams hp;
    CHECK_NOTHROW(hp.validate());
    CHECK(hp.lambda1 == 0.75);
    CHECK(hp.gamma1 == 0.25);
    CHECK(hp.lambda2 == 0.8);
    CHECK(hp.gamma2 == 0.2);
    hp.beta = 0.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = HyperParams{};
    hp.alpha = -1.0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = HyperParams{};
    hp.k = 0;
    CHECK_THROWS_AS(hp.validate(), ConfigError);
    hp = HyperParams{};
    hp.gamma2 = std::nan("");
    CHECK_THROWS_AS(hp.validate(), ConfigError);
}

TEST_CASE("expand_per_instance") {
    const PrototypeTable t(FeatureMatrix(2, 2, {1, 3, 2, 4}), {0, 1}, {Partition::Seen, Partition::Seen});
    SUBCASE("one class, three instances") {
        const auto p = expand_per_instance(t, {1, 1, 1});
        for (std::size_t i = 0; i < 3; ++i) CHECK(p.column(i) == std::vector<double>{3, 4});
    }
    SUBCASE("labels [0,1,0]") {
        const auto p = expand_per_instance(t, {0, 1, 0});
        CHECK(p == FeatureMatrix(2, 3, {1, 3, 1, 2, 4, 2}));
    }
    SUBCASE("random table against direct indexing") {
        std::mt19937_64 rng(8);
        const auto v = oc::from_dense(oc::random_dense(rng, 4, 6));
        std::vector<ClassId> ids = {10, 11, 12, 13, 14, 15};
        const PrototypeTable big(v, ids, std::vector<Partition>(6, Partition::Seen));
        std::uniform_int_distribution<int> pick(0, 5);
        std::vector<ClassId> labels(30);
        for (auto& l : labels) l = 10 + pick(rng);
        const auto p = expand_per_instance(big, labels);
        for (std::size_t i = 0; i < labels.size(); ++i)
            CHECK(p.column(i) == v.column(static_cast<std::size_t>(labels[i] - 10)));
    }
    CHECK_THROWS_AS(expand_per_instance(t, {0, 7}), DataError);
}

TEST_CASE("class_centroids") {
    const MappingModel model{FeatureMatrix(2, 3, {1, 0, 2, 0, 1, -1})};
    SUBCASE("one instance per class") {
        const LabeledDataset d{FeatureMatrix(3, 2, {1, 4, 2, 5, 3, 6}), {0, 1}, 2};
        const auto o = class_centroids(model, d);
        CHECK(o == matmul(model.weights, d.features));
    }
    SUBCASE("two identical instances") {
        const LabeledDataset d{FeatureMatrix(3, 2, {1, 1, 2, 2, 3, 3}), {4, 4}, 5};
        const auto o = class_centroids(model, d);
        const auto wx = matmul(model.weights, d.features);
        CHECK(o.column(0) == wx.column(0));
        CHECK(o.column(1) == wx.column(0));
    }
    SUBCASE("random three-class set against grouped mean") {
        std::mt19937_64 rng(12);
        const auto in = random_instance(rng, 5, 3, 17, 3);
        const auto expected = oc::grouped_mean(oc::to_dense(in.model.weights), oc::to_dense(in.data.features),
                                               in.data.labels);
        const auto got = class_centroids(in.model, in.data);
        for (std::size_t r = 0; r < expected.size(); ++r)
            for (std::size_t c = 0; c < expected[0].size(); ++c) CHECK(std::abs(expected[r][c] - got(r, c)) <= 1e-12);
    }
}

TEST_CASE("objective") {
    SUBCASE("all zero") {
        const LabeledDataset d{FeatureMatrix(3, 2), {0, 0}, 1};
        CHECK(objective(MappingModel{FeatureMatrix(2, 3)}, d, FeatureMatrix(2, 2), FeatureMatrix(2, 2), HyperParams{}) ==
              0.0);
    }
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const auto in = random_instance(rng, 4, 3, 9, 3);
        const auto w = oc::to_dense(in.model.weights);
        const auto x = oc::to_dense(in.data.features);
        const auto p = oc::to_dense(in.protos);
        const auto o = oc::to_dense(in.centroids);
        SUBCASE("alpha = beta = 0 is reconstruction only") {
            const double got = objective(in.model, in.data, in.protos, in.centroids, params(0.0, 0.0));
            const double expected = oc::direct_objective(w, x, p, o, 0.0, 0.0);
            CHECK(std::abs(got - expected) <= 1e-10 * std::max(1.0, expected));
        }
        SUBCASE("full objective against elementwise oracle") {
            const double got = objective(in.model, in.data, in.protos, in.centroids, params(0.7, 1.3));
            const double expected = oc::direct_objective(w, x, p, o, 0.7, 1.3);
            CHECK(std::abs(got - expected) <= 1e-10 * std::max(1.0, expected));
        }
    }
}

TEST_CASE("objective is invariant to instance permutation") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const auto in = random_instance(rng, 6, 4, 20, 4);
        std::vector<std::size_t> perm(20);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        auto permute = [&](const FeatureMatrix& m) {
            FeatureMatrix out(m.rows(), m.cols());
            for (std::size_t j = 0; j < perm.size(); ++j) out.set_column(j, m.column(perm[j]));
            return out;
        };
        LabeledDataset shuffled{permute(in.data.features), {}, in.data.class_count};
        for (auto j : perm) shuffled.labels.push_back(in.data.labels[j]);
        const auto hp = params(0.5, 1.0);
        const double a = objective(in.model, in.data, in.protos, in.centroids, hp);
        const double b = objective(in.model, shuffled, permute(in.protos), permute(in.centroids), hp);
        CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, a));
    }
}

TEST_CASE("objective_gradient matches central finite differences") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<std::size_t> dim(1, 5);
    std::uniform_real_distribution<double> weight(0.0, 2.0);
    for (int seed = 0; seed < 50; ++seed) {
        const std::size_t dv = dim(rng), ds = dim(rng);
        const auto in = random_instance(rng, dv, ds, dim(rng) + 3, 2);
        const auto hp = params(weight(rng), 0.1 + weight(rng));
        const auto g = objective_gradient(in.model, in.data, in.protos, in.centroids, hp);
        const auto fd = oc::fd_gradient(oc::to_dense(in.model.weights), oc::to_dense(in.data.features),
                                        oc::to_dense(in.protos), oc::to_dense(in.centroids), hp.alpha, hp.beta);
        for (std::size_t i = 0; i < ds; ++i)
            for (std::size_t j = 0; j < dv; ++j)
                CHECK(std::abs(g(i, j) - fd[i][j]) <= 1e-4 * std::max(1.0, std::abs(fd[i][j])));
    }
}

TEST_CASE("objective_gradient with alpha = beta = 0 and orthonormal P rows") {
    // P rows orthonormal: PPᵀ = I, so the gradient is W − PXᵀ.
    const FeatureMatrix p(2, 4, {1, 0, 0, 0, 0, 1, 0, 0});
    std::mt19937_64 rng(3);
    const LabeledDataset d{oc::from_dense(oc::random_dense(rng, 3, 4)), {0, 1, 2, 3}, 4};
    const MappingModel model{oc::from_dense(oc::random_dense(rng, 2, 3))};
    const auto g = objective_gradient(model, d, p, p, params(0.0, 0.0));
    const auto pxt = matmul(p, d.features.transpose());
    FeatureMatrix expected = model.weights;
    expected.eigen() -= pxt.eigen();
    CHECK(max_abs(FeatureMatrix(FeatureMatrix::Storage(g.eigen() - expected.eigen()))) <= 1e-14);
}

TEST_CASE("solve_weights is stationary and locally optimal") {
    std::mt19937_64 rng(51);
    std::uniform_int_distribution<std::size_t> dv_dist(2, 20), ds_dist(1, 10);
    for (int seed = 0; seed < 25; ++seed) {
        const std::size_t dv = dv_dist(rng), ds = ds_dist(rng);
        const std::size_t m = std::max<std::size_t>(dv + 5, 30 + seed);
        const auto in = random_instance(rng, dv, ds, std::min<std::size_t>(m, 60), 5);
        const auto hp = params(0.5, 1.0);
        const auto model = solve_weights(in.data, in.protos, in.centroids, hp);
        const auto sys = assemble_system(in.data, in.protos, in.centroids, hp);
        const auto g = objective_gradient(model, in.data, in.protos, in.centroids, hp);
        CHECK(frobenius_norm(g) <= 1e-6 * (1.0 + frobenius_norm(sys.constant)));

        const double j0 = objective(model, in.data, in.protos, in.centroids, hp);
        const double wn = frobenius_norm(model.weights);
        for (int probe = 0; probe < 100; ++probe) {
            auto delta = oc::from_dense(oc::random_dense(rng, ds, dv));
            delta.eigen() *= 1e-3 * wn / frobenius_norm(delta);
            MappingModel moved = model;
            moved.weights.eigen() += delta.eigen();
            CHECK(objective(moved, in.data, in.protos, in.centroids, hp) >= j0 - 1e-12 * std::max(1.0, j0));
        }
    }
}

TEST_CASE("solve_weights depends only on alpha + beta when centroids equal prototypes") {
    std::mt19937_64 rng(61);
    const auto in = random_instance(rng, 6, 3, 25, 4);
    const auto a = solve_weights(in.data, in.protos, in.protos, params(0.2, 1.0));
    const auto b = solve_weights(in.data, in.protos, in.protos, params(0.9, 0.3));
    const double scale = frobenius_norm(a.weights);
    CHECK((a.weights.eigen() - b.weights.eigen()).norm() <= 1e-10 * scale);
}

TEST_CASE("solve_weights 2x2 matches Kronecker oracle") {
    std::mt19937_64 rng(71);
    const auto in = random_instance(rng, 2, 2, 6, 2);
    const auto hp = params(0.4, 1.5);
    const auto sys = assemble_system(in.data, in.protos, in.centroids, hp);
    const auto expected =
        oc::kronecker_sylvester(oc::to_dense(sys.lhs), oc::to_dense(sys.rhs), oc::to_dense(sys.constant));
    const auto got = solve_weights(in.data, in.protos, in.centroids, hp);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(got.weights(i, j) - expected[i][j]) <= 1e-8);
}

TEST_CASE("singular systems and the ridge retry") {
    // One class: P has rank 1 in 3 dims; two instances in 4 visual dims.
    const LabeledDataset d{FeatureMatrix(4, 2, {1, 0, 0, 1, 0, 0, 0, 0}), {0, 0}, 1};
    const FeatureMatrix p(3, 2, {1, 1, 1, 1, 1, 1});
    HyperParams hp = params(0.0, 1.0);
    CHECK_THROWS_AS(solve_weights(d, p, p, hp), SolverError);
    hp.ridge_retry = true;
    const auto model = solve_weights(d, p, p, hp);
    CHECK(model.weights.all_finite());
}

TEST_CASE("encode and decode use tied weights") {
    const MappingModel model{FeatureMatrix(2, 3, {1, 2, 3, 4, 5, 6})};
    CHECK(model.encode(std::vector<double>{1, 0, 1}) == std::vector<double>{4, 10});
    CHECK(model.decode(std::vector<double>{1, 1}) == std::vector<double>{5, 7, 9});
    CHECK_THROWS_AS(model.encode(std::vector<double>{1, 2}), DimensionError);
}
