#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace zsr {

/// Dense double-precision matrix stored row-major.
///
/// Instances are columns: a visual feature matrix is d_v x m, a per-instance
/// prototype matrix is d_s x m. Construction from raw data rejects
/// non-finite entries.
class FeatureMatrix {
public:
    using Storage = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols);
    FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major);
    explicit FeatureMatrix(Storage values);

    static FeatureMatrix identity(std::size_t n);

    std::size_t rows() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values_.cols()); }
    bool empty() const { return values_.size() == 0; }

    double operator()(std::size_t r, std::size_t c) const { return values_(r, c); }
    double& operator()(std::size_t r, std::size_t c) { return values_(r, c); }

    /// Row-major view of all entries.
    std::span<const double> data() const {
        return {values_.data(), static_cast<std::size_t>(values_.size())};
    }

    std::vector<double> column(std::size_t c) const;
    void set_column(std::size_t c, std::span<const double> v);

    FeatureMatrix transpose() const;
    bool all_finite() const { return values_.allFinite(); }

    const Storage& eigen() const { return values_; }
    Storage& eigen() { return values_; }

    friend bool operator==(const FeatureMatrix& a, const FeatureMatrix& b);

private:
    Storage values_;
};

FeatureMatrix matmul(const FeatureMatrix& a, const FeatureMatrix& b);

double frobenius_norm(const FeatureMatrix& a);

/// Eigendecomposition of a symmetric matrix. Eigenvalues ascending,
/// eigenvectors are the matching orthonormal columns.
struct SymEig {
    std::vector<double> values;
    FeatureMatrix vectors;
};

/// Relative symmetry tolerance used by sym_eig and SylvesterSystem.
inline constexpr double kSymmetryTolerance = 1e-10;

bool is_symmetric(const FeatureMatrix& a, double rel_tol = kSymmetryTolerance);

SymEig sym_eig(const FeatureMatrix& a);

/// L W + W R + M = 0 with L (d_s x d_s) and R (d_v x d_v) symmetric PSD.
struct SylvesterSystem {
    FeatureMatrix lhs;  // L
    FeatureMatrix rhs;  // R
    FeatureMatrix constant;  // M

    /// Throws DimensionError / DataError when the shape or symmetry
    /// invariants are violated.
    void validate() const;
};

inline constexpr double kDefaultPivotFloor = 1e-10;

/// Solves L W + W R + M = 0 by diagonalising L = U Λ Uᵀ and R = V Σ Vᵀ:
/// W = U [-(Uᵀ M V)_ij / (λ_i + σ_j)] Vᵀ.
///
/// Throws SolverError when some λ_i + σ_j falls below pivot_floor.
FeatureMatrix solve_sylvester(const SylvesterSystem& sys, double pivot_floor = kDefaultPivotFloor);

/// Same solve with L and R already diagonalised. Lets callers reuse the
/// decomposition of a fixed R across many solves.
FeatureMatrix solve_sylvester(const SymEig& lhs, const SymEig& rhs, const FeatureMatrix& constant,
                              double pivot_floor = kDefaultPivotFloor);

/// ‖L W + W R + M‖_F
double sylvester_residual(const SylvesterSystem& sys, const FeatureMatrix& w);

}  // namespace zsr
