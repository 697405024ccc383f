#include "zsr/matrix.hpp"

#include "zsr/errors.hpp"

#include <cmath>
#include <sstream>
#include <string>

namespace zsr {

namespace {

std::string shape(const FeatureMatrix& a) {
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_finite(const FeatureMatrix::Storage& v) {
    if (v.allFinite()) return;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        for (Eigen::Index c = 0; c < v.cols(); ++c) {
            if (!std::isfinite(v(r, c))) {
                std::ostringstream msg;
                msg << "non-finite matrix entry at (" << r << ", " << c << ")";
                throw DataError(msg.str());
            }
        }
    }
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols)
    : values_(Storage::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols))) {}

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> row_major) {
    if (row_major.size() != rows * cols) {
        throw DimensionError("matrix data has " + std::to_string(row_major.size()) +
                             " entries, expected " + std::to_string(rows * cols));
    }
    values_ = Eigen::Map<const Storage>(row_major.data(), static_cast<Eigen::Index>(rows),
                                        static_cast<Eigen::Index>(cols));
    require_finite(values_);
}

FeatureMatrix::FeatureMatrix(Storage values) : values_(std::move(values)) {
    require_finite(values_);
}

FeatureMatrix FeatureMatrix::identity(std::size_t n) {
    const auto en = static_cast<Eigen::Index>(n);
    return FeatureMatrix(Storage::Identity(en, en));
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = values_(r, c);
    return out;
}

void FeatureMatrix::set_column(std::size_t c, std::span<const double> v) {
    if (v.size() != rows()) {
        throw DimensionError("column length " + std::to_string(v.size()) + " does not match " +
                             std::to_string(rows()) + " rows");
    }
    for (std::size_t r = 0; r < rows(); ++r) values_(r, c) = v[r];
}

FeatureMatrix FeatureMatrix::transpose() const {
    return FeatureMatrix(Storage(values_.transpose()));
}

bool operator==(const FeatureMatrix& a, const FeatureMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a.values_ == b.values_;
}

FeatureMatrix matmul(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: cannot multiply " + shape(a) + " by " + shape(b));
    }
    FeatureMatrix::Storage out = a.eigen() * b.eigen();
    return FeatureMatrix(std::move(out));
}

double frobenius_norm(const FeatureMatrix& a) {
    return a.eigen().norm();
}

bool is_symmetric(const FeatureMatrix& a, double rel_tol) {
    if (a.rows() != a.cols()) return false;
    const double scale = a.eigen().norm();
    const double asym = (a.eigen() - a.eigen().transpose()).norm();
    return asym <= rel_tol * scale;
}

SymEig sym_eig(const FeatureMatrix& a) {
    if (a.rows() != a.cols()) {
        throw DimensionError("sym_eig: matrix is " + shape(a) + ", not square");
    }
    if (!is_symmetric(a)) {
        throw DataError("sym_eig: matrix is not symmetric");
    }
    if (a.empty()) return {};

    // Symmetrise exactly so the solver sees a self-adjoint operand.
    const Eigen::MatrixXd sym = 0.5 * (a.eigen() + a.eigen().transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw SolverError("sym_eig: tridiagonal QL iteration did not converge within " +
                          std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations) +
                          " iterations per eigenvalue");
    }
    SymEig out;
    out.values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + a.rows());
    out.vectors = FeatureMatrix(FeatureMatrix::Storage(solver.eigenvectors()));
    return out;
}

void SylvesterSystem::validate() const {
    if (lhs.rows() != lhs.cols()) throw DimensionError("Sylvester L is " + shape(lhs) + ", not square");
    if (rhs.rows() != rhs.cols()) throw DimensionError("Sylvester R is " + shape(rhs) + ", not square");
    if (constant.rows() != lhs.rows() || constant.cols() != rhs.rows()) {
        throw DimensionError("Sylvester M is " + shape(constant) + ", expected " +
                             std::to_string(lhs.rows()) + "x" + std::to_string(rhs.rows()));
    }
    if (!is_symmetric(lhs)) throw DataError("Sylvester L is not symmetric");
    if (!is_symmetric(rhs)) throw DataError("Sylvester R is not symmetric");
}

FeatureMatrix solve_sylvester(const SylvesterSystem& sys, double pivot_floor) {
    sys.validate();
    return solve_sylvester(sym_eig(sys.lhs), sym_eig(sys.rhs), sys.constant, pivot_floor);
}

FeatureMatrix solve_sylvester(const SymEig& lhs, const SymEig& rhs, const FeatureMatrix& constant,
                              double pivot_floor) {
    const std::size_t n = lhs.values.size();
    const std::size_t p = rhs.values.size();
    if (constant.rows() != n || constant.cols() != p) {
        throw DimensionError("Sylvester M is " + shape(constant) + ", expected " + std::to_string(n) +
                             "x" + std::to_string(p));
    }
    const auto& u = lhs.vectors.eigen();
    const auto& v = rhs.vectors.eigen();
    FeatureMatrix::Storage rotated = u.transpose() * constant.eigen() * v;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double pivot = lhs.values[i] + rhs.values[j];
            if (!(pivot >= pivot_floor)) {
                std::ostringstream msg;
                msg << "singular Sylvester pair: lambda[" << i << "] + sigma[" << j << "] = " << pivot
                    << " < pivot floor " << pivot_floor;
                throw SolverError(msg.str());
            }
            rotated(i, j) = -rotated(i, j) / pivot;
        }
    }
    FeatureMatrix::Storage w = u * rotated * v.transpose();
    return FeatureMatrix(std::move(w));
}

double sylvester_residual(const SylvesterSystem& sys, const FeatureMatrix& w) {
    return (sys.lhs.eigen() * w.eigen() + w.eigen() * sys.rhs.eigen() + sys.constant.eigen()).norm();
}

}  // namespace zsr
