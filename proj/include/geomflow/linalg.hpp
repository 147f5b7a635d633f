#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>
#include <vector>

namespace geomflow {

/// Triplet-form sparse matrix. Duplicate entries are summed on compression.
class SparseMatrix {
public:
    SparseMatrix(Eigen::Index rows, Eigen::Index cols);

    Eigen::Index rows() const { return m_rows; }
    Eigen::Index cols() const { return m_cols; }

    void add(Eigen::Index row, Eigen::Index col, double value);
    /// Append another producer's triplets; merge order is call order.
    void merge(const SparseMatrix& other);
    void reserve(std::size_t n) { m_triplets.reserve(n); }

    std::size_t num_triplets() const { return m_triplets.size(); }
    Eigen::SparseMatrix<double> compressed() const;

private:
    Eigen::Index m_rows;
    Eigen::Index m_cols;
    std::vector<Eigen::Triplet<double>> m_triplets;
};

enum class SolveMethod { direct_lu, gmres };

struct SolveOptions {
    SolveMethod method = SolveMethod::direct_lu;
    double tol = 1e-10;
    /// Pivots below pivot_threshold * max|entry| mark the matrix singular.
    double pivot_threshold = 1e-14;
    int gmres_restart = 50;
    int max_iterations = 5000;
};

struct SolveReport {
    double residual_norm = 0.0;
    int iterations = 0;
    SolveMethod method = SolveMethod::direct_lu;
};

class SingularMatrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SolveResult {
    Eigen::VectorXd x;
    SolveReport report;
};

/// Solve A x = b. Direct sparse LU by default; restarted GMRES with an
/// incomplete-LU preconditioner on request.
SolveResult solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, const SolveOptions& options = {});
SolveResult solve(const SparseMatrix& A, const Eigen::VectorXd& b, const SolveOptions& options = {});

} // namespace geomflow
