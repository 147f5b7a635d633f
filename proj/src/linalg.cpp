#include "geomflow/linalg.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <limits>

namespace geomflow {

namespace {

// SparseLU keeps the diagonal of U inside its supernodal L storage; expose the
// smallest pivot magnitude for singularity detection.
class PivotCheckedLU : public Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> {
public:
    double min_abs_pivot() const
    {
        double smallest = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < this->cols(); ++j) {
            double pivot = 0.0;
            for (SCMatrix::InnerIterator it(m_Lstore, j); it; ++it) {
                if (it.row() == j) {
                    pivot = std::abs(it.value());
                    break;
                }
            }
            smallest = std::min(smallest, pivot);
        }
        return smallest;
    }
};

double max_abs_entry(const Eigen::SparseMatrix<double>& A)
{
    double m = 0.0;
    for (Eigen::Index k = 0; k < A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) m = std::max(m, std::abs(it.value()));
    }
    return m;
}

} // namespace

SparseMatrix::SparseMatrix(Eigen::Index rows, Eigen::Index cols)
    : m_rows(rows)
    , m_cols(cols)
{}

void SparseMatrix::add(Eigen::Index row, Eigen::Index col, double value)
{
    if (row < 0 || row >= m_rows || col < 0 || col >= m_cols) {
        throw std::out_of_range("sparse entry (" + std::to_string(row) + "," + std::to_string(col) + ") out of range");
    }
    m_triplets.emplace_back(row, col, value);
}

void SparseMatrix::merge(const SparseMatrix& other)
{
    if (other.m_rows != m_rows || other.m_cols != m_cols) throw std::invalid_argument("merging matrices of different shape");
    m_triplets.insert(m_triplets.end(), other.m_triplets.begin(), other.m_triplets.end());
}

Eigen::SparseMatrix<double> SparseMatrix::compressed() const
{
    Eigen::SparseMatrix<double> A(m_rows, m_cols);
    A.setFromTriplets(m_triplets.begin(), m_triplets.end());
    A.makeCompressed();
    return A;
}

SolveResult solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b, const SolveOptions& options)
{
    if (A.rows() != A.cols()) throw std::invalid_argument("solve needs a square matrix");
    if (A.rows() != b.size()) throw std::invalid_argument("right-hand side length mismatch");

    SolveResult result;
    result.report.method = options.method;
    const double scale = max_abs_entry(A);

    if (options.method == SolveMethod::direct_lu) {
        PivotCheckedLU lu;
        lu.analyzePattern(A);
        lu.factorize(A);
        if (lu.info() != Eigen::Success) {
            throw SingularMatrix("sparse LU failed: " + lu.lastErrorMessage());
        }
        const double pivot = lu.min_abs_pivot();
        if (!(pivot > options.pivot_threshold * scale)) {
            throw SingularMatrix(
                "pivot " + std::to_string(pivot) + " below threshold " +
                std::to_string(options.pivot_threshold * scale));
        }
        result.x = lu.solve(b);
        // A few sweeps of iterative refinement if the backward error is poor.
        const double a_norm = A.norm();
        for (int sweep = 0; sweep < 3; ++sweep) {
            const Eigen::VectorXd r = b - A * result.x;
            if (!(r.norm() > options.tol * (a_norm * result.x.norm() + b.norm()))) break;
            result.x += lu.solve(r);
        }
        result.report.iterations = 0;
    } else {
        Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gmres;
        gmres.set_restart(options.gmres_restart);
        gmres.setTolerance(options.tol);
        gmres.setMaxIterations(options.max_iterations);
        gmres.compute(A);
        if (gmres.info() != Eigen::Success) throw SingularMatrix("preconditioner setup failed");
        result.x = gmres.solve(b);
        result.report.iterations = static_cast<int>(gmres.iterations());
        if (gmres.info() != Eigen::Success) {
            throw NonConvergence(
                "GMRES stopped after " + std::to_string(gmres.iterations()) + " iterations, error " +
                std::to_string(gmres.error()));
        }
    }

    if (!result.x.allFinite()) throw SingularMatrix("solution has non-finite entries");
    result.report.residual_norm = (A * result.x - b).norm();
    if (result.report.residual_norm > options.tol * (A.norm() * result.x.norm() + b.norm())) {
        throw SingularMatrix("residual " + std::to_string(result.report.residual_norm) + " exceeds tolerance");
    }
    return result;
}

SolveResult solve(const SparseMatrix& A, const Eigen::VectorXd& b, const SolveOptions& options)
{
    return solve(A.compressed(), b, options);
}

} // namespace geomflow
