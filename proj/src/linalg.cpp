#include "dekm/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dekm/errors.hpp"

namespace dekm {

std::string shape_of(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const std::string& what) {
    if (!m.allFinite()) {
        throw NumericError(what + ": non-finite entry in " + shape_of(m) + " matrix");
    }
}

namespace {

[[noreturn]] void shape_mismatch(const char* op, const Matrix& a, const Matrix& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + shape_of(a) + " and " +
                         shape_of(b));
}

double off_diagonal_norm(const Matrix& a) {
    double sum = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (i != j) sum += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(sum);
}

}  // namespace

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) shape_mismatch("multiply", a, b);
    Matrix out(a.rows(), b.cols());
    out.noalias() = a * b;
    return out;
}

Matrix transpose(const Matrix& a) { return a.transpose(); }

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) shape_mismatch("add", a, b);
    return a + b;
}

Matrix scale(const Matrix& a, double s) { return a * s; }

Matrix row_slice(const Matrix& a, Index first, Index count) {
    if (first < 0 || count < 0 || first + count > a.rows()) {
        throw DimensionError("row_slice: rows [" + std::to_string(first) + ", " +
                             std::to_string(first + count) + ") out of range for " + shape_of(a));
    }
    return a.middleRows(first, count);
}

Matrix gather_rows(const Matrix& a, std::span<const std::size_t> rows) {
    Matrix out(static_cast<Index>(rows.size()), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= static_cast<std::size_t>(a.rows())) {
            throw DimensionError("gather_rows: row " + std::to_string(rows[i]) +
                                 " out of range for " + shape_of(a));
        }
        out.row(static_cast<Index>(i)) = a.row(static_cast<Index>(rows[i]));
    }
    return out;
}

TransformState sym_eig(const Matrix& s, const EigenOptions& options) {
    if (s.rows() != s.cols() || s.rows() < 1) {
        throw DimensionError("sym_eig: expected a non-empty square matrix, got " + shape_of(s));
    }
    require_finite(s, "sym_eig");
    const double max_abs = s.cwiseAbs().maxCoeff();
    const double asymmetry = (s - s.transpose()).cwiseAbs().maxCoeff();
    if (asymmetry > 1e-9 * (1.0 + max_abs)) {
        throw DomainError("sym_eig: matrix is not symmetric (max |s - s^T| = " +
                          std::to_string(asymmetry) + ")");
    }

    const Index n = s.rows();
    Matrix a = 0.5 * (s + s.transpose());
    Matrix rot = Matrix::Identity(n, n);  // columns converge to eigenvectors
    const double threshold = options.relative_tolerance * a.norm();

    double residual = off_diagonal_norm(a);
    int sweep = 0;
    while (residual > threshold) {
        if (sweep == options.max_sweeps) {
            throw ConvergenceError("sym_eig: no convergence after " +
                                       std::to_string(options.max_sweeps) +
                                       " sweeps, off-diagonal norm " + std::to_string(residual),
                                   residual);
        }
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t;
                if (std::abs(tau) > 1e150) {
                    t = 1.0 / (2.0 * tau);
                } else {
                    t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                }
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                for (Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Index k = 0; k < n; ++k) {
                    const double vkp = rot(k, p);
                    const double vkq = rot(k, q);
                    rot(k, p) = c * vkp - sn * vkq;
                    rot(k, q) = sn * vkp + c * vkq;
                }
            }
        }
        ++sweep;
        residual = off_diagonal_norm(a);
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return a(i, i) < a(j, j); });

    TransformState out{Matrix(n, n), RowVector(n)};
    for (Index r = 0; r < n; ++r) {
        const Index src = order[static_cast<std::size_t>(r)];
        out.eigenvalues(r) = a(src, src);
        out.v.row(r) = rot.col(src).transpose();
        Index lead = 0;
        for (Index c = 1; c < n; ++c) {
            if (std::abs(out.v(r, c)) > std::abs(out.v(r, lead))) lead = c;
        }
        if (out.v(r, lead) < 0.0) out.v.row(r) *= -1.0;
    }
    return out;
}

}  // namespace dekm
