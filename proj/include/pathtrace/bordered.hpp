#pragma once

#include "pathtrace/common.hpp"

#include <random>

namespace pathtrace {

/// [A; border^T] y = [rhs_top; rhs_bottom] with A of size N x (N+1).
struct BorderedSystem {
    Matrix a;
    Vector border;
    Vector rhs_top;
    double rhs_bottom = 0.0;
};

inline constexpr double kMinReciprocalCondition = 100.0 * kMachineEpsilon;

inline Matrix stack_bordered(const Matrix& a, const Vector& border)
{
    const Index n = a.rows();
    if (a.cols() != n + 1 || border.size() != n + 1) {
        throw std::invalid_argument("bordered system: A must be N x (N+1) and border N+1");
    }
    Matrix m(n + 1, n + 1);
    m.topRows(n) = a;
    m.row(n) = border.transpose();
    return m;
}

/// Dense LU with partial pivoting on the stacked square matrix.
inline Vector solve_bordered(const Matrix& a, const Vector& border, const Vector& rhs_top, double rhs_bottom)
{
    const Index n = a.rows();
    const Matrix m = stack_bordered(a, border);
    if (!m.allFinite()) {
        throw SolverError("bordered system has non-finite entries");
    }
    const Eigen::PartialPivLU<Matrix> lu(m);
    const double rcond = lu.rcond();
    if (!(rcond >= kMinReciprocalCondition)) {
        throw SolverError("bordered system is singular or ill-conditioned (rcond " + std::to_string(rcond) + ")");
    }
    Vector rhs(n + 1);
    rhs.head(n) = rhs_top;
    rhs[n] = rhs_bottom;
    Vector y = lu.solve(rhs);
    if (!y.allFinite()) {
        throw SolverError("bordered solve produced non-finite values");
    }
    return y;
}

inline Vector solve_bordered(const BorderedSystem& sys)
{
    return solve_bordered(sys.a, sys.border, sys.rhs_top, sys.rhs_bottom);
}

namespace detail {

// Unit row in R^n drawn from a seeded mt19937_64 (bitwise reproducible across platforms).
inline Vector random_unit_row(Index n, std::mt19937_64& rng)
{
    Vector r(n);
    do {
        for (Index i = 0; i < n; ++i) {
            r[i] = 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0;
        }
    } while (r.norm() < 1e-3);
    return r / r.norm();
}

} // namespace detail

/**
 * Unit vector spanning the nullspace of a rank-N matrix A (N x (N+1)).
 *
 * Solves [A; r^T] t = [0; 1] with r = hint when available, otherwise a seeded
 * random row, retrying with fresh rows when the bordered matrix is singular.
 * With a hint the result satisfies hint^T t > 0; without one its lambda
 * component is made non-negative.
 */
inline Vector nullspace_tangent(const Matrix& a, const std::optional<Vector>& hint = std::nullopt,
                                std::uint64_t seed = kDefaultSeed)
{
    const Index n = a.rows();
    const double a_norm = a.norm();
    const Vector zero = Vector::Zero(n);
    std::mt19937_64 rng(seed);
    constexpr int kAttempts = 8;
    for (int attempt = 0; attempt <= kAttempts; ++attempt) {
        Vector row;
        if (attempt == 0) {
            if (!hint || !(hint->norm() > 0.0)) {
                continue;
            }
            row = *hint / hint->norm();
        } else {
            row = detail::random_unit_row(n + 1, rng);
        }
        Vector t;
        try {
            t = solve_bordered(a, row, zero, 1.0);
        } catch (const SolverError&) {
            continue;
        }
        t /= t.norm();
        if (!((a * t).norm() <= 1e-9 * std::max(a_norm, 1e-300))) {
            continue;
        }
        if (hint) {
            if (hint->dot(t) < 0.0) {
                t = -t;
            }
        } else if (t[n] < 0.0) {
            t = -t;
        }
        return t;
    }
    throw SolverError("nullspace tangent: Jacobian is rank deficient");
}

} // namespace pathtrace
