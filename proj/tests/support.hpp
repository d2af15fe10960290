#pragma once

// Independent oracles shared by the unit tests and the acceptance runner.
// Nothing here calls into the library's numerics.

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

// Closed-form residuals, written out again from the formulas.
inline double residual(const std::string& id, double u, double l)
{
    auto fe = [](double u, double l) {
        const double s = l - u - 5.0;
        return -500.0 * s * s - 10.0 * std::pow(u - 20.0, 3) + 0.1 * std::pow(s, 5);
    };
    if (id == "fa") return -u * u * l * l * l - l / 3.0 + 100.0;
    if (id == "fb") return 2000.0 * l * l - u * u * u + 6.0 * std::pow(l, 5);
    if (id == "fc") return -u * u * u * l * l - u + 50.0;
    if (id == "fd") return -500.0 * u * u - 10.0 * l * l * l + std::pow(u, 5) / 10.0;
    if (id == "fe") return fe(u, l);
    if (id == "fe_inv") return fe(l, u);
    if (id == "crossing_lines") return (u - l) * (u + l);
    throw std::invalid_argument("no closed form for " + id);
}

// A scalar that increases strictly along each closed-form curve in the traced direction.
//   fa: lambda on the upper branch, 600 - lambda on the lower one (fold at lambda = 300)
//   fb, fc, crossing_lines: lambda
//   fd: u, since lambda^3 = (u^5 / 10 - 500 u^2) / 10 is a graph over u
//   fe, fe_inv: the shifted coordinate s, since (u - 20)^3 is a function of s
inline double curve_parameter(const std::string& id, double u, double l)
{
    if (id == "fa") return u >= 0.0 ? l : 600.0 - l;
    if (id == "fb" || id == "fc" || id == "crossing_lines") return l;
    if (id == "fd") return u;
    if (id == "fe") return l - u - 5.0;
    if (id == "fe_inv") return u - l - 5.0;
    throw std::invalid_argument("no curve parameter for " + id);
}

// Solutions of two points closer than this are the same solution.
inline double distinct_radius(double u, double l) { return 1e-5 * (1.0 + std::hypot(u, l)); }

struct Backtrack {
    std::size_t index = 0;
    double amount = 0.0; // how far below the running maximum the parameter fell
};

// The fall of t_k below max_{j<k} t_j that is largest relative to tol_k, if any exceeds tol_k.
inline std::optional<Backtrack> worst_backtrack(const std::vector<double>& t, const std::vector<double>& tol)
{
    std::optional<Backtrack> worst;
    double best = -INFINITY;
    double worst_ratio = 1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double fall = best - t[k];
        if (fall > 0.0 && fall / tol[k] >= worst_ratio) {
            worst_ratio = fall / tol[k];
            worst = Backtrack{k, fall};
        }
        best = std::max(best, t[k]);
    }
    return worst;
}

// Gaussian elimination with full pivoting.
inline Eigen::VectorXd solve_full_pivot(Eigen::MatrixXd a, Eigen::VectorXd b)
{
    const int n = static_cast<int>(a.rows());
    std::vector<int> col(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = i;
    for (int k = 0; k < n; ++k) {
        int pr = k, pc = k;
        for (int i = k; i < n; ++i)
            for (int j = k; j < n; ++j)
                if (std::abs(a(i, j)) > std::abs(a(pr, pc))) pr = i, pc = j;
        if (a(pr, pc) == 0.0) throw std::runtime_error("singular");
        a.row(k).swap(a.row(pr));
        std::swap(b[k], b[pr]);
        a.col(k).swap(a.col(pc));
        std::swap(col[static_cast<std::size_t>(k)], col[static_cast<std::size_t>(pc)]);
        for (int i = k + 1; i < n; ++i) {
            const double f = a(i, k) / a(k, k);
            a.row(i).tail(n - k) -= f * a.row(k).tail(n - k);
            b[i] -= f * b[k];
        }
    }
    Eigen::VectorXd y(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * y[j];
        y[i] = s / a(i, i);
    }
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[col[static_cast<std::size_t>(i)]] = y[i];
    return x;
}

// 1-D Bratu w'' + lambda e^w = 0, w(0) = w(1) = 0. Solutions are
// w = -2 ln(cosh((x - 1/2) theta / 2) / cosh(theta / 4)) with theta = sqrt(2 lambda) cosh(theta / 4),
// so lambda(theta) = theta^2 / (2 cosh^2(theta / 4)); the fold is where (theta / 4) tanh(theta / 4) = 1.
inline double bratu_lambda(double theta)
{
    const double c = std::cosh(theta / 4.0);
    return theta * theta / (2.0 * c * c);
}

inline double bratu_fold_theta()
{
    double lo = 1.0, hi = 10.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if ((mid / 4.0) * std::tanh(mid / 4.0) < 1.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double bratu_fold_lambda() { return bratu_lambda(bratu_fold_theta()); }

inline double bratu_midpoint(double theta) { return 2.0 * std::log(std::cosh(theta / 4.0)); }

// u_ex(1/2) for u_ex = zeta lambda^eta (1 - lambda^eta)(1 - x) x.
inline double manufactured_midpoint(double zeta, double eta, double lambda)
{
    const double p = std::pow(lambda, eta);
    return zeta * p * (1.0 - p) / 4.0;
}

// Central differences of a vector map with one Richardson extrapolation (fourth order),
// step rel (1 + |x_j|) per coordinate.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double rel = 1e-4)
{
    const Eigen::VectorXd f0 = f(x);
    Eigen::MatrixXd j(f0.size(), x.size());
    auto central = [&](int c, double step) -> Eigen::VectorXd {
        Eigen::VectorXd xp = x, xm = x;
        xp[c] += step;
        xm[c] -= step;
        return (f(xp) - f(xm)) / (2.0 * step);
    };
    for (int c = 0; c < x.size(); ++c) {
        const double step = rel * (1.0 + std::abs(x[c]));
        j.col(c) = (4.0 * central(c, 0.5 * step) - central(c, step)) / 3.0;
    }
    return j;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }

    std::vector<double> values(const std::string& name) const
    {
        const int c = column(name);
        if (c < 0) throw std::runtime_error("no column " + name);
        std::vector<double> out;
        for (const auto& r : rows) out.push_back(std::strtod(r.at(static_cast<std::size_t>(c)).c_str(), nullptr));
        return out;
    }
};

inline std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

inline Csv read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Csv csv;
    std::string line;
    if (std::getline(in, line)) csv.header = split(line, ',');
    while (std::getline(in, line)) csv.rows.push_back(split(line, ','));
    return csv;
}

} // namespace oracle
