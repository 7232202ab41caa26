#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "tubepoints/errors.hpp"
#include "tubepoints/geometry.hpp"

namespace tp {

// K x N matrix of non-negative finite assignment costs, K <= N.
// Row i is the cost of assigning ground-truth point i to each of the N
// prediction slots.
class CostMatrix {
public:
    CostMatrix() = default;
    CostMatrix(int k, int n) : k_(k), n_(n) {
        if (k < 0 || n < 0 || k > n)
            throw capacity_error("CostMatrix: need 0 <= K <= N, got K=" +
                                 std::to_string(k) + " N=" + std::to_string(n));
        data_.assign(static_cast<std::size_t>(k) * n, 0.0);
    }
    CostMatrix(int k, int n, std::vector<double> data) : k_(k), n_(n), data_(std::move(data)) {
        if (k < 0 || n < 0 || k > n)
            throw capacity_error("CostMatrix: need 0 <= K <= N, got K=" +
                                 std::to_string(k) + " N=" + std::to_string(n));
        if (data_.size() != static_cast<std::size_t>(k) * n)
            throw dimension_error("CostMatrix: data length " + std::to_string(data_.size()) +
                                  " does not match " + std::to_string(k) + "x" +
                                  std::to_string(n));
        for (double v : data_)
            if (!std::isfinite(v) || v < 0.0)
                throw parameter_error("CostMatrix: entries must be finite and >= 0");
    }

    int rows() const { return k_; }
    int cols() const { return n_; }

    double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * n_ + j]; }
    void set(int i, int j, double v) { data_[static_cast<std::size_t>(i) * n_ + j] = v; }

    const double* row(int i) const { return data_.data() + static_cast<std::size_t>(i) * n_; }
    const std::vector<double>& data() const { return data_; }

private:
    int k_ = 0;
    int n_ = 0;
    std::vector<double> data_;
};

// Injective assignment of the K ground-truth rows to prediction columns.
// Columns not assigned to any row get the "no point" class.
struct MatchResult {
    std::vector<int> assignment;         // assignment[i] = column matched to GT row i
    std::vector<int> unmatched_columns;  // ascending; the "no point" slots

    friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

inline double total_cost(const CostMatrix& c, const MatchResult& m) {
    double sum = 0.0;
    for (int i = 0; i < c.rows(); ++i) sum += c.at(i, m.assignment[i]);
    return sum;
}

namespace detail {

inline std::vector<int> complement_columns(const std::vector<int>& assignment, int n) {
    std::vector<char> used(n, 0);
    for (int j : assignment) used[j] = 1;
    std::vector<int> rest;
    rest.reserve(n - assignment.size());
    for (int j = 0; j < n; ++j)
        if (!used[j]) rest.push_back(j);
    return rest;
}

}  // namespace detail

// Cost of assigning ground-truth point g to a prediction (p, s), for the
// real-GT branch where the class target is 1:
//   [L1(g,p)]^eta * |s - 1|^(1-eta)
// The two terms multiply rather than add; 0^0 is defined as 1 so the
// eta = 0 and eta = 1 extremes degenerate to pure-class and pure-distance
// costs.
inline double match_cost(const Point& g, const Point& p, double s, double eta) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw parameter_error("match_cost: eta must be in [0,1], got " + std::to_string(eta));
    const double dist = manhattan(g, p);
    const double cls = std::abs(s - 1.0);
    const double a = (eta == 0.0) ? 1.0 : std::pow(dist, eta);
    const double b = (eta == 1.0) ? 1.0 : std::pow(cls, 1.0 - eta);
    return a * b;
}

inline CostMatrix cost_matrix(const std::vector<Point>& gts,
                              const std::vector<ScoredPoint>& preds, double eta) {
    const int k = static_cast<int>(gts.size());
    const int n = static_cast<int>(preds.size());
    if (k > n)
        throw capacity_error("cost_matrix: K=" + std::to_string(k) + " exceeds N=" +
                             std::to_string(n) + " prediction slots");
    CostMatrix c(k, n);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < n; ++j)
            c.set(i, j, match_cost(gts[i], preds[j].point, preds[j].score, eta));
    return c;
}

// Greedy bipartite matching: rows are visited in input order; each takes
// the cheapest still-free column (smallest index on ties), which is then
// masked. O(K*N).
inline MatchResult greedy_match(const CostMatrix& c) {
    const int k = c.rows();
    const int n = c.cols();
    MatchResult result;
    result.assignment.resize(k);
    std::vector<char> used(n, 0);
    for (int i = 0; i < k; ++i) {
        int best = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        const double* row = c.row(i);
        for (int j = 0; j < n; ++j) {
            if (!used[j] && row[j] < best_cost) {
                best_cost = row[j];
                best = j;
            }
        }
        used[best] = 1;
        result.assignment[i] = best;
    }
    result.unmatched_columns = detail::complement_columns(result.assignment, n);
    return result;
}

// Optimal rectangular assignment by shortest augmenting paths with dual
// potentials (Jonker-Volgenant family). Minimizes the total cost over all
// injections of the K rows into the N columns, K <= N, in O(K*N^2).
inline MatchResult hungarian_match(const CostMatrix& c) {
    const int k = c.rows();
    const int n = c.cols();
    MatchResult result;
    result.assignment.resize(k);
    if (k == 0) {
        result.unmatched_columns = detail::complement_columns(result.assignment, n);
        return result;
    }

    const double inf = std::numeric_limits<double>::infinity();
    // 1-based; row_of_col[j] = row currently matched to column j, 0 = free.
    std::vector<double> u(k + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> row_of_col(n + 1, 0), prev_col(n + 1, 0);

    for (int i = 1; i <= k; ++i) {
        row_of_col[0] = i;
        int j0 = 0;
        std::vector<double> min_reduced(n + 1, inf);
        std::vector<char> visited(n + 1, 0);
        do {
            visited[j0] = 1;
            const int i0 = row_of_col[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (visited[j]) continue;
                const double reduced = c.at(i0 - 1, j - 1) - u[i0] - v[j];
                if (reduced < min_reduced[j]) {
                    min_reduced[j] = reduced;
                    prev_col[j] = j0;
                }
                if (min_reduced[j] < delta) {
                    delta = min_reduced[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (visited[j]) {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_reduced[j] -= delta;
                }
            }
            j0 = j1;
        } while (row_of_col[j0] != 0);
        // Augment along the alternating path back to the virtual column 0.
        do {
            const int j1 = prev_col[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    for (int j = 1; j <= n; ++j)
        if (row_of_col[j] != 0) result.assignment[row_of_col[j] - 1] = j - 1;
    result.unmatched_columns = detail::complement_columns(result.assignment, n);
    return result;
}

// Exhaustive minimum over all injections; the test oracle for
// hungarian_match. Ties resolve to the lexicographically smallest
// assignment vector. Guarded to K, N <= 7.
inline MatchResult brute_force_match(const CostMatrix& c) {
    const int k = c.rows();
    const int n = c.cols();
    if (k > 7 || n > 7)
        throw capacity_error("brute_force_match: limited to K,N <= 7, got K=" +
                             std::to_string(k) + " N=" + std::to_string(n));

    std::vector<int> current(k, -1), best(k, -1);
    double best_total = std::numeric_limits<double>::infinity();
    std::vector<char> used(n, 0);

    // Columns are tried in ascending order at every depth, so complete
    // assignments are visited in lexicographic order and strict improvement
    // keeps the lexicographically smallest minimizer.
    auto recurse = [&](auto&& self, int row, double acc) -> void {
        if (row == k) {
            if (acc < best_total) {
                best_total = acc;
                best = current;
            }
            return;
        }
        for (int j = 0; j < n; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            current[row] = j;
            self(self, row + 1, acc + c.at(row, j));
            used[j] = 0;
        }
    };
    recurse(recurse, 0, 0.0);

    MatchResult result;
    result.assignment = best;
    if (k == 0) result.assignment.clear();
    result.unmatched_columns = detail::complement_columns(result.assignment, n);
    return result;
}

// Greedy matching over a batch of independent cost matrices, organised
// step-major: step s resolves ground-truth row s of every matrix that
// still has one, taking the per-matrix argmin over unmasked columns and
// masking the chosen column to +inf. Produces exactly the same result as
// running greedy_match on each matrix.
inline std::vector<MatchResult> batched_greedy(const std::vector<CostMatrix>& costs) {
    const std::size_t batch = costs.size();
    std::vector<MatchResult> results(batch);

    int max_k = 0;
    std::size_t total = 0;
    for (const auto& c : costs) {
        max_k = std::max(max_k, c.rows());
        total += c.data().size();
    }

    // One contiguous working copy of all matrices; masking writes +inf in
    // place, mirroring the C[., n] <- inf update.
    std::vector<double> work;
    work.reserve(total);
    std::vector<std::size_t> offset(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        offset[b] = work.size();
        work.insert(work.end(), costs[b].data().begin(), costs[b].data().end());
        results[b].assignment.resize(costs[b].rows());
    }

    const double inf = std::numeric_limits<double>::infinity();
    for (int step = 0; step < max_k; ++step) {
        for (std::size_t b = 0; b < batch; ++b) {
            const int k = costs[b].rows();
            if (step >= k) continue;  // padding row: no-op
            const int n = costs[b].cols();
            const double* row = work.data() + offset[b] + static_cast<std::size_t>(step) * n;
            int best = 0;
            double best_cost = row[0];
            for (int j = 1; j < n; ++j) {
                if (row[j] < best_cost) {
                    best_cost = row[j];
                    best = j;
                }
            }
            results[b].assignment[step] = best;
            // Mask the chosen column in all rows of this matrix.
            double* mat = work.data() + offset[b];
            for (int i = 0; i < k; ++i) mat[static_cast<std::size_t>(i) * n + best] = inf;
        }
    }

    for (std::size_t b = 0; b < batch; ++b)
        results[b].unmatched_columns =
            detail::complement_columns(results[b].assignment, costs[b].cols());
    return results;
}

}  // namespace tp
