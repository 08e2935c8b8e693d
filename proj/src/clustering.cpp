// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#include "avinpaint/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "avinpaint/common.hpp"

namespace avi {

namespace {

double sq_dist(const double* a, const double* b, long d) {
    double s = 0.0;
    for (long i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        s += diff * diff;
    }
    return s;
}

}  // namespace

KMeansResult kmeans(const std::vector<Tensor>& points, int k, uint64_t seed, int max_iter,
                    double tol) {
    const long n = static_cast<long>(points.size());
    if (k < 1) throw InvalidInputError("kmeans: k must be >= 1");
    if (n < k)
        throw InvalidInputError("kmeans: need at least k points, got " + std::to_string(n));
    const long d = points[0].numel();
    for (const auto& p : points)
        if (p.numel() != d) throw InvalidInputError("kmeans: inconsistent point dimensions");

    Rng rng(seed);
    KMeansResult res;
    res.centroids = Tensor({k, static_cast<int>(d)});

    // k-means++ seeding.
    std::vector<long> chosen;
    chosen.push_back(rng.uniform_int(0, static_cast<int>(n) - 1));
    std::vector<double> d2(static_cast<size_t>(n));
    while (static_cast<int>(chosen.size()) < k) {
        double total = 0.0;
        for (long i = 0; i < n; ++i) {
            double best = 1e300;
            for (long c : chosen)
                best = std::min(best, sq_dist(points[static_cast<size_t>(i)].data.data(),
                                              points[static_cast<size_t>(c)].data.data(), d));
            d2[static_cast<size_t>(i)] = best;
            total += best;
        }
        long pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double acc = 0.0;
            pick = n - 1;
            for (long i = 0; i < n; ++i) {
                acc += d2[static_cast<size_t>(i)];
                if (acc >= r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.uniform_int(0, static_cast<int>(n) - 1);
        }
        chosen.push_back(pick);
    }
    for (int c = 0; c < k; ++c)
        std::copy_n(points[static_cast<size_t>(chosen[static_cast<size_t>(c)])].data.data(), d,
                    res.centroids.data.data() + static_cast<size_t>(c) * d);

    res.labels.assign(static_cast<size_t>(n), 0);
    for (int iter = 0; iter < max_iter; ++iter) {
        // Assignment step and objective.
        double obj = 0.0;
        for (long i = 0; i < n; ++i) {
            double best = 1e300;
            int bc = 0;
            for (int c = 0; c < k; ++c) {
                const double dd = sq_dist(points[static_cast<size_t>(i)].data.data(),
                                          res.centroids.data.data() + static_cast<size_t>(c) * d, d);
                if (dd < best) {
                    best = dd;
                    bc = c;
                }
            }
            res.labels[static_cast<size_t>(i)] = bc;
            obj += best;
        }
        res.objective.push_back(obj);
        res.iterations = iter + 1;

        // Update step; empty clusters keep their centroid.
        Tensor next({k, static_cast<int>(d)});
        std::vector<long> counts(static_cast<size_t>(k), 0);
        for (long i = 0; i < n; ++i) {
            const int c = res.labels[static_cast<size_t>(i)];
            ++counts[static_cast<size_t>(c)];
            for (long j = 0; j < d; ++j)
                next.data[static_cast<size_t>(c) * d + j] += points[static_cast<size_t>(i)].data[static_cast<size_t>(j)];
        }
        double max_shift = 0.0;
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<size_t>(c)] == 0) {
                std::copy_n(res.centroids.data.data() + static_cast<size_t>(c) * d, d,
                            next.data.data() + static_cast<size_t>(c) * d);
            } else {
                for (long j = 0; j < d; ++j)
                    next.data[static_cast<size_t>(c) * d + j] /= static_cast<double>(counts[static_cast<size_t>(c)]);
            }
            max_shift = std::max(max_shift,
                                 std::sqrt(sq_dist(next.data.data() + static_cast<size_t>(c) * d,
                                                   res.centroids.data.data() + static_cast<size_t>(c) * d, d)));
        }
        res.centroids = std::move(next);
        if (max_shift < tol) break;
    }
    return res;
}

double cluster_purity(const std::vector<int>& labels, const std::vector<int>& truth, int k) {
    if (labels.size() != truth.size() || labels.empty())
        throw InvalidInputError("cluster_purity: size mismatch");
    long correct = 0;
    for (int c = 0; c < k; ++c) {
        std::map<int, long> counts;
        for (size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) ++counts[truth[i]];
        long best = 0;
        for (const auto& [t, n] : counts) best = std::max(best, n);
        correct += best;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

}  // namespace avi
