// Copyright 2026 AVInpaint Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <vector>

#include "avinpaint/rng.hpp"
#include "avinpaint/tensor.hpp"

namespace avi {

struct KMeansResult {
    std::vector<int> labels;
    Tensor centroids;                // (K, D)
    std::vector<double> objective;   // sum of squared distances after each assignment
    int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding; stops when the maximum centroid
// shift drops below tol or after max_iter rounds.
KMeansResult kmeans(const std::vector<Tensor>& points, int k, uint64_t seed,
                    int max_iter = 100, double tol = 1e-6);

// Fraction of points whose cluster's majority true label matches their own.
double cluster_purity(const std::vector<int>& labels, const std::vector<int>& truth, int k);

}  // namespace avi
