#pragma once

#include "gazenet/rng.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazenet::tsc {

// One participant's ordered trajectory of a single metric.
struct MetricSeries {
    std::string participant_id;
    std::string metric;
    std::vector<double> values;
};

enum class NormalizeMode { zscore, minmax };

// Pooled corpus statistics for one metric (over all observations).
struct NormStats {
    double mean = 0.0;
    double sd = 0.0; // population sd
    double min = 0.0;
    double max = 0.0;
    bool degenerate = false; // zero variance / zero range: pass values through
};

NormStats pooled_stats(std::span<const MetricSeries> series);
MetricSeries normalize(const MetricSeries& s, const NormStats& stats,
                       NormalizeMode mode = NormalizeMode::zscore);

// Classic DTW with squared local cost; the distance is the square root of the
// minimal cumulative cost. `band` is a Sakoe-Chiba window on |i-j|.
double dtw_distance(std::span<const double> x, std::span<const double> y,
                    std::optional<int> band = std::nullopt);

struct DtwAlignment {
    double distance = 0.0;
    std::vector<std::pair<int, int>> path; // (x index, y index), start to end
};
DtwAlignment dtw_align(std::span<const double> x, std::span<const double> y,
                       std::optional<int> band = std::nullopt);

std::vector<double> resample_linear(std::span<const double> v, int length);

// DTW barycenter averaging. The standalone form initializes from the medoid
// resampled to `length`; refine() continues from a caller-provided start so
// k-means updates are warm-started and provably non-increasing.
std::vector<double> dba_centroid(const std::vector<std::vector<double>>& members, int length,
                                 int max_iter = 30, double tol = 1e-6);
std::vector<double> dba_refine(const std::vector<std::vector<double>>& members,
                               std::vector<double> centroid, int max_iter, double tol,
                               std::optional<int> band = std::nullopt);

struct KmeansOptions {
    int restarts = 10;
    int max_iter = 50;
    std::uint64_t seed = 42;
    std::optional<int> band;
    int dba_max_iter = 30;
    double dba_tol = 1e-6;
};

struct ClusteringResult {
    std::string metric;
    int k = 0;
    std::vector<int> assignments; // aligned with the input series order
    std::vector<std::vector<double>> centroids;
    double inertia = 0.0;    // total squared DTW to assigned centroids
    double silhouette = 0.0; // mean DTW silhouette
    std::vector<double> sample_silhouettes;
    std::uint64_t seed = 0;
    int restarts = 0;
    std::vector<double> inertia_trace; // per-iteration, winning restart
    bool degenerate_structure = false; // no usable separation found
    bool low_confidence = false;       // set by select_k on weak silhouettes
};

// DTW k-means with k-means++ seeding, DBA updates and restarts; deterministic
// for a fixed seed, invariant (up to relabeling) under input permutation.
// Labels are canonicalized by ascending centroid mean.
ClusteringResult kmeans_dtw(const std::vector<MetricSeries>& series, int k,
                            const KmeansOptions& opts = {});

// Runs kmeans_dtw for every candidate k and keeps the best mean silhouette
// (ties break toward smaller k).
ClusteringResult select_k(const std::vector<MetricSeries>& series,
                          const std::vector<int>& k_candidates = {2, 3},
                          const KmeansOptions& opts = {});

} // namespace gazenet::tsc
