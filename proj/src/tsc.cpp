#include "gazenet/tsc.hpp"
#include "gazenet/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gazenet::tsc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool in_band(int i, int j, const std::optional<int>& band) {
    return !band || std::abs(i - j) <= *band;
}

void check_band(std::size_t nx, std::size_t ny, const std::optional<int>& band) {
    if (band && *band < std::abs(static_cast<long>(nx) - static_cast<long>(ny)))
        throw ValidationError("Sakoe-Chiba band " + std::to_string(*band) +
                              " admits no alignment path for lengths " + std::to_string(nx) +
                              " and " + std::to_string(ny));
}

// Full cumulative-cost matrix; shared by distance and alignment.
std::vector<std::vector<double>> dtw_matrix(std::span<const double> x,
                                            std::span<const double> y,
                                            const std::optional<int>& band) {
    if (x.empty() || y.empty()) throw ValidationError("dtw: empty sequence");
    check_band(x.size(), y.size(), band);
    const int nx = static_cast<int>(x.size()), ny = static_cast<int>(y.size());
    std::vector<std::vector<double>> D(nx, std::vector<double>(ny, kInf));
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            if (!in_band(i, j, band)) continue;
            const double d = x[i] - y[j];
            const double cost = d * d;
            if (i == 0 && j == 0) {
                D[i][j] = cost;
                continue;
            }
            double best = kInf;
            if (i > 0 && j > 0) best = std::min(best, D[i - 1][j - 1]);
            if (i > 0) best = std::min(best, D[i - 1][j]);
            if (j > 0) best = std::min(best, D[i][j - 1]);
            D[i][j] = best + cost;
        }
    }
    return D;
}

} // namespace

NormStats pooled_stats(std::span<const MetricSeries> series) {
    NormStats st;
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    st.min = kInf;
    st.max = -kInf;
    for (const auto& s : series) {
        for (double v : s.values) {
            sum += v;
            sumsq += v * v;
            st.min = std::min(st.min, v);
            st.max = std::max(st.max, v);
            ++n;
        }
    }
    if (n == 0) {
        st.degenerate = true;
        st.min = st.max = 0.0;
        return st;
    }
    st.mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - st.mean * st.mean);
    st.sd = std::sqrt(var);
    if (st.sd <= 0.0 || st.max - st.min <= 0.0) st.degenerate = true;
    return st;
}

MetricSeries normalize(const MetricSeries& s, const NormStats& stats, NormalizeMode mode) {
    MetricSeries out = s;
    if (stats.degenerate) return out; // flagged pass-through
    for (double& v : out.values) {
        if (mode == NormalizeMode::zscore)
            v = (v - stats.mean) / stats.sd;
        else
            v = (v - stats.min) / (stats.max - stats.min);
    }
    return out;
}

double dtw_distance(std::span<const double> x, std::span<const double> y,
                    std::optional<int> band) {
    const auto D = dtw_matrix(x, y, band);
    return std::sqrt(D.back().back());
}

DtwAlignment dtw_align(std::span<const double> x, std::span<const double> y,
                       std::optional<int> band) {
    const auto D = dtw_matrix(x, y, band);
    DtwAlignment out;
    out.distance = std::sqrt(D.back().back());
    int i = static_cast<int>(x.size()) - 1, j = static_cast<int>(y.size()) - 1;
    out.path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        // Deterministic tie-break: diagonal, then up, then left.
        double best = kInf;
        int bi = i, bj = j;
        if (i > 0 && j > 0 && D[i - 1][j - 1] <= best) {
            best = D[i - 1][j - 1];
            bi = i - 1;
            bj = j - 1;
        }
        if (i > 0 && D[i - 1][j] < best) {
            best = D[i - 1][j];
            bi = i - 1;
            bj = j;
        }
        if (j > 0 && D[i][j - 1] < best) {
            bi = i;
            bj = j - 1;
        }
        i = bi;
        j = bj;
        out.path.emplace_back(i, j);
    }
    std::reverse(out.path.begin(), out.path.end());
    return out;
}

std::vector<double> resample_linear(std::span<const double> v, int length) {
    if (v.empty()) throw ValidationError("resample: empty sequence");
    if (length <= 0) throw ValidationError("resample: length must be positive");
    const int n = static_cast<int>(v.size());
    if (length == 1) return {v[(n - 1) / 2]};
    std::vector<double> out(length);
    for (int i = 0; i < length; ++i) {
        const double t = static_cast<double>(i) * (n - 1) / (length - 1);
        const int lo = static_cast<int>(std::floor(t));
        const int hi = std::min(lo + 1, n - 1);
        const double frac = t - lo;
        out[i] = v[lo] * (1.0 - frac) + v[hi] * frac;
    }
    return out;
}

namespace {

double member_inertia(const std::vector<std::vector<double>>& members,
                      const std::vector<double>& centroid, const std::optional<int>& band) {
    double total = 0.0;
    for (const auto& m : members) {
        const double d = dtw_distance(m, centroid, band);
        total += d * d;
    }
    return total;
}

} // namespace

std::vector<double> dba_refine(const std::vector<std::vector<double>>& members,
                               std::vector<double> centroid, int max_iter, double tol,
                               std::optional<int> band) {
    if (members.empty()) throw ValidationError("dba: no members");
    double prev = member_inertia(members, centroid, band);
    for (int it = 0; it < max_iter; ++it) {
        const std::size_t L = centroid.size();
        std::vector<double> sums(L, 0.0);
        std::vector<int> counts(L, 0);
        for (const auto& m : members) {
            const auto al = dtw_align(m, centroid, band);
            for (const auto& [mi, ci] : al.path) {
                sums[ci] += m[mi];
                counts[ci] += 1;
            }
        }
        std::vector<double> next(L);
        for (std::size_t i = 0; i < L; ++i)
            next[i] = counts[i] > 0 ? sums[i] / counts[i] : centroid[i];
        const double cost = member_inertia(members, next, band);
        if (cost > prev) break; // floating-point guard; theory says non-increasing
        centroid = std::move(next);
        if (prev - cost < tol) return centroid;
        prev = cost;
    }
    return centroid;
}

std::vector<double> dba_centroid(const std::vector<std::vector<double>>& members, int length,
                                 int max_iter, double tol) {
    if (members.empty()) throw ValidationError("dba: no members");
    // Medoid start: member minimizing summed squared DTW to the others.
    std::size_t medoid = 0;
    double best = kInf;
    for (std::size_t i = 0; i < members.size(); ++i) {
        double total = 0.0;
        for (std::size_t j = 0; j < members.size(); ++j) {
            if (i == j) continue;
            const double d = dtw_distance(members[i], members[j]);
            total += d * d;
        }
        if (total < best) {
            best = total;
            medoid = i;
        }
    }
    return dba_refine(members, resample_linear(members[medoid], length), max_iter, tol);
}

namespace {

struct KmeansRun {
    std::vector<int> assignments;
    std::vector<std::vector<double>> centroids;
    double inertia = kInf;
    std::vector<double> trace;
};

int nearest_centroid(const std::vector<double>& values,
                     const std::vector<std::vector<double>>& centroids,
                     const std::optional<int>& band, double* dist_out) {
    int best = 0;
    double best_d = kInf;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
        const double d = dtw_distance(values, centroids[c], band);
        if (d < best_d - 1e-15) { // strict improvement; ties keep lowest index
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    if (dist_out) *dist_out = best_d;
    return best;
}

KmeansRun run_kmeans_once(const std::vector<const std::vector<double>*>& data, int k,
                          const KmeansOptions& opts, Rng rng, int target_len) {
    const int n = static_cast<int>(data.size());
    KmeansRun run;

    // k-means++ seeding under squared DTW.
    std::vector<int> chosen;
    chosen.push_back(rng.uniform_int(n));
    std::vector<double> d2(n);
    for (int i = 0; i < n; ++i) {
        const double d = dtw_distance(*data[i], *data[chosen[0]], opts.band);
        d2[i] = d * d;
    }
    while (static_cast<int>(chosen.size()) < k) {
        double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        int pick;
        if (total <= 0.0) {
            pick = rng.uniform_int(n); // all mass at chosen points already
        } else {
            pick = rng.discrete(d2);
        }
        chosen.push_back(pick);
        for (int i = 0; i < n; ++i) {
            const double d = dtw_distance(*data[i], *data[pick], opts.band);
            d2[i] = std::min(d2[i], d * d);
        }
    }
    run.centroids.reserve(k);
    for (int c : chosen) run.centroids.push_back(resample_linear(*data[c], target_len));

    std::vector<int> assign(n, -1), prev_assign;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        prev_assign = assign;
        std::vector<double> dist(n);
        for (int i = 0; i < n; ++i)
            assign[i] = nearest_centroid(*data[i], run.centroids, opts.band, &dist[i]);

        // Re-seed empty clusters with the farthest point (ties: lowest index),
        // stealing only from clusters that keep at least one member.
        std::vector<int> counts(k, 0);
        for (int a : assign) counts[a]++;
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int far = -1;
            for (int i = 0; i < n; ++i) {
                if (counts[assign[i]] < 2) continue;
                if (far < 0 || dist[i] > dist[far]) far = i;
            }
            if (far < 0) continue; // cannot happen for n >= k, kept as a guard
            counts[assign[far]] -= 1;
            counts[c] += 1;
            run.centroids[c] = resample_linear(*data[far], target_len);
            assign[far] = c;
            dist[far] = 0.0;
        }

        for (int c = 0; c < k; ++c) {
            std::vector<std::vector<double>> members;
            for (int i = 0; i < n; ++i)
                if (assign[i] == c) members.push_back(*data[i]);
            run.centroids[c] = dba_refine(members, run.centroids[c], opts.dba_max_iter,
                                          opts.dba_tol, opts.band);
        }

        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = dtw_distance(*data[i], run.centroids[assign[i]], opts.band);
            inertia += d * d;
        }
        run.trace.push_back(inertia);
        run.inertia = inertia;
        if (assign == prev_assign) break;
    }
    run.assignments = std::move(assign);
    return run;
}

std::vector<double> silhouette_samples(const std::vector<const std::vector<double>*>& data,
                                       const std::vector<int>& assign, int k,
                                       const std::optional<int>& band) {
    const int n = static_cast<int>(data.size());
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            dist[i][j] = dist[j][i] = dtw_distance(*data[i], *data[j], band);

    std::vector<int> sizes(k, 0);
    for (int a : assign) sizes[a]++;

    std::vector<double> s(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (sizes[assign[i]] <= 1) continue; // singleton: silhouette 0
        double a_sum = 0.0;
        std::vector<double> b_sum(k, 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (assign[j] == assign[i])
                a_sum += dist[i][j];
            else
                b_sum[assign[j]] += dist[i][j];
        }
        const double a = a_sum / (sizes[assign[i]] - 1);
        double b = kInf;
        for (int c = 0; c < k; ++c) {
            if (c == assign[i] || sizes[c] == 0) continue;
            b = std::min(b, b_sum[c] / sizes[c]);
        }
        const double denom = std::max(a, b);
        s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return s;
}

} // namespace

ClusteringResult kmeans_dtw(const std::vector<MetricSeries>& series, int k,
                            const KmeansOptions& opts) {
    if (k < 2) throw ValidationError("kmeans: k must be >= 2");
    std::vector<const std::vector<double>*> data;
    std::vector<int> data_idx;
    std::vector<int> lengths;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].values.size() < 2) continue; // ineligible, reported unclustered
        for (double v : series[i].values)
            if (!std::isfinite(v))
                throw ValidationError("kmeans: non-finite value in series for participant " +
                                      series[i].participant_id);
        data.push_back(&series[i].values);
        data_idx.push_back(static_cast<int>(i));
        lengths.push_back(static_cast<int>(series[i].values.size()));
    }
    const int n = static_cast<int>(data.size());
    if (n < k)
        throw ValidationError("kmeans: k=" + std::to_string(k) + " exceeds the " +
                              std::to_string(n) + " eligible series");

    // One centroid length per run keeps DBA warm starts and the inertia
    // monotonicity guarantee intact: the median eligible length.
    std::vector<int> sorted_lengths = lengths;
    std::sort(sorted_lengths.begin(), sorted_lengths.end());
    const int target_len = sorted_lengths[(sorted_lengths.size() - 1) / 2];

    const Rng root(opts.seed);
    KmeansRun best;
    for (int r = 0; r < opts.restarts; ++r) {
        KmeansRun run = run_kmeans_once(data, k, opts, root.derive(r), target_len);
        if (run.inertia < best.inertia) best = std::move(run);
    }

    // Canonical labels: ascending centroid mean.
    std::vector<double> cmeans(k);
    for (int c = 0; c < k; ++c)
        cmeans[c] = std::accumulate(best.centroids[c].begin(), best.centroids[c].end(), 0.0) /
                    static_cast<double>(best.centroids[c].size());
    std::vector<int> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return cmeans[a] < cmeans[b]; });
    std::vector<int> relabel(k);
    for (int c = 0; c < k; ++c) relabel[order[c]] = c;

    ClusteringResult res;
    res.metric = series.empty() ? std::string{} : series.front().metric;
    res.k = k;
    res.seed = opts.seed;
    res.restarts = opts.restarts;
    res.inertia = best.inertia;
    res.inertia_trace = std::move(best.trace);
    res.assignments.assign(series.size(), -1);
    res.centroids.resize(k);
    for (int c = 0; c < k; ++c) res.centroids[relabel[c]] = best.centroids[c];
    std::vector<int> assign(n);
    for (int i = 0; i < n; ++i) {
        assign[i] = relabel[best.assignments[i]];
        res.assignments[data_idx[i]] = assign[i];
    }

    const auto samples = silhouette_samples(data, assign, k, opts.band);
    res.sample_silhouettes.assign(series.size(), 0.0);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        res.sample_silhouettes[data_idx[i]] = samples[i];
        sum += samples[i];
    }
    res.silhouette = n > 0 ? sum / n : 0.0;
    res.degenerate_structure = res.silhouette <= 0.0;
    return res;
}

ClusteringResult select_k(const std::vector<MetricSeries>& series,
                          const std::vector<int>& k_candidates, const KmeansOptions& opts) {
    if (k_candidates.empty()) throw ValidationError("select_k: no candidates");
    std::vector<int> ks = k_candidates;
    std::sort(ks.begin(), ks.end());
    bool have = false;
    ClusteringResult best;
    for (int k : ks) {
        ClusteringResult r = kmeans_dtw(series, k, opts);
        // Ties break toward smaller k (strict improvement required).
        if (!have || r.silhouette > best.silhouette + 1e-12) {
            best = std::move(r);
            have = true;
        }
    }
    best.low_confidence = best.silhouette < 0.35;
    return best;
}

} // namespace gazenet::tsc
