#include "oracles.hpp"
#include "gazenet/synth.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numeric>

namespace oracles {

using gazenet::graph::GazeNetwork;

gazenet::graph::GazeNetwork make_network(int n, const EdgeMap& edges) {
    GazeNetwork net;
    for (int i = 0; i < n; ++i) net.aois.push_back(gazenet::synth::aoi_label(i));
    net.fixation_counts.assign(n, 1);
    net.durations_ms.assign(n, 0);
    net.edges = edges;
    return net;
}

std::vector<std::vector<int>> simple_adj(int n, const EdgeMap& edges) {
    std::vector<std::vector<int>> adj(n);
    for (const auto& [k, m] : edges)
        if (k.first != k.second) adj[k.first].push_back(k.second);
    for (auto& a : adj) {
        std::sort(a.begin(), a.end());
        a.erase(std::unique(a.begin(), a.end()), a.end());
    }
    return adj;
}

double bf_avg_betweenness(int n, const EdgeMap& edges) {
    if (n < 3) return 0.0;
    const auto adj = simple_adj(n, edges);
    std::vector<double> credit(n, 0.0);

    for (int s = 0; s < n; ++s) {
        for (int t = 0; t < n; ++t) {
            if (s == t) continue;
            // All simple paths s -> t, keeping only the shortest ones.
            std::vector<std::vector<int>> best_paths;
            std::size_t best_len = std::numeric_limits<std::size_t>::max();
            std::vector<int> path{s};
            std::vector<bool> on_path(n, false);
            on_path[s] = true;
            std::function<void(int)> dfs = [&](int v) {
                if (path.size() > best_len) return;
                if (v == t) {
                    if (path.size() < best_len) {
                        best_len = path.size();
                        best_paths.clear();
                    }
                    if (path.size() == best_len) best_paths.push_back(path);
                    return;
                }
                for (int w : adj[v]) {
                    if (on_path[w]) continue;
                    on_path[w] = true;
                    path.push_back(w);
                    dfs(w);
                    path.pop_back();
                    on_path[w] = false;
                }
            };
            dfs(s);
            if (best_paths.empty()) continue;
            const double share = 1.0 / best_paths.size();
            for (const auto& p : best_paths)
                for (std::size_t i = 1; i + 1 < p.size(); ++i) credit[p[i]] += share;
        }
    }
    const double norm = static_cast<double>(n - 1) * (n - 2);
    double sum = 0.0;
    for (double c : credit) sum += c / norm;
    return sum / n;
}

double bf_avg_closeness(int n, const EdgeMap& edges) {
    if (n == 0) return 0.0;
    const auto adj = simple_adj(n, edges);
    const int INF = 1 << 20;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, INF));
    for (int i = 0; i < n; ++i) d[i][i] = 0;
    for (int u = 0; u < n; ++u)
        for (int v : adj[u]) d[u][v] = 1;
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);

    double sum = 0.0;
    for (int v = 0; v < n; ++v) {
        int reach = 0;
        long total = 0;
        for (int u = 0; u < n; ++u)
            if (d[u][v] < INF) {
                ++reach;
                total += d[u][v];
            }
        if (reach > 1 && total > 0 && n > 1) {
            const double r1 = reach - 1;
            sum += (r1 / (n - 1)) * (r1 / static_cast<double>(total));
        }
    }
    return sum / n;
}

namespace {

bool connected_after_removal(int n, const std::vector<std::vector<int>>& adj,
                             unsigned removed_mask) {
    // Undirected connectivity of the surviving vertices.
    std::vector<std::vector<bool>> und(n, std::vector<bool>(n, false));
    for (int u = 0; u < n; ++u)
        for (int v : adj[u]) und[u][v] = und[v][u] = true;

    int start = -1, alive = 0;
    for (int v = 0; v < n; ++v)
        if (!(removed_mask & (1u << v))) {
            ++alive;
            if (start < 0) start = v;
        }
    if (alive <= 1) return true;
    std::deque<int> queue{start};
    std::vector<bool> vis(n, false);
    vis[start] = true;
    int seen = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        ++seen;
        for (int w = 0; w < n; ++w)
            if (und[v][w] && !vis[w] && !(removed_mask & (1u << w))) {
                vis[w] = true;
                queue.push_back(w);
            }
    }
    return seen == alive;
}

} // namespace

int bf_node_connectivity(int n, const EdgeMap& edges) {
    if (n <= 1) return 0;
    const auto adj = simple_adj(n, edges);
    for (int k = 0; k <= n - 2; ++k) {
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            if (__builtin_popcount(mask) != k) continue;
            if (n - k < 2) continue;
            if (!connected_after_removal(n, adj, mask)) return k;
        }
    }
    return n - 1;
}

std::vector<double> dense_pagerank(int n, const EdgeMap& edges, double damping) {
    std::vector<double> out_w(n, 0.0);
    for (const auto& [k, m] : edges) out_w[k.first] += static_cast<double>(m);

    // (I - d K) pr = (1-d)/n * 1,  K[v][u] = P(u->v) or 1/n for dangling u.
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
    for (int u = 0; u < n; ++u)
        if (out_w[u] == 0.0)
            for (int v = 0; v < n; ++v) K(v, u) = 1.0 / n;
    for (const auto& [k, m] : edges)
        K(k.second, k.first) += static_cast<double>(m) / out_w[k.first];

    const Eigen::MatrixXd A =
        Eigen::MatrixXd::Identity(n, n) - damping * K;
    const Eigen::VectorXd b = Eigen::VectorXd::Constant(n, (1.0 - damping) / n);
    const Eigen::VectorXd pr = A.partialPivLu().solve(b);
    return {pr.data(), pr.data() + n};
}

std::optional<std::vector<double>> dense_eigenvector(int n, const EdgeMap& edges,
                                                     double min_gap) {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, n); // B = A^T (in-edge convention)
    for (const auto& [k, m] : edges) B(k.second, k.first) += static_cast<double>(m);

    Eigen::EigenSolver<Eigen::MatrixXd> es(B);
    if (es.info() != Eigen::Success) return std::nullopt;
    const auto& vals = es.eigenvalues();
    int dom = 0;
    for (int i = 1; i < n; ++i)
        if (std::abs(vals(i)) > std::abs(vals(dom))) dom = i;
    const double mag = std::abs(vals(dom));
    if (mag <= 0.0) return std::nullopt;
    if (std::fabs(vals(dom).imag()) > 1e-9 * mag) return std::nullopt;
    double second = 0.0;
    for (int i = 0; i < n; ++i)
        if (i != dom) second = std::max(second, std::abs(vals(i)));
    if (second > (1.0 - min_gap) * mag) return std::nullopt; // slow/ambiguous case

    Eigen::VectorXd v = es.eigenvectors().col(dom).real();
    if (v.sum() < 0.0) v = -v;
    for (int i = 0; i < n; ++i)
        if (v(i) < -1e-9) return std::nullopt; // not a Perron vector
    v = v.cwiseMax(0.0);
    v.normalize();
    return std::vector<double>(v.data(), v.data() + n);
}

namespace {

double dtw_paths(std::span<const double> x, std::span<const double> y, std::size_t i,
                 std::size_t j) {
    const double d = x[i] - y[j];
    const double cost = d * d;
    if (i + 1 == x.size() && j + 1 == y.size()) return cost;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < x.size() && j + 1 < y.size())
        best = std::min(best, dtw_paths(x, y, i + 1, j + 1));
    if (i + 1 < x.size()) best = std::min(best, dtw_paths(x, y, i + 1, j));
    if (j + 1 < y.size()) best = std::min(best, dtw_paths(x, y, i, j + 1));
    return cost + best;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fb, double fm, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * eps)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, fa, fm, flm, eps / 2.0, depth - 1) +
           adaptive_simpson(f, m, b, fm, fb, frm, eps / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return adaptive_simpson(f, a, b, fa, fb, fm, eps, 40);
}

} // namespace

double dtw_bruteforce(std::span<const double> x, std::span<const double> y) {
    return std::sqrt(dtw_paths(x, y, 0, 0));
}

double ibeta_quadrature(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    if (x > a / (a + b)) return 1.0 - ibeta_quadrature(b, a, 1.0 - x);
    // Substitution t = u^2 removes the t^(a-1) endpoint singularity for a >= 1/2.
    const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    auto f = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double t = u * u;
        if (t >= 1.0) return 0.0;
        return 2.0 * std::exp((2.0 * a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-t) -
                              lbeta);
    };
    return integrate(f, 0.0, std::sqrt(x), 1e-13);
}

double normal_cdf_quadrature(double z) {
    if (z < 0.0) return 1.0 - normal_cdf_quadrature(-z);
    auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
    return 0.5 + integrate(phi, 0.0, z, 1e-14);
}

SequenceEntropy entropy_from_sequence(const std::vector<std::string>& seq) {
    SequenceEntropy out;
    std::map<std::string, long> counts;
    for (const auto& a : seq) counts[a] += 1;
    const double total = static_cast<double>(seq.size());
    for (const auto& [a, c] : counts) {
        const double p = c / total;
        out.stationary -= p * std::log(p);
    }

    // Own collapse pass + pair tally.
    std::vector<std::string> walk;
    for (const auto& a : seq)
        if (walk.empty() || walk.back() != a) walk.push_back(a);
    std::map<std::string, std::map<std::string, long>> pairs;
    std::map<std::string, long> row_total;
    for (std::size_t i = 1; i < walk.size(); ++i) {
        pairs[walk[i - 1]][walk[i]] += 1;
        row_total[walk[i - 1]] += 1;
    }
    for (const auto& [src, row] : pairs) {
        double h_row = 0.0;
        for (const auto& [dst, c] : row) {
            const double p = static_cast<double>(c) / row_total[src];
            h_row -= p * std::log(p);
        }
        out.transition += (counts[src] / total) * h_row;
    }
    return out;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    auto ranks = [](std::span<const double> v) {
        const std::size_t n = v.size();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return v[a] < v[b];
        });
        std::vector<double> r(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

EdgeMap random_multigraph(gazenet::Rng& rng, int n, double edge_prob, bool self_loops) {
    EdgeMap edges;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
            if (u == v && !self_loops) continue;
            if (rng.uniform() < edge_prob) edges[{u, v}] = 1 + rng.uniform_int(5);
        }
    return edges;
}

EdgeMap random_strongly_connected(gazenet::Rng& rng, int n, double extra_prob) {
    EdgeMap edges;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    for (int i = 0; i < n; ++i)
        edges[{perm[i], perm[(i + 1) % n]}] = 1 + rng.uniform_int(5);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (u != v && rng.uniform() < extra_prob) edges[{u, v}] = 1 + rng.uniform_int(5);
    return edges;
}

} // namespace oracles
