#include "gazenet/metrics.hpp"
#include "gazenet/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>

namespace gazenet::metrics {

using graph::GazeNetwork;
using graph::TransitionModel;

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names = {
        "n_nodes",      "n_edges",        "avg_degree",        "avg_betweenness",
        "avg_closeness", "avg_pagerank",  "avg_eigenvector",   "density",
        "reciprocity",  "node_connectivity", "stationary_entropy", "transition_entropy"};
    return names;
}

const std::vector<std::string>& clustering_metrics() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& n : metric_names())
            if (n != "avg_eigenvector") v.push_back(n);
        return v;
    }();
    return names;
}

double metric_value(const MetricVector& v, const std::string& name) {
    if (name == "n_nodes") return static_cast<double>(v.n_nodes);
    if (name == "n_edges") return static_cast<double>(v.n_edges);
    if (name == "avg_degree") return v.avg_degree;
    if (name == "avg_betweenness") return v.avg_betweenness;
    if (name == "avg_closeness") return v.avg_closeness;
    if (name == "avg_pagerank") return v.avg_pagerank;
    if (name == "avg_eigenvector") return v.avg_eigenvector;
    if (name == "density") return v.density;
    if (name == "reciprocity") return v.reciprocity;
    if (name == "node_connectivity") return static_cast<double>(v.node_connectivity);
    if (name == "stationary_entropy") return v.stationary_entropy;
    if (name == "transition_entropy") return v.transition_entropy;
    throw ValidationError("unknown metric: " + name);
}

int n_nodes(const GazeNetwork& net) { return net.node_count(); }

std::int64_t n_edges(const GazeNetwork& net) { return net.edge_multiplicity_total(); }

double avg_degree_centrality(const GazeNetwork& net) {
    const int n = net.node_count();
    if (n < 2) return 0.0;
    std::vector<int> degree(n, 0);
    for (const auto& [k, m] : net.edges) {
        if (k.first == k.second) continue;
        degree[k.first] += 1;
        degree[k.second] += 1;
    }
    double sum = 0.0;
    for (int d : degree) sum += static_cast<double>(d) / (n - 1);
    return sum / n;
}

std::vector<double> betweenness_centrality(const GazeNetwork& net) {
    // Brandes on the unweighted distinct-pair digraph.
    const int n = net.node_count();
    std::vector<double> bc(n, 0.0);
    if (n < 3) return bc;
    const auto adj = net.simple_out_adj();

    for (int s = 0; s < n; ++s) {
        std::vector<std::vector<int>> pred(n);
        std::vector<double> sigma(n, 0.0);
        std::vector<int> dist(n, -1);
        std::vector<int> stack;
        stack.reserve(n);
        sigma[s] = 1.0;
        dist[s] = 0;
        std::deque<int> queue{s};
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            stack.push_back(v);
            for (int w : adj[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if (dist[w] == dist[v] + 1) {
                    sigma[w] += sigma[v];
                    pred[w].push_back(v);
                }
            }
        }
        std::vector<double> delta(n, 0.0);
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
            int w = *it;
            for (int v : pred[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) bc[w] += delta[w];
        }
    }
    const double norm = static_cast<double>(n - 1) * (n - 2);
    for (double& b : bc) b /= norm;
    return bc;
}

double avg_betweenness_centrality(const GazeNetwork& net) {
    const int n = net.node_count();
    if (n < 3) return 0.0;
    auto bc = betweenness_centrality(net);
    return std::accumulate(bc.begin(), bc.end(), 0.0) / n;
}

std::vector<double> closeness_centrality(const GazeNetwork& net) {
    // Wasserman-Faust closeness on incoming distances:
    //   ((r-1)/(n-1)) * ((r-1)/sum d(u,v)), r = #nodes that reach v.
    const int n = net.node_count();
    std::vector<double> cc(n, 0.0);
    if (n == 0) return cc;
    const auto radj = net.simple_in_adj();
    for (int v = 0; v < n; ++v) {
        std::vector<int> dist(n, -1);
        dist[v] = 0;
        std::deque<int> queue{v};
        std::int64_t total = 0;
        int reached = 0;
        while (!queue.empty()) {
            int x = queue.front();
            queue.pop_front();
            ++reached;
            total += dist[x];
            for (int u : radj[x]) {
                if (dist[u] < 0) {
                    dist[u] = dist[x] + 1;
                    queue.push_back(u);
                }
            }
        }
        if (reached > 1 && total > 0 && n > 1) {
            const double r1 = reached - 1;
            cc[v] = (r1 / (n - 1)) * (r1 / static_cast<double>(total));
        }
    }
    return cc;
}

double avg_closeness_centrality(const GazeNetwork& net) {
    const int n = net.node_count();
    if (n == 0) return 0.0;
    auto cc = closeness_centrality(net);
    return std::accumulate(cc.begin(), cc.end(), 0.0) / n;
}

CentralityVector pagerank(const GazeNetwork& net, double damping, double tol, int max_iter) {
    const int n = net.node_count();
    if (n == 0) throw ValidationError("empty network");
    std::vector<double> out_w(n, 0.0);
    for (const auto& [k, m] : net.edges) out_w[k.first] += static_cast<double>(m);

    std::vector<double> x(n, 1.0 / n), next(n, 0.0);
    CentralityVector result;
    for (int it = 0; it < max_iter; ++it) {
        double dangling = 0.0;
        for (int u = 0; u < n; ++u)
            if (out_w[u] == 0.0) dangling += x[u];
        const double base = (1.0 - damping) / n + damping * dangling / n;
        std::fill(next.begin(), next.end(), base);
        for (const auto& [k, m] : net.edges)
            next[k.second] += damping * x[k.first] * static_cast<double>(m) / out_w[k.first];
        double l1 = 0.0;
        for (int i = 0; i < n; ++i) l1 += std::fabs(next[i] - x[i]);
        x.swap(next);
        if (l1 < tol) {
            result.values = x;
            result.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
            result.iterations = it + 1;
            return result;
        }
    }
    throw ConvergenceError("pagerank did not converge in " + std::to_string(max_iter) +
                               " iterations",
                           x);
}

CentralityVector eigenvector_centrality(const GazeNetwork& net, double tol, int max_iter) {
    const int n = net.node_count();
    if (n == 0) throw ValidationError("empty network");

    bool has_weight = false;
    for (const auto& [k, m] : net.edges)
        if (m > 0) has_weight = true;
    const double uniform = 1.0 / std::sqrt(static_cast<double>(n));
    CentralityVector result;
    if (!has_weight) {
        // Zero adjacency: every node is equivalent.
        result.values.assign(n, uniform);
        result.mean = uniform;
        return result;
    }

    // Plain power iteration on the in-edge weighted adjacency, L2-normalized.
    std::vector<double> x(n, uniform), y(n);
    for (int it = 0; it < max_iter; ++it) {
        std::fill(y.begin(), y.end(), 0.0);
        for (const auto& [k, m] : net.edges)
            y[k.second] += static_cast<double>(m) * x[k.first];
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        if (norm == 0.0)
            throw ConvergenceError(
                "eigenvector centrality undefined: adjacency is nilpotent (acyclic "
                "network); consider pagerank as a fallback",
                x);
        double l1 = 0.0;
        for (int i = 0; i < n; ++i) {
            y[i] /= norm;
            l1 += std::fabs(y[i] - x[i]);
        }
        x.swap(y);
        if (l1 < tol) {
            result.values = x;
            result.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
            result.iterations = it + 1;
            return result;
        }
    }
    throw ConvergenceError(
        "eigenvector centrality did not converge (periodic structure?); consider "
        "pagerank as a fallback",
        x);
}

double density(const GazeNetwork& net) {
    const int n = net.node_count();
    if (n <= 1) return 0.0;
    return static_cast<double>(net.distinct_edge_count()) /
           (static_cast<double>(n) * (n - 1));
}

double reciprocity(const GazeNetwork& net) {
    std::int64_t distinct = 0, mutual = 0;
    for (const auto& [k, m] : net.edges) {
        if (k.first == k.second) continue;
        ++distinct;
        if (net.edges.count({k.second, k.first})) ++mutual;
    }
    if (distinct == 0) return 0.0;
    return static_cast<double>(mutual) / static_cast<double>(distinct);
}

namespace {

// Undirected simple graph view (distinct pairs, self-loops dropped).
std::vector<std::vector<int>> undirected_adj(const GazeNetwork& net) {
    const int n = net.node_count();
    std::vector<std::vector<bool>> seen(n, std::vector<bool>(n, false));
    std::vector<std::vector<int>> adj(n);
    for (const auto& [k, m] : net.edges) {
        int u = k.first, v = k.second;
        if (u == v || seen[u][v]) continue;
        seen[u][v] = seen[v][u] = true;
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

bool undirected_connected(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    if (n == 0) return false;
    std::vector<bool> vis(n, false);
    std::deque<int> queue{0};
    vis[0] = true;
    int count = 0;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        ++count;
        for (int w : adj[v])
            if (!vis[w]) {
                vis[w] = true;
                queue.push_back(w);
            }
    }
    return count == n;
}

// Minimum s-t vertex cut via node-splitting max-flow (Edmonds-Karp). Each
// internal node v becomes v_in -> v_out with capacity 1; undirected edges get
// capacity n in both directions between the splits.
int min_vertex_cut(const std::vector<std::vector<int>>& adj, int s, int t) {
    const int n = static_cast<int>(adj.size());
    const int N = 2 * n; // v_in = 2v, v_out = 2v+1
    const int INF = n;
    std::vector<std::vector<int>> cap(N, std::vector<int>(N, 0));
    for (int v = 0; v < n; ++v) cap[2 * v][2 * v + 1] = (v == s || v == t) ? INF : 1;
    for (int u = 0; u < n; ++u)
        for (int v : adj[u]) cap[2 * u + 1][2 * v] = INF;

    const int src = 2 * s + 1, dst = 2 * t;
    int flow = 0;
    while (true) {
        std::vector<int> parent(N, -1);
        parent[src] = src;
        std::deque<int> queue{src};
        while (!queue.empty() && parent[dst] < 0) {
            int v = queue.front();
            queue.pop_front();
            for (int w = 0; w < N; ++w)
                if (parent[w] < 0 && cap[v][w] > 0) {
                    parent[w] = v;
                    queue.push_back(w);
                }
        }
        if (parent[dst] < 0) break;
        int aug = INF;
        for (int v = dst; v != src; v = parent[v]) aug = std::min(aug, cap[parent[v]][v]);
        for (int v = dst; v != src; v = parent[v]) {
            cap[parent[v]][v] -= aug;
            cap[v][parent[v]] += aug;
        }
        flow += aug;
        if (flow >= n) break; // cannot exceed n-2 in a valid cut anyway
    }
    return flow;
}

} // namespace

int node_connectivity(const GazeNetwork& net) {
    const int n = net.node_count();
    if (n <= 1) return 0;
    const auto adj = undirected_adj(net);
    if (!undirected_connected(adj)) return 0;

    std::vector<std::vector<bool>> adjacent(n, std::vector<bool>(n, false));
    for (int u = 0; u < n; ++u)
        for (int v : adj[u]) adjacent[u][v] = true;

    int best = n - 1; // complete graph convention
    for (int s = 0; s < n; ++s)
        for (int t = s + 1; t < n; ++t)
            if (!adjacent[s][t]) best = std::min(best, min_vertex_cut(adj, s, t));
    return best;
}

double stationary_entropy(const TransitionModel& tm) {
    double h = 0.0;
    for (double p : tm.pi)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double transition_entropy(const TransitionModel& tm) {
    const int n = static_cast<int>(tm.aois.size());
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        if (tm.sink[i]) continue; // sink rows contribute 0
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            const double p = tm.P[i][j];
            if (p > 0.0) row -= p * std::log(p);
        }
        h += tm.pi[i] * row;
    }
    return h;
}

MetricVector compute_all(const GazeNetwork& net, const ComputeConfig& cfg) {
    MetricVector v;
    v.trial = net.trial;
    v.n_nodes = n_nodes(net);
    v.n_edges = n_edges(net);
    const int n = v.n_nodes;
    if (n == 0) throw ValidationError("empty network");

    const auto tm = graph::transition_model(net, cfg.pi_source);
    v.stationary_entropy = stationary_entropy(tm);
    v.transition_entropy = transition_entropy(tm);

    if (n <= 1) {
        // Size-degenerate: centralities and structure default to 0.
        v.degenerate = true;
        return v;
    }

    auto wrap = [](const std::string& name, auto fn) {
        try {
            return fn();
        } catch (const ConvergenceError& e) {
            throw ConvergenceError(name + ": " + e.what(), e.last_iterate);
        } catch (const NumericalError& e) {
            throw NumericalError(name + ": " + e.what());
        }
    };

    v.avg_degree = avg_degree_centrality(net);
    v.avg_betweenness = avg_betweenness_centrality(net); // 0 with flag at n==2
    if (n == 2) v.degenerate = true;
    v.avg_closeness = avg_closeness_centrality(net);
    v.avg_pagerank = wrap("avg_pagerank", [&] {
                         return pagerank(net, cfg.pagerank_damping, cfg.pagerank_tol,
                                         cfg.pagerank_max_iter);
                     }).mean;
    try {
        v.avg_eigenvector =
            wrap("avg_eigenvector", [&] {
                return eigenvector_centrality(net, cfg.eigen_tol, cfg.eigen_max_iter);
            }).mean;
    } catch (const ConvergenceError&) {
        if (!cfg.eigen_zero_on_failure) throw;
        v.avg_eigenvector = 0.0;
        v.degenerate = true;
    }
    v.density = density(net);
    if (net.distinct_edge_count() == 0) v.degenerate = true;
    v.reciprocity = reciprocity(net);
    v.node_connectivity = node_connectivity(net);
    return v;
}

} // namespace gazenet::metrics
