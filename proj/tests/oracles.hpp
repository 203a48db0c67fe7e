#pragma once

// Independent reference implementations used to verify the library. These
// deliberately use different algorithms than the production code: exhaustive
// path enumeration instead of Brandes, Floyd-Warshall instead of BFS, dense
// linear algebra instead of power iteration, exhaustive vertex-subset removal
// instead of max-flow, quadrature instead of continued fractions.

#include "gazenet/graph.hpp"
#include "gazenet/rng.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace oracles {

using EdgeMap = std::map<std::pair<int, int>, std::int64_t>;

// GazeNetwork over nodes a00..a(n-1) with unit fixation counts.
gazenet::graph::GazeNetwork make_network(int n, const EdgeMap& edges);

// Unweighted distinct-pair adjacency (self-loops dropped), as the oracles use it.
std::vector<std::vector<int>> simple_adj(int n, const EdgeMap& edges);

// Mean normalized betweenness via exhaustive simple-path enumeration.
double bf_avg_betweenness(int n, const EdgeMap& edges);

// Mean Wasserman-Faust incoming closeness via Floyd-Warshall distances.
double bf_avg_closeness(int n, const EdgeMap& edges);

// Vertex connectivity via exhaustive removal of vertex subsets.
int bf_node_connectivity(int n, const EdgeMap& edges);

// PageRank as the exact solution of the dense linear system.
std::vector<double> dense_pagerank(int n, const EdgeMap& edges, double damping);

// Dominant eigenvector of the in-edge weighted adjacency from a dense
// eigensolve; empty when the dominant eigenvalue is not real, simple and
// separated by the requested gap.
std::optional<std::vector<double>> dense_eigenvector(int n, const EdgeMap& edges,
                                                     double min_gap = 0.1);

// DTW via exhaustive enumeration of all monotone alignment paths.
double dtw_bruteforce(std::span<const double> x, std::span<const double> y);

// Regularized incomplete beta / normal CDF via adaptive Simpson quadrature.
double ibeta_quadrature(double a, double b, double x);
double normal_cdf_quadrature(double z);

// Stationary/transition entropy tallied directly from a raw AOI sequence
// (with its own collapse pass), independent of graph/metrics code.
struct SequenceEntropy {
    double stationary = 0.0;
    double transition = 0.0;
};
SequenceEntropy entropy_from_sequence(const std::vector<std::string>& seq);

// Spearman rank correlation (average ranks on ties).
double spearman_rho(std::span<const double> x, std::span<const double> y);

// Random graph suites (deterministic in the rng).
EdgeMap random_multigraph(gazenet::Rng& rng, int n, double edge_prob, bool self_loops);
// A strongly connected weighted digraph (random Hamiltonian cycle + extras).
EdgeMap random_strongly_connected(gazenet::Rng& rng, int n, double extra_prob);

} // namespace oracles
