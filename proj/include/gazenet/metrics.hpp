#pragma once

#include "gazenet/graph.hpp"
#include "gazenet/types.hpp"

#include <string>
#include <vector>

namespace gazenet::metrics {

// The per-trial measurement: basic counts, five averaged centralities,
// structural measures, and the two gaze entropies (natural log, unnormalized).
struct MetricVector {
    TrialKey trial;
    int n_nodes = 0;
    std::int64_t n_edges = 0; // total multiplicity
    double avg_degree = 0.0;
    double avg_betweenness = 0.0;
    double avg_closeness = 0.0;
    double avg_pagerank = 0.0;
    double avg_eigenvector = 0.0;
    double density = 0.0;
    double reciprocity = 0.0;
    int node_connectivity = 0;
    double stationary_entropy = 0.0;
    double transition_entropy = 0.0;
    // Set when a size-degenerate default (n<=2) or flagged fallback was used
    // in place of a computed value, so downstream series stay numeric.
    bool degenerate = false;
};

// Machine keys of the metric columns, in output order. The first 11 (all but
// avg_eigenvector) form the default clustering set.
const std::vector<std::string>& metric_names();     // all 12
const std::vector<std::string>& clustering_metrics(); // the 11-metric set
double metric_value(const MetricVector& v, const std::string& name);

struct ComputeConfig {
    PiSource pi_source = PiSource::counts;
    double pagerank_damping = 0.85;
    double pagerank_tol = 1e-10;
    int pagerank_max_iter = 200;
    double eigen_tol = 1e-10;
    int eigen_max_iter = 1000;
    // When true, a non-convergent eigenvector run is recorded as 0 with the
    // degenerate flag instead of raising; everything else still raises.
    bool eigen_zero_on_failure = false;
};

int n_nodes(const graph::GazeNetwork& net);
std::int64_t n_edges(const graph::GazeNetwork& net);
double avg_degree_centrality(const graph::GazeNetwork& net);
double avg_betweenness_centrality(const graph::GazeNetwork& net);
std::vector<double> betweenness_centrality(const graph::GazeNetwork& net);
double avg_closeness_centrality(const graph::GazeNetwork& net);
std::vector<double> closeness_centrality(const graph::GazeNetwork& net);

struct CentralityVector {
    std::vector<double> values;
    double mean = 0.0;
    int iterations = 0;
};
CentralityVector pagerank(const graph::GazeNetwork& net, double damping = 0.85,
                          double tol = 1e-10, int max_iter = 200);
CentralityVector eigenvector_centrality(const graph::GazeNetwork& net, double tol = 1e-10,
                                        int max_iter = 1000);

double density(const graph::GazeNetwork& net);
double reciprocity(const graph::GazeNetwork& net);
int node_connectivity(const graph::GazeNetwork& net);

double stationary_entropy(const graph::TransitionModel& tm);
double transition_entropy(const graph::TransitionModel& tm);

MetricVector compute_all(const graph::GazeNetwork& net, const ComputeConfig& cfg = {});

} // namespace gazenet::metrics
