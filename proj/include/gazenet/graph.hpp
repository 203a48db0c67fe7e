#pragma once

#include "gazenet/types.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace gazenet::graph {

// Weighted directed multigraph over the AOIs of one trial. Nodes are kept in
// lexicographic aoi_id order so every derived quantity and export is
// deterministic. Edge multiplicities are stored as (pair -> count); node
// weights are fixation counts from the ORIGINAL (uncollapsed) sequence.
struct GazeNetwork {
    TrialKey trial;
    std::vector<std::string> aois;
    std::vector<std::int64_t> fixation_counts;
    std::vector<std::int64_t> durations_ms;
    std::map<std::pair<int, int>, std::int64_t> edges;
    CollapsePolicy collapse_policy = CollapsePolicy::merge;

    int node_count() const { return static_cast<int>(aois.size()); }
    std::int64_t edge_multiplicity_total() const;
    int node_index(const std::string& aoi) const; // -1 when absent

    // Distinct-pair simple digraph with self-loops dropped (the view used by
    // the Freeman-family centralities, density and reciprocity).
    std::vector<std::vector<int>> simple_out_adj() const;
    std::vector<std::vector<int>> simple_in_adj() const;
    std::int64_t distinct_edge_count() const; // non-self distinct pairs

    friend bool operator==(const GazeNetwork& a, const GazeNetwork& b) {
        return a.trial == b.trial && a.aois == b.aois &&
               a.fixation_counts == b.fixation_counts && a.durations_ms == b.durations_ms &&
               a.edges == b.edges && a.collapse_policy == b.collapse_policy;
    }
};

// Row-stochastic transition matrix plus the empirical fixation distribution.
// Rows with no outgoing transitions are all-zero and flagged as sinks.
struct TransitionModel {
    std::vector<std::string> aois;
    std::vector<std::vector<double>> P;
    std::vector<double> pi;
    std::vector<bool> sink;
};

struct BuildConfig {
    CollapsePolicy collapse = CollapsePolicy::merge;
};

// Replaces maximal runs of identical adjacent AOIs by a single occurrence.
std::vector<std::string> collapse_consecutive(std::span<const std::string> seq);

GazeNetwork build_network(std::span<const std::string> aoi_seq,
                          std::span<const std::int64_t> durations_ms,
                          const BuildConfig& cfg = {}, const TrialKey& trial = {});
GazeNetwork build_network(std::span<const std::string> aoi_seq, const BuildConfig& cfg = {},
                          const TrialKey& trial = {});

TransitionModel transition_model(const GazeNetwork& net, PiSource source = PiSource::counts);

// Node-link JSON export (top-level keys `nodes` and `links`); lossless and
// byte-deterministic for a given network.
std::string to_node_link(const GazeNetwork& net);
GazeNetwork from_node_link(const std::string& json_text);

} // namespace gazenet::graph
