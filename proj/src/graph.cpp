#include "gazenet/graph.hpp"
#include "gazenet/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <set>

namespace gazenet::graph {

using ordered_json = nlohmann::ordered_json;

std::int64_t GazeNetwork::edge_multiplicity_total() const {
    std::int64_t total = 0;
    for (const auto& [k, m] : edges) total += m;
    return total;
}

int GazeNetwork::node_index(const std::string& aoi) const {
    auto it = std::lower_bound(aois.begin(), aois.end(), aoi);
    if (it == aois.end() || *it != aoi) return -1;
    return static_cast<int>(it - aois.begin());
}

std::vector<std::vector<int>> GazeNetwork::simple_out_adj() const {
    std::vector<std::vector<int>> adj(aois.size());
    for (const auto& [k, m] : edges)
        if (k.first != k.second) adj[k.first].push_back(k.second);
    return adj; // map order keeps each list sorted
}

std::vector<std::vector<int>> GazeNetwork::simple_in_adj() const {
    std::vector<std::vector<int>> adj(aois.size());
    for (const auto& [k, m] : edges)
        if (k.first != k.second) adj[k.second].push_back(k.first);
    for (auto& v : adj) std::sort(v.begin(), v.end());
    return adj;
}

std::int64_t GazeNetwork::distinct_edge_count() const {
    std::int64_t n = 0;
    for (const auto& [k, m] : edges)
        if (k.first != k.second) ++n;
    return n;
}

std::vector<std::string> collapse_consecutive(std::span<const std::string> seq) {
    std::vector<std::string> out;
    out.reserve(seq.size());
    for (const auto& a : seq)
        if (out.empty() || out.back() != a) out.push_back(a);
    return out;
}

GazeNetwork build_network(std::span<const std::string> aoi_seq,
                          std::span<const std::int64_t> durations_ms, const BuildConfig& cfg,
                          const TrialKey& trial) {
    if (aoi_seq.empty()) throw ValidationError("empty trial");
    if (!durations_ms.empty() && durations_ms.size() != aoi_seq.size())
        throw ValidationError("durations length does not match fixation sequence");

    GazeNetwork net;
    net.trial = trial;
    net.collapse_policy = cfg.collapse;

    std::set<std::string> distinct(aoi_seq.begin(), aoi_seq.end());
    net.aois.assign(distinct.begin(), distinct.end());
    net.fixation_counts.assign(net.aois.size(), 0);
    net.durations_ms.assign(net.aois.size(), 0);

    // Node weights always come from the original, uncollapsed sequence.
    for (std::size_t i = 0; i < aoi_seq.size(); ++i) {
        int idx = net.node_index(aoi_seq[i]);
        net.fixation_counts[idx] += 1;
        if (!durations_ms.empty()) net.durations_ms[idx] += durations_ms[i];
    }

    std::vector<std::string> walk;
    if (cfg.collapse == CollapsePolicy::merge) {
        walk = collapse_consecutive(aoi_seq);
    } else {
        walk.assign(aoi_seq.begin(), aoi_seq.end());
    }
    for (std::size_t i = 1; i < walk.size(); ++i) {
        int u = net.node_index(walk[i - 1]);
        int v = net.node_index(walk[i]);
        net.edges[{u, v}] += 1;
    }
    return net;
}

GazeNetwork build_network(std::span<const std::string> aoi_seq, const BuildConfig& cfg,
                          const TrialKey& trial) {
    return build_network(aoi_seq, {}, cfg, trial);
}

TransitionModel transition_model(const GazeNetwork& net, PiSource source) {
    const int n = net.node_count();
    if (n == 0) throw ValidationError("empty network");

    TransitionModel tm;
    tm.aois = net.aois;
    tm.P.assign(n, std::vector<double>(n, 0.0));
    tm.pi.assign(n, 0.0);
    tm.sink.assign(n, true);

    std::vector<std::int64_t> out_mult(n, 0);
    for (const auto& [k, m] : net.edges) out_mult[k.first] += m;
    for (const auto& [k, m] : net.edges) {
        tm.P[k.first][k.second] =
            static_cast<double>(m) / static_cast<double>(out_mult[k.first]);
        tm.sink[k.first] = false;
    }

    const auto& weights =
        source == PiSource::counts ? net.fixation_counts : net.durations_ms;
    std::int64_t total = 0;
    for (auto w : weights) total += w;
    if (total <= 0)
        throw ValidationError(source == PiSource::durations
                                  ? "pi_source=durations but no durations available"
                                  : "network has no fixation weight");
    for (int i = 0; i < n; ++i)
        tm.pi[i] = static_cast<double>(weights[i]) / static_cast<double>(total);
    return tm;
}

std::string to_node_link(const GazeNetwork& net) {
    ordered_json doc;
    doc["trial"] = {{"participant_id", net.trial.participant_id},
                    {"semester", net.trial.semester},
                    {"session_index", net.trial.session_index},
                    {"opt_index", net.trial.opt_index},
                    {"ordered_index", net.trial.ordered_index}};
    doc["collapse_policy"] =
        net.collapse_policy == CollapsePolicy::merge ? "merge" : "keep_self_loops";
    doc["nodes"] = ordered_json::array();
    for (int i = 0; i < net.node_count(); ++i) {
        doc["nodes"].push_back({{"id", net.aois[i]},
                                {"fixation_count", net.fixation_counts[i]},
                                {"duration_ms", net.durations_ms[i]}});
    }
    doc["links"] = ordered_json::array();
    for (const auto& [k, m] : net.edges) {
        doc["links"].push_back(
            {{"source", net.aois[k.first]}, {"target", net.aois[k.second]}, {"count", m}});
    }
    return doc.dump(2) + "\n";
}

GazeNetwork from_node_link(const std::string& json_text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw ValidationError(std::string("node-link parse error: ") + e.what());
    }
    GazeNetwork net;
    if (doc.contains("trial")) {
        const auto& t = doc["trial"];
        net.trial.participant_id = t.value("participant_id", std::string{});
        net.trial.semester = t.value("semester", 1);
        net.trial.session_index = t.value("session_index", 0);
        net.trial.opt_index = t.value("opt_index", 0);
        net.trial.ordered_index = t.value("ordered_index", 0);
    }
    net.collapse_policy = doc.value("collapse_policy", std::string("merge")) == "merge"
                              ? CollapsePolicy::merge
                              : CollapsePolicy::keep_self_loops;
    if (!doc.contains("nodes") || !doc.contains("links"))
        throw ValidationError("node-link document needs 'nodes' and 'links'");
    for (const auto& nd : doc["nodes"]) net.aois.push_back(nd.at("id").get<std::string>());
    std::sort(net.aois.begin(), net.aois.end());
    net.fixation_counts.assign(net.aois.size(), 0);
    net.durations_ms.assign(net.aois.size(), 0);
    for (const auto& nd : doc["nodes"]) {
        int i = net.node_index(nd.at("id").get<std::string>());
        net.fixation_counts[i] = nd.value("fixation_count", std::int64_t{0});
        net.durations_ms[i] = nd.value("duration_ms", std::int64_t{0});
    }
    for (const auto& ln : doc["links"]) {
        int u = net.node_index(ln.at("source").get<std::string>());
        int v = net.node_index(ln.at("target").get<std::string>());
        if (u < 0 || v < 0) throw ValidationError("link endpoint not in node list");
        net.edges[{u, v}] += ln.at("count").get<std::int64_t>();
    }
    return net;
}

} // namespace gazenet::graph
