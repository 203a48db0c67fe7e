#include "gazenet/pipeline.hpp"
#include "gazenet/csv.hpp"
#include "gazenet/error.hpp"
#include "gazenet/graph.hpp"
#include "gazenet/ingest.hpp"
#include "gazenet/rng.hpp"
#include "gazenet/synth.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace gazenet::pipeline {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config: bad boolean for " + key + ": " + v);
}

// Collects outputs and writes them only after the whole stage succeeded.
class OutputSet {
public:
    explicit OutputSet(std::string out_dir) : dir_(std::move(out_dir)) {}

    void add(const std::string& relpath, std::string content) {
        files_.emplace_back(relpath, std::move(content));
    }

    void commit() {
        fs::create_directories(dir_);
        std::vector<fs::path> written;
        try {
            for (const auto& [rel, content] : files_) {
                const fs::path p = fs::path(dir_) / rel;
                if (p.has_parent_path()) fs::create_directories(p.parent_path());
                std::ofstream out(p, std::ios::binary);
                if (!out) throw ValidationError("cannot write " + p.string());
                out << content;
                written.push_back(p);
            }
        } catch (...) {
            for (const auto& p : written) {
                std::error_code ec;
                fs::remove(p, ec);
            }
            throw;
        }
    }

private:
    std::string dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string schema_comment(const PipelineConfig& cfg, const std::string& schema) {
    return "gazenet " + schema + " v1 seed=" + std::to_string(cfg.seed);
}

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt6(double v) { return csv::format_double(v, 6); }

} // namespace

void PipelineConfig::validate() const {
    if (pagerank_tol <= 0 || eigen_tol <= 0 || lmm_tol <= 0 || dba_tol <= 0)
        throw ValidationError("config: tolerances must be > 0");
    if (jobs < 1) throw ValidationError("config: jobs must be >= 1");
    if (restarts < 1) throw ValidationError("config: restarts must be >= 1");
    auto check_k = [](int k) {
        if (k < 2 || k > 10) throw ValidationError("config: k must lie in 2..10");
    };
    if (k_fixed != 0) check_k(k_fixed);
    if (k_candidates.empty()) throw ValidationError("config: no k candidates");
    for (int k : k_candidates) check_k(k);
    if (band && *band < 0) throw ValidationError("config: band must be >= 0");
}

metrics::ComputeConfig PipelineConfig::compute_config() const {
    metrics::ComputeConfig cc;
    cc.pi_source = pi_source;
    cc.pagerank_damping = pagerank_damping;
    cc.pagerank_tol = pagerank_tol;
    cc.pagerank_max_iter = pagerank_max_iter;
    cc.eigen_tol = eigen_tol;
    cc.eigen_max_iter = eigen_max_iter;
    cc.eigen_zero_on_failure = eigen_failure == EigenFailurePolicy::zero_flag;
    return cc;
}

tsc::KmeansOptions PipelineConfig::kmeans_options(std::uint64_t metric_seed) const {
    tsc::KmeansOptions o;
    o.restarts = restarts;
    o.max_iter = kmeans_max_iter;
    o.seed = metric_seed;
    o.band = band;
    o.dba_max_iter = dba_max_iter;
    o.dba_tol = dba_tol;
    return o;
}

void apply_config_line(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    auto as_int = [&](const std::string& v) {
        return static_cast<int>(csv::parse_int(v, key, 0));
    };
    auto as_double = [&](const std::string& v) { return csv::parse_double(v, key, 0); };

    if (key == "fixations") cfg.fixations_path = value;
    else if (key == "outcomes") cfg.outcomes_path = value;
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(csv::parse_int(value, key, 0));
    else if (key == "jobs") cfg.jobs = as_int(value);
    else if (key == "keep_self_loops")
        cfg.collapse = parse_bool(value, key) ? CollapsePolicy::keep_self_loops
                                              : CollapsePolicy::merge;
    else if (key == "pi_source") {
        if (value == "counts") cfg.pi_source = PiSource::counts;
        else if (value == "durations") cfg.pi_source = PiSource::durations;
        else throw ValidationError("config: pi_source must be counts or durations");
    } else if (key == "pagerank_damping") cfg.pagerank_damping = as_double(value);
    else if (key == "pagerank_tol") cfg.pagerank_tol = as_double(value);
    else if (key == "pagerank_max_iter") cfg.pagerank_max_iter = as_int(value);
    else if (key == "eigen_tol") cfg.eigen_tol = as_double(value);
    else if (key == "eigen_max_iter") cfg.eigen_max_iter = as_int(value);
    else if (key == "eigen_failure") {
        if (value == "error") cfg.eigen_failure = EigenFailurePolicy::error;
        else if (value == "zero") cfg.eigen_failure = EigenFailurePolicy::zero_flag;
        else throw ValidationError("config: eigen_failure must be error or zero");
    } else if (key == "export_node_link") cfg.export_node_link = parse_bool(value, key);
    else if (key == "k") {
        if (value == "auto") {
            cfg.k_fixed = 0;
        } else {
            cfg.k_fixed = as_int(value);
            if (cfg.k_fixed < 2 || cfg.k_fixed > 10)
                throw ValidationError("config: k must be auto or lie in 2..10");
        }
    } else if (key == "k_candidates") {
        cfg.k_candidates.clear();
        for (const auto& v : split_list(value)) {
            const int k = as_int(v);
            if (k < 2 || k > 10)
                throw ValidationError("config: k candidates must lie in 2..10");
            cfg.k_candidates.push_back(k);
        }
    } else if (key == "restarts") cfg.restarts = as_int(value);
    else if (key == "kmeans_max_iter") cfg.kmeans_max_iter = as_int(value);
    else if (key == "band") {
        if (value == "none") cfg.band.reset();
        else cfg.band = as_int(value);
    } else if (key == "dba_max_iter") cfg.dba_max_iter = as_int(value);
    else if (key == "dba_tol") cfg.dba_tol = as_double(value);
    else if (key == "normalize") {
        if (value == "zscore") cfg.normalize = tsc::NormalizeMode::zscore;
        else if (value == "minmax") cfg.normalize = tsc::NormalizeMode::minmax;
        else throw ValidationError("config: normalize must be zscore or minmax");
    } else if (key == "drop_predictors") cfg.drop_predictors = split_list(value);
    else if (key == "standardize") cfg.standardize = parse_bool(value, key);
    else if (key == "lmm_tol") cfg.lmm_tol = as_double(value);
    else if (key == "lmm_max_iter") cfg.lmm_max_iter = as_int(value);
    else if (key == "synth_participants") cfg.synth_participants = as_int(value);
    else if (key == "synth_semesters") {
        cfg.synth_semesters.clear();
        for (const auto& v : split_list(value)) cfg.synth_semesters.push_back(as_int(v));
    } else if (key == "synth_sessions") cfg.synth_sessions = as_int(value);
    else if (key == "synth_opts") cfg.synth_opts = as_int(value);
    else if (key == "synth_aois") cfg.synth_aois = as_int(value);
    else if (key == "synth_steps_min") cfg.synth_steps_min = as_int(value);
    else if (key == "synth_steps_max") cfg.synth_steps_max = as_int(value);
    else if (key == "synth_groups") cfg.synth_groups = as_int(value);
    else if (key == "synth_bfd_noise") cfg.synth_bfd_noise = as_double(value);
    else throw ValidationError("config: unknown key: " + key);
}

PipelineConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string trimmed;
        for (char c : line)
            if (!std::isspace(static_cast<unsigned char>(c)) || !trimmed.empty())
                trimmed.push_back(c);
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back())))
            trimmed.pop_back();
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ValidationError(path + " line " + std::to_string(line_no) +
                                  ": expected key = value");
        auto strip = [](std::string s) {
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
                s.erase(s.begin());
            while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
                s.pop_back();
            return s;
        };
        apply_config_line(cfg, strip(trimmed.substr(0, eq)), strip(trimmed.substr(eq + 1)));
    }
    return cfg;
}

void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    if (count <= 0) return;
    jobs = std::min(jobs, count);
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    auto worker = [&] {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// ---- metrics stage ----------------------------------------------------------

namespace {

std::string node_link_name(const TrialKey& k) {
    return k.participant_id + "_s" + std::to_string(k.semester) + "_e" +
           std::to_string(k.session_index) + "_o" + std::to_string(k.opt_index) + ".json";
}

} // namespace

void cmd_metrics(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.fixations_path.empty()) throw ValidationError("no fixations file given");
    const auto fixations = ingest::parse_fixation_log(cfg.fixations_path);
    std::vector<TrialOutcome> outcomes;
    if (!cfg.outcomes_path.empty()) outcomes = ingest::parse_outcome_log(cfg.outcomes_path);
    const auto table = ingest::build_trials(fixations, outcomes);
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";
    if (table.trials.empty()) throw ValidationError("no trials");

    const int n = static_cast<int>(table.trials.size());
    std::vector<metrics::MetricVector> rows(n);
    std::vector<std::string> exports(n);
    const graph::BuildConfig bc{cfg.collapse};
    const auto cc = cfg.compute_config();
    parallel_for(n, cfg.jobs, [&](int i) {
        const auto& [key, data] = table.trials[i];
        const auto net = graph::build_network(data.aoi_seq, data.durations_ms, bc, key);
        rows[i] = metrics::compute_all(net, cc);
        if (cfg.export_node_link) exports[i] = graph::to_node_link(net);
    });

    csv::Writer w;
    w.comment(schema_comment(cfg, "metrics"));
    std::vector<std::string> header = {"participant_id", "semester", "session_index",
                                       "opt_index", "ordered_index"};
    for (const auto& m : metrics::metric_names()) header.push_back(m);
    header.push_back("degenerate");
    w.row(header);
    for (const auto& mv : rows) {
        std::vector<std::string> cells = {
            mv.trial.participant_id, csv::format_int(mv.trial.semester),
            csv::format_int(mv.trial.session_index), csv::format_int(mv.trial.opt_index),
            csv::format_int(mv.trial.ordered_index)};
        for (const auto& m : metrics::metric_names())
            cells.push_back(fmt(metrics::metric_value(mv, m)));
        cells.push_back(mv.degenerate ? "1" : "0");
        w.row(cells);
    }

    OutputSet out(cfg.out_dir);
    out.add("metrics.csv", w.str());
    if (cfg.export_node_link)
        for (int i = 0; i < n; ++i)
            out.add("networks/" + node_link_name(table.trials[i].first), exports[i]);
    out.commit();
}

std::vector<MetricRow> read_metrics_csv(const std::string& path) {
    csv::Table t = csv::Table::read_file(path);
    t.require_columns({"participant_id", "semester", "session_index", "opt_index",
                       "ordered_index", "degenerate"});
    t.require_columns(metrics::metric_names());
    std::vector<MetricRow> rows;
    rows.reserve(t.row_count());
    for (const auto& r : t.rows()) {
        MetricRow m;
        m.key.participant_id = t.cell(r, "participant_id");
        m.key.semester = static_cast<int>(t.cell_int(r, "semester"));
        m.key.session_index = static_cast<int>(t.cell_int(r, "session_index"));
        m.key.opt_index = static_cast<int>(t.cell_int(r, "opt_index"));
        m.key.ordered_index = static_cast<int>(t.cell_int(r, "ordered_index"));
        m.mv.trial = m.key;
        m.mv.n_nodes = static_cast<int>(t.cell_int(r, "n_nodes"));
        m.mv.n_edges = t.cell_int(r, "n_edges");
        m.mv.avg_degree = t.cell_double(r, "avg_degree");
        m.mv.avg_betweenness = t.cell_double(r, "avg_betweenness");
        m.mv.avg_closeness = t.cell_double(r, "avg_closeness");
        m.mv.avg_pagerank = t.cell_double(r, "avg_pagerank");
        m.mv.avg_eigenvector = t.cell_double(r, "avg_eigenvector");
        m.mv.density = t.cell_double(r, "density");
        m.mv.reciprocity = t.cell_double(r, "reciprocity");
        m.mv.node_connectivity = static_cast<int>(t.cell_int(r, "node_connectivity"));
        m.mv.stationary_entropy = t.cell_double(r, "stationary_entropy");
        m.mv.transition_entropy = t.cell_double(r, "transition_entropy");
        m.mv.degenerate = t.cell_int(r, "degenerate") != 0;
        rows.push_back(std::move(m));
    }
    std::sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
        return std::tie(a.key.participant_id, a.key.ordered_index) <
               std::tie(b.key.participant_id, b.key.ordered_index);
    });
    return rows;
}

// ---- cluster stage ----------------------------------------------------------

namespace {

struct MetricClustering {
    std::string metric;
    std::vector<std::string> participants; // sorted
    tsc::ClusteringResult result;
    bool skipped = false;
    std::string skip_reason;
    int eligible = 0;
};

std::vector<tsc::MetricSeries> series_for_metric(const std::vector<MetricRow>& rows,
                                                 const std::string& metric) {
    std::map<std::string, tsc::MetricSeries> by_pid;
    for (const auto& r : rows) {
        auto& s = by_pid[r.key.participant_id];
        if (s.participant_id.empty()) {
            s.participant_id = r.key.participant_id;
            s.metric = metric;
        }
        s.values.push_back(metrics::metric_value(r.mv, metric));
    }
    std::vector<tsc::MetricSeries> out;
    out.reserve(by_pid.size());
    for (auto& [pid, s] : by_pid) out.push_back(std::move(s));
    return out;
}

MetricClustering cluster_one_metric(const std::vector<MetricRow>& rows,
                                    const std::string& metric, const PipelineConfig& cfg,
                                    std::uint64_t metric_seed) {
    MetricClustering mc;
    mc.metric = metric;
    auto series = series_for_metric(rows, metric);
    for (const auto& s : series) mc.participants.push_back(s.participant_id);

    const auto stats = tsc::pooled_stats(series);
    std::vector<tsc::MetricSeries> normalized;
    normalized.reserve(series.size());
    for (const auto& s : series) normalized.push_back(tsc::normalize(s, stats, cfg.normalize));

    for (const auto& s : normalized)
        if (s.values.size() >= 2) ++mc.eligible;

    std::vector<int> candidates;
    if (cfg.k_fixed > 0) candidates = {cfg.k_fixed};
    else candidates = cfg.k_candidates;
    std::vector<int> usable;
    for (int k : candidates)
        if (k <= mc.eligible) usable.push_back(k);
    if (usable.empty()) {
        mc.skipped = true;
        mc.skip_reason = "only " + std::to_string(mc.eligible) +
                         " eligible participants for the requested k";
        return mc;
    }
    mc.result = tsc::select_k(normalized, usable, cfg.kmeans_options(metric_seed));
    mc.result.metric = metric;
    return mc;
}

} // namespace

void cmd_cluster(const PipelineConfig& cfg) {
    cfg.validate();
    const auto rows = read_metrics_csv(fs::path(cfg.out_dir) / "metrics.csv");
    if (rows.empty()) throw ValidationError("metrics.csv has no rows");

    const auto& names = metrics::clustering_metrics();
    const int n = static_cast<int>(names.size());
    std::vector<MetricClustering> results(n);
    const Rng root(cfg.seed);
    parallel_for(n, cfg.jobs, [&](int i) {
        results[i] = cluster_one_metric(rows, names[i], cfg, root.derive(i).seed());
    });

    csv::Writer wc;
    wc.comment(schema_comment(cfg, "clusters"));
    wc.row({"metric", "participant_id", "cluster_id", "silhouette_sample"});
    csv::Writer wcent;
    wcent.comment(schema_comment(cfg, "centroids"));
    wcent.row({"metric", "cluster_id", "position_index", "value"});
    csv::Writer wsum;
    wsum.comment(schema_comment(cfg, "cluster_summary"));
    wsum.row({"metric", "k", "silhouette", "inertia", "eligible", "low_confidence",
              "degenerate_structure", "skip_reason"});

    for (const auto& mc : results) {
        if (mc.skipped) {
            wsum.row({mc.metric, "na", "na", "na", csv::format_int(mc.eligible), "na", "na",
                      mc.skip_reason});
            continue;
        }
        for (std::size_t i = 0; i < mc.participants.size(); ++i) {
            const int cid = mc.result.assignments[i];
            wc.row({mc.metric, mc.participants[i], csv::format_int(cid),
                    cid >= 0 ? fmt(mc.result.sample_silhouettes[i]) : ""});
        }
        for (int c = 0; c < mc.result.k; ++c)
            for (std::size_t j = 0; j < mc.result.centroids[c].size(); ++j)
                wcent.row({mc.metric, csv::format_int(c), csv::format_int(j),
                           fmt(mc.result.centroids[c][j])});
        wsum.row({mc.metric, csv::format_int(mc.result.k), fmt(mc.result.silhouette),
                  fmt(mc.result.inertia), csv::format_int(mc.eligible),
                  mc.result.low_confidence ? "1" : "0",
                  mc.result.degenerate_structure ? "1" : "0", ""});
    }

    OutputSet out(cfg.out_dir);
    out.add("clusters.csv", wc.str());
    out.add("centroids.csv", wcent.str());
    out.add("cluster_summary.csv", wsum.str());
    out.commit();
}

// ---- anova stage ------------------------------------------------------------

void cmd_anova(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.outcomes_path.empty()) throw ValidationError("no outcomes file given");
    const auto rows = read_metrics_csv(fs::path(cfg.out_dir) / "metrics.csv");
    const auto outcomes = ingest::parse_outcome_log(cfg.outcomes_path);
    csv::Table clusters = csv::Table::read_file(fs::path(cfg.out_dir) / "clusters.csv");
    clusters.require_columns({"metric", "participant_id", "cluster_id"});

    // Participant mean BFD over scored trials ("post-experiment performance").
    std::map<std::string, std::pair<double, int>> bfd_acc;
    for (const auto& o : outcomes) {
        auto& [sum, count] = bfd_acc[o.participant_id];
        sum += ingest::normalize_bfd(o);
        count += 1;
    }

    std::map<std::string, std::map<std::string, int>> cluster_of; // metric -> pid -> cid
    std::map<std::string, int> k_of;
    for (const auto& r : clusters.rows()) {
        const std::string metric = clusters.cell(r, "metric");
        const int cid = static_cast<int>(clusters.cell_int(r, "cluster_id"));
        if (cid < 0) continue;
        cluster_of[metric][clusters.cell(r, "participant_id")] = cid;
        k_of[metric] = std::max(k_of[metric], cid + 1);
    }

    int max_k = 3;
    for (const auto& [m, k] : k_of) max_k = std::max(max_k, k);

    csv::Writer w;
    w.comment(schema_comment(cfg, "anova"));
    std::vector<std::string> header{"metric"};
    for (int c = 1; c <= max_k; ++c) header.push_back("n_mean_" + std::to_string(c));
    for (int c = 1; c <= max_k; ++c) header.push_back("bfd_" + std::to_string(c));
    header.push_back("f_stat");
    header.push_back("p_stat");
    w.row(header);

    for (const auto& metric : metrics::clustering_metrics()) {
        auto it = cluster_of.find(metric);
        if (it == cluster_of.end()) continue; // skipped by the cluster stage
        const int k = k_of[metric];

        // Cluster means of the normalized metric values (same normalization
        // as the clustering stage).
        auto series = series_for_metric(rows, metric);
        const auto stats = tsc::pooled_stats(series);
        std::vector<double> nsum(k, 0.0);
        std::vector<int> ncount(k, 0);
        for (const auto& s : series) {
            auto cit = it->second.find(s.participant_id);
            if (cit == it->second.end()) continue;
            const auto norm = tsc::normalize(s, stats, cfg.normalize);
            for (double v : norm.values) {
                nsum[cit->second] += v;
                ncount[cit->second] += 1;
            }
        }

        std::vector<std::vector<double>> groups(k);
        for (const auto& [pid, cid] : it->second) {
            auto bit = bfd_acc.find(pid);
            if (bit == bfd_acc.end() || bit->second.second == 0) continue;
            groups[cid].push_back(bit->second.first / bit->second.second);
        }

        std::vector<std::string> cells{metric};
        for (int c = 0; c < max_k; ++c)
            cells.push_back(c < k && ncount[c] > 0 ? fmt6(nsum[c] / ncount[c]) : "na");
        for (int c = 0; c < max_k; ++c) {
            if (c >= k || groups[c].empty()) {
                cells.push_back("na");
                continue;
            }
            double sum = 0.0;
            for (double v : groups[c]) sum += v;
            cells.push_back(fmt6(sum / groups[c].size()));
        }

        std::vector<std::vector<double>> nonempty;
        int total = 0;
        for (auto& g : groups)
            if (!g.empty()) {
                total += static_cast<int>(g.size());
                nonempty.push_back(g);
            }
        if (static_cast<int>(nonempty.size()) < 2 ||
            total <= static_cast<int>(nonempty.size())) {
            cells.push_back("na");
            cells.push_back("na");
        } else {
            const auto res = stats::oneway_anova(nonempty);
            cells.push_back(fmt6(res.f));
            std::string p = fmt6(res.p);
            if (res.p < 0.05) p += "*";
            cells.push_back(p);
        }
        w.row(cells);
    }

    OutputSet out(cfg.out_dir);
    out.add("anova.csv", w.str());
    out.commit();
}

// ---- lmm stage --------------------------------------------------------------

void cmd_lmm(const PipelineConfig& cfg) {
    cfg.validate();
    if (cfg.outcomes_path.empty()) throw ValidationError("no outcomes file given");
    const auto rows = read_metrics_csv(fs::path(cfg.out_dir) / "metrics.csv");
    const auto outcomes = ingest::parse_outcome_log(cfg.outcomes_path);

    std::map<std::tuple<std::string, int, int, int>, double> score;
    for (const auto& o : outcomes)
        score[{o.participant_id, o.semester, o.session_index, o.opt_index}] =
            ingest::normalize_bfd(o);

    std::vector<stats::TrialRow> trials;
    trials.reserve(rows.size());
    for (const auto& r : rows) {
        stats::TrialRow t;
        t.key = r.key;
        t.metrics = r.mv;
        auto it = score.find(
            {r.key.participant_id, r.key.semester, r.key.session_index, r.key.opt_index});
        if (it != score.end()) t.bfd = it->second;
        trials.push_back(std::move(t));
    }

    std::map<std::string, int> usable_per_pid;
    for (const auto& t : trials)
        if (t.bfd && !t.metrics.degenerate) usable_per_pid[t.key.participant_id] += 1;
    int with_two = 0;
    for (const auto& [pid, n] : usable_per_pid)
        if (n >= 2) ++with_two;
    if (with_two < 2)
        throw ValidationError("mixed model needs at least 2 participants with >= 2 scored "
                              "trials each");

    stats::DesignOptions dopts;
    dopts.drop_predictors = cfg.drop_predictors;
    dopts.standardize = cfg.standardize;
    const auto design = stats::build_design(trials, dopts);
    for (const auto& d : design.deletion_report) std::cerr << "excluded: " << d << "\n";

    stats::RemlOptions ropts;
    ropts.tol = cfg.lmm_tol;
    ropts.max_iter = cfg.lmm_max_iter;
    auto fit = stats::reml_fit(design, ropts);
    if (!fit.converged)
        std::cerr << "warning: REML did not reach the gradient tolerance (|g|=" +
                         csv::format_double(fit.grad_norm, 3) + ")\n";

    csv::Writer w;
    w.comment(schema_comment(cfg, "lmm"));
    w.comment("n_obs=" + std::to_string(fit.n_obs) + " n_groups=" +
              std::to_string(fit.n_groups) + " group_size_min=" +
              std::to_string(fit.group_min) + " group_size_mean=" + fmt6(fit.group_mean) +
              " group_size_max=" + std::to_string(fit.group_max));
    w.comment(std::string("converged=") + (fit.converged ? "true" : "false") +
              (fit.boundary ? " boundary=true" : ""));
    w.row({"term", "coef", "std_err", "z", "p_value", "ci_low", "ci_high"});
    for (const auto& fe : fit.fixed) {
        std::string p = fmt6(fe.p);
        if (fe.p < 0.05) p += "*";
        w.row({stats::lmm_display_name(fe.name), fmt6(fe.coef), fmt6(fe.se), fmt6(fe.z), p,
               fmt6(fe.ci_low), fmt6(fe.ci_high)});
    }
    if (fit.re_cov.rows() == 2) {
        w.row({"Participant Var", fmt6(fit.re_cov(0, 0)), "", "", "", "", ""});
        w.row({"Participant x Semester Cov", fmt6(fit.re_cov(0, 1)), "", "", "", "", ""});
        w.row({"Semester Var", fmt6(fit.re_cov(1, 1)), "", "", "", "", ""});
    }
    w.row({"Scale", fmt6(fit.residual_var), "", "", "", "", ""});
    w.row({"REML Log-Likelihood", fmt6(fit.reml_loglik), "", "", "", "", ""});

    OutputSet out(cfg.out_dir);
    out.add("lmm.csv", w.str());
    out.commit();
}

// ---- synth stage ------------------------------------------------------------

void cmd_synth(const PipelineConfig& cfg) {
    cfg.validate();
    synth::CohortSpec spec;
    spec.participants = cfg.synth_participants;
    spec.semesters = cfg.synth_semesters;
    spec.sessions_per_semester = cfg.synth_sessions;
    spec.opts_per_session = cfg.synth_opts;
    spec.aois = cfg.synth_aois;
    spec.steps_min = cfg.synth_steps_min;
    spec.steps_max = cfg.synth_steps_max;
    spec.groups = cfg.synth_groups;
    spec.bfd_noise_sd = cfg.synth_bfd_noise;
    spec.seed = cfg.seed;
    const auto cohort = synth::generate_cohort(spec);

    csv::Writer wt;
    wt.comment(schema_comment(cfg, "truth"));
    wt.row({"participant_id", "group"});
    for (const auto& [pid, g] : cohort.truth) wt.row({pid, csv::format_int(g)});

    OutputSet out(cfg.out_dir);
    out.add("fixations.csv",
            ingest::serialize_fixations(cohort.fixations, schema_comment(cfg, "fixations")));
    out.add("outcomes.csv",
            ingest::serialize_outcomes(cohort.outcomes, schema_comment(cfg, "outcomes")));
    out.add("truth.csv", wt.str());
    out.commit();
}

void cmd_pipeline(const PipelineConfig& cfg) {
    cmd_metrics(cfg);
    cmd_cluster(cfg);
    cmd_anova(cfg);
    cmd_lmm(cfg);
}

} // namespace gazenet::pipeline
