#include "gazenet/ingest.hpp"
#include "gazenet/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

namespace gazenet::ingest {

namespace {

constexpr double kBoundaryTol = 1e-9;

std::string trial_label(const std::string& pid, int sem, int sess, int opt) {
    return pid + "/s" + std::to_string(sem) + "/e" + std::to_string(sess) + "/o" +
           std::to_string(opt);
}

void validate_record(const FixationRecord& r, int line) {
    auto fail = [&](const std::string& msg) {
        throw ValidationError("line " + std::to_string(line) + ": " + msg);
    };
    if (r.participant_id.empty()) fail("participant_id is empty");
    if (r.semester < 1) fail("semester must be >= 1");
    if (r.session_index < 0) fail("session_index must be >= 0");
    if (r.opt_index < 0) fail("opt_index must be >= 0");
    if (r.fixation_index < 0) fail("fixation_index must be >= 0");
    if (r.aoi_id.empty()) fail("aoi_id is empty");
    if (r.start_ms < 0) fail("start_ms must be >= 0");
    if (r.duration_ms <= 0) fail("duration_ms must be > 0");
}

void validate_sequence_order(const std::vector<FixationRecord>& sorted) {
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const auto& a = sorted[i - 1];
        const auto& b = sorted[i];
        const bool same_trial = a.participant_id == b.participant_id &&
                                a.semester == b.semester &&
                                a.session_index == b.session_index &&
                                a.opt_index == b.opt_index;
        if (!same_trial) continue;
        const std::string where =
            trial_label(b.participant_id, b.semester, b.session_index, b.opt_index);
        if (b.fixation_index <= a.fixation_index)
            throw ValidationError("trial " + where +
                                  ": fixation_index values must be strictly increasing "
                                  "(saw " + std::to_string(a.fixation_index) + " then " +
                                  std::to_string(b.fixation_index) + ")");
        if (b.start_ms < a.start_ms)
            throw ValidationError("trial " + where + ": start_ms must be non-decreasing");
    }
}

} // namespace

std::vector<FixationRecord> parse_fixations_text(const std::string& text,
                                                 const csv::Dialect& d) {
    csv::Table t = csv::Table::read_string(text, d);
    t.require_columns({"participant_id", "semester", "session_index", "opt_index",
                       "fixation_index", "aoi_id", "start_ms", "duration_ms"});
    std::vector<FixationRecord> out;
    out.reserve(t.row_count());
    for (const auto& row : t.rows()) {
        FixationRecord r;
        r.participant_id = t.cell(row, "participant_id");
        r.semester = static_cast<int>(t.cell_int(row, "semester"));
        r.session_index = static_cast<int>(t.cell_int(row, "session_index"));
        r.opt_index = static_cast<int>(t.cell_int(row, "opt_index"));
        r.fixation_index = static_cast<int>(t.cell_int(row, "fixation_index"));
        r.aoi_id = t.cell(row, "aoi_id");
        r.start_ms = t.cell_int(row, "start_ms");
        r.duration_ms = t.cell_int(row, "duration_ms");
        validate_record(r, row.line);
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const FixationRecord& a, const FixationRecord& b) {
        return std::tie(a.participant_id, a.semester, a.session_index, a.opt_index,
                        a.fixation_index) <
               std::tie(b.participant_id, b.semester, b.session_index, b.opt_index,
                        b.fixation_index);
    });
    validate_sequence_order(out);
    return out;
}

std::vector<FixationRecord> parse_fixation_log(const std::string& path, const csv::Dialect& d) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_fixations_text(ss.str(), d);
}

std::vector<TrialOutcome> parse_outcomes_text(const std::string& text, const csv::Dialect& d) {
    csv::Table t = csv::Table::read_string(text, d);
    t.require_columns({"participant_id", "semester", "session_index", "opt_index"});
    std::vector<TrialOutcome> out;
    out.reserve(t.row_count());
    for (const auto& row : t.rows()) {
        TrialOutcome o;
        o.participant_id = t.cell(row, "participant_id");
        o.semester = static_cast<int>(t.cell_int(row, "semester"));
        o.session_index = static_cast<int>(t.cell_int(row, "session_index"));
        o.opt_index = static_cast<int>(t.cell_int(row, "opt_index"));
        o.anomalies_found = t.cell_int_opt(row, "anomalies_found");
        o.anomalies_total = t.cell_int_opt(row, "anomalies_total");
        o.bfd_normalized = t.cell_double_opt(row, "bfd_normalized");

        auto fail = [&](const std::string& msg) {
            throw ValidationError("line " + std::to_string(row.line) + ": " + msg);
        };
        const bool has_counts = o.anomalies_found.has_value() && o.anomalies_total.has_value();
        if (o.anomalies_found.has_value() != o.anomalies_total.has_value())
            fail("anomalies_found and anomalies_total must be given together");
        if (!has_counts && !o.bfd_normalized.has_value())
            fail("need anomalies_found/anomalies_total or bfd_normalized");
        if (has_counts) {
            if (*o.anomalies_total <= 0) fail("anomalies_total must be > 0");
            if (*o.anomalies_found < 0) fail("anomalies_found must be >= 0");
            if (*o.anomalies_found > *o.anomalies_total)
                fail("anomalies_found exceeds anomalies_total");
            if (o.bfd_normalized.has_value()) {
                const double ratio = static_cast<double>(*o.anomalies_found) /
                                     static_cast<double>(*o.anomalies_total);
                if (std::fabs(*o.bfd_normalized - ratio) > kBoundaryTol)
                    fail("bfd_normalized disagrees with anomalies_found/anomalies_total");
            }
        }
        if (o.bfd_normalized.has_value() &&
            (*o.bfd_normalized < -kBoundaryTol || *o.bfd_normalized > 1.0 + kBoundaryTol))
            fail("bfd_normalized outside [0,1]");
        out.push_back(std::move(o));
    }
    return out;
}

std::vector<TrialOutcome> parse_outcome_log(const std::string& path, const csv::Dialect& d) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_outcomes_text(ss.str(), d);
}

std::string serialize_fixations(const std::vector<FixationRecord>& records,
                                const std::string& header_comment) {
    csv::Writer w;
    if (!header_comment.empty()) w.comment(header_comment);
    w.row({"participant_id", "semester", "session_index", "opt_index", "fixation_index",
           "aoi_id", "start_ms", "duration_ms"});
    for (const auto& r : records) {
        w.row({r.participant_id, csv::format_int(r.semester), csv::format_int(r.session_index),
               csv::format_int(r.opt_index), csv::format_int(r.fixation_index), r.aoi_id,
               csv::format_int(r.start_ms), csv::format_int(r.duration_ms)});
    }
    return w.str();
}

std::string serialize_outcomes(const std::vector<TrialOutcome>& outcomes,
                               const std::string& header_comment) {
    csv::Writer w;
    if (!header_comment.empty()) w.comment(header_comment);
    w.row({"participant_id", "semester", "session_index", "opt_index", "anomalies_found",
           "anomalies_total", "bfd_normalized"});
    for (const auto& o : outcomes) {
        w.row({o.participant_id, csv::format_int(o.semester), csv::format_int(o.session_index),
               csv::format_int(o.opt_index),
               o.anomalies_found ? csv::format_int(*o.anomalies_found) : "",
               o.anomalies_total ? csv::format_int(*o.anomalies_total) : "",
               o.bfd_normalized ? csv::format_double(*o.bfd_normalized) : ""});
    }
    return w.str();
}

double normalize_bfd(const TrialOutcome& outcome) {
    double v = 0.0;
    if (outcome.bfd_normalized.has_value()) {
        v = *outcome.bfd_normalized;
    } else {
        if (!outcome.anomalies_found.has_value() || !outcome.anomalies_total.has_value())
            throw ValidationError("outcome has neither bfd_normalized nor anomaly counts");
        if (*outcome.anomalies_total <= 0)
            throw ValidationError("anomalies_total must be > 0");
        if (*outcome.anomalies_found > *outcome.anomalies_total)
            throw ValidationError("anomalies_found exceeds anomalies_total");
        v = static_cast<double>(*outcome.anomalies_found) /
            static_cast<double>(*outcome.anomalies_total);
    }
    if (v < 0.0) {
        if (v < -kBoundaryTol) throw ValidationError("bfd score below 0");
        v = 0.0;
    }
    if (v > 1.0) {
        if (v > 1.0 + kBoundaryTol) throw ValidationError("bfd score above 1");
        v = 1.0;
    }
    return v;
}

TrialTable build_trials(const std::vector<FixationRecord>& fixations,
                        const std::vector<TrialOutcome>& outcomes) {
    // Group fixations by trial; std::map keeps deterministic key order.
    using RawKey = std::tuple<std::string, int, int, int>;
    std::map<RawKey, TrialData> grouped;
    for (const auto& f : fixations) {
        auto& td = grouped[{f.participant_id, f.semester, f.session_index, f.opt_index}];
        td.aoi_seq.push_back(f.aoi_id);
        td.durations_ms.push_back(f.duration_ms);
    }

    std::map<RawKey, double> scores;
    TrialTable table;
    for (const auto& o : outcomes) {
        RawKey k{o.participant_id, o.semester, o.session_index, o.opt_index};
        if (scores.count(k))
            throw ValidationError("duplicate outcome row for trial " +
                                  trial_label(o.participant_id, o.semester, o.session_index,
                                              o.opt_index));
        scores[k] = normalize_bfd(o);
        if (!grouped.count(k))
            table.warnings.push_back("outcome without fixations: " +
                                     trial_label(o.participant_id, o.semester,
                                                 o.session_index, o.opt_index));
    }

    table.trials.reserve(grouped.size());
    std::string prev_pid;
    int counter = 0;
    for (auto& [k, td] : grouped) {
        TrialKey key;
        key.participant_id = std::get<0>(k);
        key.semester = std::get<1>(k);
        key.session_index = std::get<2>(k);
        key.opt_index = std::get<3>(k);
        if (key.participant_id != prev_pid) {
            prev_pid = key.participant_id;
            counter = 0;
        }
        key.ordered_index = counter++;
        auto it = scores.find(k);
        if (it != scores.end()) td.bfd = it->second;
        table.trials.emplace_back(std::move(key), std::move(td));
    }
    return table;
}

} // namespace gazenet::ingest
