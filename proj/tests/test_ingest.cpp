#include "gazenet/error.hpp"
#include "gazenet/ingest.hpp"
#include "gazenet/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

using namespace gazenet;
using namespace gazenet::ingest;

namespace {

const char* kHeader =
    "participant_id,semester,session_index,opt_index,fixation_index,aoi_id,start_ms,"
    "duration_ms\n";

std::string fixrow(const std::string& pid, int sem, int sess, int opt, int fi,
                   const std::string& aoi, int start, int dur) {
    return pid + "," + std::to_string(sem) + "," + std::to_string(sess) + "," +
           std::to_string(opt) + "," + std::to_string(fi) + "," + aoi + "," +
           std::to_string(start) + "," + std::to_string(dur) + "\n";
}

} // namespace

TEST_CASE("parse_fixations: identity parse of a 3-row file") {
    std::string text = kHeader;
    text += fixrow("p1", 6, 0, 0, 0, "A", 0, 100);
    text += fixrow("p1", 6, 0, 0, 1, "B", 100, 150);
    text += fixrow("p1", 6, 0, 0, 2, "A", 250, 80);
    auto recs = parse_fixations_text(text);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].aoi_id == "A");
    CHECK(recs[1].aoi_id == "B");
    CHECK(recs[2].aoi_id == "A");
    for (int i = 0; i < 3; ++i) CHECK(recs[i].fixation_index == i);
}

TEST_CASE("parse_fixations: duration 0 cites its line") {
    std::string text = kHeader;
    text += fixrow("p1", 6, 0, 0, 0, "A", 0, 100);
    text += fixrow("p1", 6, 0, 0, 1, "B", 100, 150);
    text += fixrow("p1", 6, 0, 0, 2, "A", 250, 80);
    text += fixrow("p1", 6, 0, 1, 0, "C", 0, 0); // line 5
    CHECK_THROWS_WITH_AS(parse_fixations_text(text), doctest::Contains("line 5"),
                         ValidationError);
}

TEST_CASE("parse_fixations: missing column named in schema error") {
    CHECK_THROWS_WITH_AS(
        parse_fixations_text("participant_id,semester,session_index,opt_index,"
                             "fixation_index,aoi_id,start_ms\np,6,0,0,0,A,0\n"),
        doctest::Contains("duration_ms"), SchemaError);
}

TEST_CASE("parse_fixations: unparseable cell cites line number") {
    std::string text = kHeader;
    text += "p1,6,0,0,zero,A,0,100\n";
    CHECK_THROWS_WITH_AS(parse_fixations_text(text), doctest::Contains("line 2"),
                         ValidationError);
}

TEST_CASE("parse_fixations: interleaved participants sort into 4 trial groups") {
    std::string text = kHeader;
    text += fixrow("p2", 6, 0, 1, 0, "A", 0, 100);
    text += fixrow("p1", 6, 0, 0, 0, "A", 0, 100);
    text += fixrow("p2", 6, 0, 0, 0, "B", 0, 100);
    text += fixrow("p1", 6, 0, 1, 0, "C", 0, 100);
    text += fixrow("p2", 6, 0, 1, 1, "C", 100, 100);
    auto recs = parse_fixations_text(text);

    // Independent group-by over the raw rows.
    std::set<std::tuple<std::string, int, int, int>> expected_groups;
    expected_groups.insert({"p1", 6, 0, 0});
    expected_groups.insert({"p1", 6, 0, 1});
    expected_groups.insert({"p2", 6, 0, 0});
    expected_groups.insert({"p2", 6, 0, 1});

    std::set<std::tuple<std::string, int, int, int>> got;
    for (const auto& r : recs)
        got.insert({r.participant_id, r.semester, r.session_index, r.opt_index});
    CHECK(got == expected_groups);
    CHECK(std::is_sorted(recs.begin(), recs.end(),
                         [](const FixationRecord& a, const FixationRecord& b) {
                             return std::tie(a.participant_id, a.semester, a.session_index,
                                             a.opt_index, a.fixation_index) <
                                    std::tie(b.participant_id, b.semester, b.session_index,
                                             b.opt_index, b.fixation_index);
                         }));
}

TEST_CASE("parse_fixations: duplicate fixation_index within a trial rejected") {
    std::string text = kHeader;
    text += fixrow("p1", 6, 0, 0, 1, "A", 0, 100);
    text += fixrow("p1", 6, 0, 0, 1, "B", 100, 100);
    CHECK_THROWS_AS(parse_fixations_text(text), ValidationError);
}

TEST_CASE("normalize_bfd") {
    TrialOutcome o;
    o.participant_id = "p";
    SUBCASE("counts ratio") {
        o.anomalies_found = 2;
        o.anomalies_total = 4;
        CHECK(normalize_bfd(o) == 0.5);
    }
    SUBCASE("zero case") {
        o.anomalies_found = 0;
        o.anomalies_total = 7;
        CHECK(normalize_bfd(o) == 0.0);
    }
    SUBCASE("full score") {
        o.anomalies_found = 3;
        o.anomalies_total = 3;
        CHECK(normalize_bfd(o) == 1.0);
    }
    SUBCASE("found > total rejected") {
        o.anomalies_found = 5;
        o.anomalies_total = 3;
        CHECK_THROWS_AS(normalize_bfd(o), ValidationError);
    }
    SUBCASE("explicit bfd wins") {
        o.bfd_normalized = 0.25;
        CHECK(normalize_bfd(o) == 0.25);
    }
    SUBCASE("boundary clamp within 1e-9 only") {
        o.bfd_normalized = 1.0 + 5e-10;
        CHECK(normalize_bfd(o) == 1.0);
        o.bfd_normalized = -5e-10;
        CHECK(normalize_bfd(o) == 0.0);
        o.bfd_normalized = 1.1;
        CHECK_THROWS_AS(normalize_bfd(o), ValidationError);
    }
}

TEST_CASE("parse_outcomes: invariants enforced with line numbers") {
    const std::string header =
        "participant_id,semester,session_index,opt_index,anomalies_found,anomalies_total,"
        "bfd_normalized\n";
    CHECK_THROWS_WITH_AS(parse_outcomes_text(header + "p,6,0,0,,,\n"),
                         doctest::Contains("line 2"), ValidationError);
    // inconsistent pair
    CHECK_THROWS_AS(parse_outcomes_text(header + "p,6,0,0,1,4,0.5\n"), ValidationError);
    // consistent pair passes
    auto ok = parse_outcomes_text(header + "p,6,0,0,2,4,0.5\n");
    CHECK(ok.size() == 1);
    // bfd-only column set is fine too
    auto ok2 = parse_outcomes_text(
        "participant_id,semester,session_index,opt_index,bfd_normalized\np,6,0,0,0.75\n");
    CHECK(normalize_bfd(ok2[0]) == 0.75);
}

TEST_CASE("build_trials: ordered_index counts chronologically across semesters") {
    std::vector<FixationRecord> fx;
    for (int sem : {7, 6}) // deliberately reversed insert order
        for (int opt = 0; opt < 10; ++opt) {
            FixationRecord r;
            r.participant_id = "p1";
            r.semester = sem;
            r.session_index = 0;
            r.opt_index = opt;
            r.fixation_index = 0;
            r.aoi_id = "A";
            r.start_ms = 0;
            r.duration_ms = 10;
            fx.push_back(r);
        }
    auto table = build_trials(fx, {});
    REQUIRE(table.trials.size() == 20);
    for (int i = 0; i < 20; ++i) {
        CHECK(table.trials[i].first.ordered_index == i);
        CHECK(table.trials[i].first.semester == (i < 10 ? 6 : 7));
    }
}

TEST_CASE("build_trials: trial without outcome keeps a missing score") {
    std::vector<FixationRecord> fx(1);
    fx[0].participant_id = "p1";
    fx[0].aoi_id = "A";
    fx[0].duration_ms = 10;
    auto table = build_trials(fx, {});
    REQUIRE(table.trials.size() == 1);
    CHECK(!table.trials[0].second.bfd.has_value());
}

TEST_CASE("build_trials: outcome without fixations is a warning, not fatal") {
    std::vector<FixationRecord> fx(1);
    fx[0].participant_id = "p1";
    fx[0].aoi_id = "A";
    fx[0].duration_ms = 10;
    TrialOutcome o;
    o.participant_id = "p9";
    o.bfd_normalized = 0.5;
    auto table = build_trials(fx, {o});
    CHECK(table.trials.size() == 1);
    REQUIRE(table.warnings.size() == 1);
    CHECK(table.warnings[0].find("p9") != std::string::npos);
}

TEST_CASE("build_trials: permutation-invariant in input row order") {
    Rng rng(99);
    std::vector<FixationRecord> fx;
    for (int p = 0; p < 3; ++p)
        for (int sem : {6, 7})
            for (int opt = 0; opt < 4; ++opt)
                for (int fi = 0; fi < 5; ++fi) {
                    FixationRecord r;
                    r.participant_id = "p" + std::to_string(p);
                    r.semester = sem;
                    r.session_index = 0;
                    r.opt_index = opt;
                    r.fixation_index = fi;
                    r.aoi_id = std::string(1, static_cast<char>('A' + rng.uniform_int(4)));
                    r.start_ms = fi * 100;
                    r.duration_ms = 50;
                    fx.push_back(r);
                }
    auto sorted_table = build_trials(fx, {});
    auto shuffled = fx;
    rng.shuffle(shuffled);
    shuffled = parse_fixations_text(serialize_fixations(shuffled)); // re-sorts
    auto shuffled_table = build_trials(shuffled, {});
    REQUIRE(sorted_table.trials.size() == shuffled_table.trials.size());
    for (std::size_t i = 0; i < sorted_table.trials.size(); ++i) {
        CHECK(sorted_table.trials[i].first == shuffled_table.trials[i].first);
        CHECK(sorted_table.trials[i].first.ordered_index ==
              shuffled_table.trials[i].first.ordered_index);
        CHECK(sorted_table.trials[i].second.aoi_seq == shuffled_table.trials[i].second.aoi_seq);
    }
}

TEST_CASE("round-trip: parse(serialize(parse(serialize(x)))) is identical") {
    std::vector<FixationRecord> recs(2);
    recs[0].participant_id = "p 1";
    recs[0].aoi_id = "A,left"; // quoting stress
    recs[0].duration_ms = 100;
    recs[1].participant_id = "p 1";
    recs[1].fixation_index = 1;
    recs[1].aoi_id = "B";
    recs[1].start_ms = 100;
    recs[1].duration_ms = 150;
    auto first = parse_fixations_text(serialize_fixations(recs));
    auto second = parse_fixations_text(serialize_fixations(first, "fixations test"));
    CHECK(first == recs);
    CHECK(first == second);

    TrialOutcome o;
    o.participant_id = "p,2";
    o.semester = 7;
    o.anomalies_found = 3;
    o.anomalies_total = 8;
    auto out2 = parse_outcomes_text(serialize_outcomes({o}, "outcomes test"));
    REQUIRE(out2.size() == 1);
    CHECK(out2[0] == o);
}

TEST_CASE("property: ordered_index is a 0..T-1 bijection per participant") {
    Rng rng(7);
    std::vector<FixationRecord> fx;
    for (int p = 0; p < 4; ++p) {
        const int sessions = 1 + rng.uniform_int(3);
        for (int sem : {6, 7, 8})
            for (int sess = 0; sess < sessions; ++sess)
                for (int opt = 0; opt < 1 + rng.uniform_int(5); ++opt) {
                    FixationRecord r;
                    r.participant_id = "p" + std::to_string(p);
                    r.semester = sem;
                    r.session_index = sess;
                    r.opt_index = opt;
                    r.fixation_index = 0;
                    r.aoi_id = "A";
                    r.duration_ms = 10;
                    fx.push_back(r);
                }
    }
    auto table = build_trials(fx, {});
    std::map<std::string, std::set<int>> seen;
    std::map<std::string, int> count;
    for (const auto& [key, data] : table.trials) {
        seen[key.participant_id].insert(key.ordered_index);
        count[key.participant_id] += 1;
    }
    for (const auto& [pid, idxs] : seen) {
        CHECK(static_cast<int>(idxs.size()) == count[pid]);
        CHECK(*idxs.begin() == 0);
        CHECK(*idxs.rbegin() == count[pid] - 1);
    }
}
