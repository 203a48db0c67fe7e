#include "gazenet/error.hpp"
#include "gazenet/rng.hpp"
#include "gazenet/synth.hpp"
#include "gazenet/tsc.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

using namespace gazenet;
using namespace gazenet::tsc;

namespace {

MetricSeries ms(const std::string& pid, std::vector<double> v) {
    return MetricSeries{pid, "m", std::move(v)};
}

} // namespace

TEST_CASE("normalize: zero variance is a flagged pass-through") {
    std::vector<MetricSeries> corpus = {ms("a", {3, 3, 3}), ms("b", {3, 3})};
    auto st = pooled_stats(corpus);
    CHECK(st.degenerate);
    auto out = normalize(corpus[0], st);
    CHECK(out.values == corpus[0].values);
}

TEST_CASE("normalize: arithmetic with given stats") {
    NormStats st;
    st.mean = 1.0;
    st.sd = 1.0;
    auto out = normalize(ms("a", {0, 1, 2}), st);
    CHECK(out.values == std::vector<double>{-1, 0, 1});
}

TEST_CASE("normalize: idempotent on pooled stats") {
    Rng rng(11);
    std::vector<MetricSeries> corpus;
    for (int p = 0; p < 8; ++p) {
        std::vector<double> v;
        for (int i = 0; i < 5 + rng.uniform_int(10); ++i)
            v.push_back(rng.uniform(-3.0, 7.0));
        corpus.push_back(ms("p" + std::to_string(p), v));
    }
    auto st = pooled_stats(corpus);
    std::vector<MetricSeries> once;
    for (const auto& s : corpus) once.push_back(normalize(s, st));
    auto st2 = pooled_stats(once);
    CHECK(st2.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(st2.sd == doctest::Approx(1.0).epsilon(1e-12));
    for (const auto& s : once) {
        auto twice = normalize(s, st2);
        for (std::size_t i = 0; i < s.values.size(); ++i)
            CHECK(twice.values[i] == doctest::Approx(s.values[i]).epsilon(1e-12));
    }
}

TEST_CASE("normalize: minmax mode") {
    std::vector<MetricSeries> corpus = {ms("a", {0, 5, 10})};
    auto st = pooled_stats(corpus);
    auto out = normalize(corpus[0], st, NormalizeMode::minmax);
    CHECK(out.values == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("dtw: identity, duplicate-warp, hand example") {
    std::vector<double> a{1, 2, 3};
    CHECK(dtw_distance(a, a) == 0.0);
    std::vector<double> b{1, 2, 2, 3};
    CHECK(dtw_distance(a, b) == 0.0);
    std::vector<double> x{0, 0, 0}, y{1, 1};
    CHECK(dtw_distance(x, y) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
}

TEST_CASE("dtw: exhaustive path enumeration oracle, lengths <= 6") {
    Rng rng(101);
    for (int rep = 0; rep < 500; ++rep) {
        std::vector<double> x(1 + rng.uniform_int(6)), y(1 + rng.uniform_int(6));
        for (auto& v : x) v = rng.uniform(-2, 2);
        for (auto& v : y) v = rng.uniform(-2, 2);
        CHECK(dtw_distance(x, y) ==
              doctest::Approx(oracles::dtw_bruteforce(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("dtw: symmetry and non-negativity") {
    Rng rng(103);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> x(2 + rng.uniform_int(10)), y(2 + rng.uniform_int(10));
        for (auto& v : x) v = rng.uniform(-5, 5);
        for (auto& v : y) v = rng.uniform(-5, 5);
        const double d1 = dtw_distance(x, y), d2 = dtw_distance(y, x);
        CHECK(d1 == doctest::Approx(d2).epsilon(1e-13));
        CHECK(d1 >= 0.0);
    }
}

TEST_CASE("dtw: Sakoe-Chiba band") {
    std::vector<double> x{0, 1, 2, 3, 4, 5}, y{0, 1, 2, 3, 4, 5};
    CHECK(dtw_distance(x, y, 1) == 0.0); // diagonal fits any band
    std::vector<double> s{0, 0, 0, 0, 0}, t{0, 0};
    CHECK_THROWS_AS(dtw_distance(s, t, 1), ValidationError); // |5-2| > 1: no path
    Rng rng(107);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> a(3 + rng.uniform_int(6)), b(3 + rng.uniform_int(6));
        for (auto& v : a) v = rng.uniform(-1, 1);
        for (auto& v : b) v = rng.uniform(-1, 1);
        CHECK(dtw_distance(a, b, 32) == doctest::Approx(dtw_distance(a, b)).epsilon(1e-14));
    }
}

TEST_CASE("dtw_align: path is monotone and covers both ends") {
    std::vector<double> x{0, 1, 0, 2}, y{0, 1, 2};
    auto al = dtw_align(x, y);
    CHECK(al.path.front() == std::pair<int, int>{0, 0});
    CHECK(al.path.back() == std::pair<int, int>{3, 2});
    for (std::size_t i = 1; i < al.path.size(); ++i) {
        const int di = al.path[i].first - al.path[i - 1].first;
        const int dj = al.path[i].second - al.path[i - 1].second;
        CHECK(di >= 0);
        CHECK(dj >= 0);
        CHECK(di + dj >= 1);
        CHECK(di <= 1);
        CHECK(dj <= 1);
    }
}

TEST_CASE("dba: single member resampled, identical members, symmetric mean") {
    std::vector<std::vector<double>> one = {{1, 2, 3, 4}};
    CHECK(dba_centroid(one, 4) == one[0]);
    auto stretched = dba_centroid(one, 7);
    CHECK(stretched.size() == 7);
    CHECK(stretched.front() == 1.0);
    CHECK(stretched.back() == 4.0);

    std::vector<std::vector<double>> twins = {{1, 5, 2}, {1, 5, 2}};
    CHECK(dba_centroid(twins, 3) == twins[0]);

    std::vector<std::vector<double>> pair = {{0, 0, 0}, {2, 2, 2}};
    auto c = dba_centroid(pair, 3);
    REQUIRE(c.size() == 3);
    for (double v : c) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kmeans: planted two-level corpus recovered exactly") {
    Rng rng(211);
    std::vector<MetricSeries> series;
    std::vector<int> truth;
    for (int i = 0; i < 10; ++i) {
        std::vector<double> v(5 + rng.uniform_int(5), 0.0);
        series.push_back(ms("lo" + std::to_string(i), v));
        truth.push_back(0);
    }
    for (int i = 0; i < 10; ++i) {
        std::vector<double> v(5 + rng.uniform_int(5), 10.0);
        series.push_back(ms("hi" + std::to_string(i), v));
        truth.push_back(1);
    }
    auto res = kmeans_dtw(series, 2, {});
    CHECK(res.silhouette > 0.99);
    CHECK(res.assignments == truth); // canonical labels: ascending centroid mean
}

TEST_CASE("kmeans: all-identical series is a degenerate clustering") {
    std::vector<MetricSeries> series;
    for (int i = 0; i < 6; ++i) series.push_back(ms("p" + std::to_string(i), {1, 1, 1}));
    auto res = kmeans_dtw(series, 2, {});
    CHECK(res.silhouette <= 0.0);
    CHECK(res.degenerate_structure);
}

TEST_CASE("kmeans: k larger than eligible count errors") {
    std::vector<MetricSeries> series = {ms("a", {1, 2}), ms("b", {2, 3})};
    CHECK_THROWS_AS(kmeans_dtw(series, 3, {}), ValidationError);
}

TEST_CASE("kmeans: short series are reported unclustered") {
    std::vector<MetricSeries> series = {ms("a", {0, 0, 0}), ms("b", {0, 0}),
                                        ms("c", {9, 9, 9}), ms("d", {9, 9}),
                                        ms("single", {5})};
    auto res = kmeans_dtw(series, 2, {});
    CHECK(res.assignments[4] == -1);
    CHECK(res.assignments[0] == res.assignments[1]);
    CHECK(res.assignments[2] == res.assignments[3]);
    CHECK(res.assignments[0] != res.assignments[2]);
}

TEST_CASE("kmeans: permutation of input order only relabels participants") {
    Rng rng(223);
    std::vector<MetricSeries> series;
    for (int i = 0; i < 14; ++i) {
        const double level = (i % 2) ? 4.0 : -1.0;
        std::vector<double> v(4 + rng.uniform_int(6));
        for (auto& x : v) x = level + rng.normal(0.0, 0.3);
        series.push_back(ms("p" + std::to_string(i), v));
    }
    KmeansOptions opts;
    opts.seed = 5;
    auto base = kmeans_dtw(series, 2, opts);

    auto shuffled = series;
    Rng shuffler(71);
    shuffler.shuffle(shuffled);
    auto permuted = kmeans_dtw(shuffled, 2, opts);

    std::map<std::string, int> base_of, perm_of;
    for (std::size_t i = 0; i < series.size(); ++i)
        base_of[series[i].participant_id] = base.assignments[i];
    for (std::size_t i = 0; i < shuffled.size(); ++i)
        perm_of[shuffled[i].participant_id] = permuted.assignments[i];
    // canonical labels make the mapping the identity
    CHECK(base_of == perm_of);
}

TEST_CASE("kmeans: inertia trace is non-increasing") {
    Rng rng(227);
    std::vector<MetricSeries> series;
    for (int i = 0; i < 20; ++i) {
        std::vector<double> v(6 + rng.uniform_int(8));
        for (auto& x : v) x = rng.uniform(-2, 2) + (i % 3);
        series.push_back(ms("p" + std::to_string(i), v));
    }
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        KmeansOptions opts;
        opts.seed = seed;
        opts.restarts = 3;
        auto res = kmeans_dtw(series, 3, opts);
        for (std::size_t i = 1; i < res.inertia_trace.size(); ++i)
            CHECK(res.inertia_trace[i] <= res.inertia_trace[i - 1] + 1e-9);
    }
}

TEST_CASE("select_k: planted 3-level picks k=3, 2-level picks k=2") {
    auto three =
        synth::planted_cluster_series(std::vector<double>{0, 5, 10}, 6, 6, 10, 0.1, 314);
    auto res3 = select_k(three.series);
    CHECK(res3.k == 3);
    std::map<int, int> seen; // planted level -> assigned cluster (a bijection)
    for (std::size_t i = 0; i < three.series.size(); ++i) {
        const int t = three.truth[i];
        if (!seen.count(t)) seen[t] = res3.assignments[i];
        CHECK(seen[t] == res3.assignments[i]);
    }
    CHECK(seen.size() == 3);

    auto two = synth::planted_cluster_series(std::vector<double>{0, 10}, 8, 5, 9, 0.1, 628);
    auto res2 = select_k(two.series);
    CHECK(res2.k == 2);
    CHECK(!res2.low_confidence);
}

TEST_CASE("select_k: structureless noise reports low confidence at k=2") {
    Rng rng(229);
    std::vector<MetricSeries> series;
    for (int i = 0; i < 16; ++i) {
        std::vector<double> v(8);
        for (auto& x : v) x = rng.normal(0.0, 1.0);
        series.push_back(ms("p" + std::to_string(i), v));
    }
    auto res = select_k(series);
    CHECK(res.k == 2); // ties and weak structure fall to the smaller k
    CHECK(res.low_confidence);
    CHECK(res.silhouette < 0.25);
}
