#include "test_support.hpp"

#include <teamprod/code_metrics.hpp>
#include <teamprod/ownership.hpp>
#include <teamprod/synthkit/oracles.hpp>
#include <teamprod/util/rng.hpp>
#include <teamprod/windows.hpp>

#include <cmath>

using namespace teamprod;
using namespace teamprod::windows;
using testing_support::commit;
using testing_support::fixture;

namespace {

const Timestamp t0 = parse_timestamp("2015-03-02T00:00:00Z");

ingest::CommitRecord at_day(long long d, const std::string& who, int seq = 0) {
    auto c = commit("c" + std::to_string(d) + "_" + std::to_string(seq), {}, who, "2015-03-02T00:00:00Z");
    c.timestamp = t0 + days(d) + std::chrono::seconds(seq);
    return c;
}

// Interval scan: the window whose half-open range contains ts, or -1.
int brute_window(Timestamp anchor, Timestamp ts, int count, long long window_days) {
    for (int j = 0; j < count; ++j) {
        auto lo = anchor + days(window_days * j);
        auto hi = anchor + days(window_days * (j + 1));
        if (lo <= ts && ts < hi) return j;
    }
    return -1;
}

long long brute_moving(const std::vector<ingest::CommitRecord>& cs, Timestamp t, long long span) {
    std::vector<std::string> seen;
    for (const auto& c : cs) {
        auto age = std::chrono::duration_cast<std::chrono::seconds>(t - c.timestamp).count();
        if (age >= 0 && age < span * 86400 && std::find(seen.begin(), seen.end(), c.author_id) == seen.end())
            seen.push_back(c.author_id);
    }
    return static_cast<long long>(seen.size());
}

std::map<std::string, metrics::FileMetricVector> deltas_for(const ingest::CommitStream& s) {
    std::map<std::string, metrics::FileMetricVector> out;
    const auto& py = metrics::python_profile();
    for (const auto& c : s) {
        metrics::FileMetricVector sum;
        for (const auto& ch : c.changes) {
            metrics::FileMetricVector pre, post;
            if (ch.pre_text) pre = metrics::file_metrics(*ch.pre_text, py);
            if (ch.post_text) post = metrics::file_metrics(*ch.post_text, py);
            auto d = metrics::commit_code_delta(pre, post);
            sum.nloc += d.nloc;
            sum.token_count += d.token_count;
            sum.function_count += d.function_count;
            sum.cyclomatic += d.cyclomatic;
            sum.halstead.effort += d.halstead.effort;
        }
        out[c.hash] = sum;
    }
    return out;
}

}  // namespace

TEST(Segment, SixHundredDaysGivesTwoWindows) {
    std::vector<ingest::CommitRecord> cs{at_day(0, "a"), at_day(300, "a"), at_day(600, "b")};
    auto ws = segment_windows(cs, {});
    ASSERT_EQ(ws.size(), 2u);
    EXPECT_EQ(ws[0].start, t0);
    EXPECT_EQ(ws[0].end, t0 + days(294));
    EXPECT_EQ(ws[1].end, t0 + days(588));
    EXPECT_EQ(ws[0].commits, std::vector<std::size_t>{0});
    EXPECT_EQ(ws[1].commits, std::vector<std::size_t>{1});

    WindowConfig keep;
    keep.drop_partial_tail = false;
    auto all = segment_windows(cs, keep);
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[2].commits, std::vector<std::size_t>{2});
}

TEST(Segment, SingleCommitAtAnchor) {
    std::vector<ingest::CommitRecord> one{at_day(0, "a")};
    EXPECT_TRUE(segment_windows(one, {}).empty());
    EXPECT_TRUE(segment_windows(one, {}, t0, t0 + days(293)).empty());
    auto ws = segment_windows(one, {}, t0, t0 + days(294));
    ASSERT_EQ(ws.size(), 1u);
    EXPECT_EQ(ws[0].commits, std::vector<std::size_t>{0});
}

TEST(Segment, WeeklyCommitsOverThousandDays) {
    std::vector<ingest::CommitRecord> cs;
    for (long long d = 0; d < 1000; d += 7) cs.push_back(at_day(d, "dev" + std::to_string(d % 3)));
    auto ws = segment_windows(cs, {});
    ASSERT_EQ(ws.size(), 3u);
    std::vector<std::size_t> sizes;
    for (const auto& w : ws) sizes.push_back(w.commits.size());
    EXPECT_EQ(sizes, (std::vector<std::size_t>{42, 42, 42}));
    for (std::size_t i = 0; i < cs.size(); ++i) {
        int expected = brute_window(t0, cs[i].timestamp, 3, 294);
        int got = -1;
        for (const auto& w : ws)
            if (std::count(w.commits.begin(), w.commits.end(), i)) got = w.index;
        EXPECT_EQ(got, expected) << "commit " << i;
    }
}

TEST(Segment, RandomHistoriesMatchIntervalScan) {
    Rng rng(17);
    for (int round = 0; round < 50; ++round) {
        std::vector<ingest::CommitRecord> cs;
        for (auto n = rng.between(1, 80); n > 0; --n)
            cs.push_back(at_day(rng.between(0, 2000), "a", static_cast<int>(n)));
        WindowConfig cfg;
        cfg.window_days = 7 * rng.between(1, 60);
        auto ws = segment_windows(cs, cfg);
        Timestamp anchor = cs.front().timestamp;
        for (const auto& c : cs) anchor = std::min(anchor, c.timestamp);
        std::size_t assigned = 0;
        for (std::size_t j = 0; j < ws.size(); ++j) {
            EXPECT_EQ(ws[j].end - ws[j].start, days(cfg.window_days));
            if (j) {
                EXPECT_EQ(ws[j].start, ws[j - 1].end);
            }
            assigned += ws[j].commits.size();
        }
        for (std::size_t i = 0; i < cs.size(); ++i) {
            int expected = brute_window(anchor, cs[i].timestamp, static_cast<int>(ws.size()), cfg.window_days);
            if (expected >= 0)
                EXPECT_TRUE(std::count(ws[expected].commits.begin(), ws[expected].commits.end(), i));
            else
                ++assigned;
        }
        EXPECT_EQ(assigned, cs.size());
    }
}

TEST(Segment, Errors) {
    EXPECT_ERROR_KIND(segment_windows({}, {}), ErrorKind::empty_history);
    WindowConfig bad;
    bad.window_days = 300;
    EXPECT_ERROR_KIND(segment_windows({at_day(0, "a")}, bad), ErrorKind::invalid_argument);
}

TEST(TeamSize, DistinctResolvedAuthors) {
    std::vector<ingest::CommitRecord> cs;
    for (int i = 0; i < 5; ++i) cs.push_back(at_day(i, "a"));
    EXPECT_EQ(team_size(cs), 1);
    auto alias = at_day(9, "a");
    alias.author_email = "a@old.example";
    cs.push_back(alias);
    cs.push_back(at_day(10, "b"));
    EXPECT_EQ(team_size(cs), 2);
}

TEST(TeamSize, MovingWindow) {
    std::vector<ingest::CommitRecord> cs{at_day(0, "a"), at_day(100, "b")};
    EXPECT_EQ(moving_team_size(cs, t0 + days(400)), 0);
    cs.push_back(at_day(300, "c"));
    EXPECT_EQ(moving_team_size(cs, t0 + days(400)), 1);
    EXPECT_EQ(moving_team_size(cs, t0 + days(300)), 2);

    Rng rng(5);
    std::vector<ingest::CommitRecord> many;
    for (int i = 0; i < 300; ++i) many.push_back(at_day(rng.between(0, 1500), "dev" + std::to_string(rng.below(25)), i));
    for (int k = 0; k < 1000; ++k) {
        auto t = t0 + days(rng.between(-10, 1700)) + std::chrono::seconds(rng.between(0, 400));
        ASSERT_EQ(moving_team_size(many, t), brute_moving(many, t, 294));
    }
}

TEST(Productivity, CalcVersionOneWindow) {
    auto v1 = commit("v1", {}, "alice", "2016-01-04T10:00:00Z", {testing_support::added("calc.py", fixture("calc/v1.py"))});
    ingest::CommitStream s{v1};
    auto events = ownership::replay_ownership(s).events;
    auto deltas = deltas_for(s);
    auto p = aggregate_productivity(s, deltas, events, team_size(s));
    EXPECT_EQ(p.comms, 1);
    EXPECT_EQ(p.events, 3);
    EXPECT_EQ(p.levd, 53);
    EXPECT_EQ(p.nloc, 2);
    EXPECT_EQ(p.tokens, 12);
    EXPECT_EQ(p.funcs, 1);
    EXPECT_EQ(p.cycc, 1);
    EXPECT_NEAR(p.haleff, 180, 1e-9);

    auto half = aggregate_productivity(s, deltas, events, 2);
    auto f = p.fields();
    auto h = half.fields();
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(*h[i], *f[i] / 2);

    auto scaled = aggregate_productivity(s, deltas, events, 1, 294.0);
    EXPECT_DOUBLE_EQ(scaled.levd, 53.0 / 294.0);
}

TEST(Productivity, ThreeVersionWindowMatchesNaiveReplay) {
    auto v1 = commit("v1", {}, "alice", "2016-01-04T10:00:00Z", {testing_support::added("calc.py", fixture("calc/v1.py"))});
    auto v2 = commit("v2", {"v1"}, "bob", "2016-01-05T10:00:00Z",
                     {testing_support::modified("calc.py", fixture("calc/v1.py"), fixture("calc/v2.py"))});
    auto v3 = commit("v3", {"v2"}, "alice", "2016-01-06T10:00:00Z",
                     {testing_support::modified("calc.py", fixture("calc/v2.py"), fixture("calc/v3.py"))});
    ingest::CommitStream s{v1, v2, v3};
    auto events = ownership::replay_ownership(s).events;
    auto naive = synthkit::naive_ownership_replay(s);
    double levd = 0;
    for (const auto& e : naive) levd += static_cast<double>(e.lev_distance);
    auto p = aggregate_productivity(s, deltas_for(s), events, team_size(s));
    EXPECT_EQ(team_size(s), 2);
    EXPECT_DOUBLE_EQ(p.comms, 1.5);
    EXPECT_DOUBLE_EQ(p.events, static_cast<double>(naive.size()) / 2);
    EXPECT_DOUBLE_EQ(p.levd, levd / 2);
    EXPECT_DOUBLE_EQ(p.nloc, 2.0);           // 2 + 2 + 0
    EXPECT_DOUBLE_EQ(p.tokens, 25.0 / 2);    // 12 + 12 + 1
    EXPECT_DOUBLE_EQ(p.funcs, 3.0 / 2);      // 1 + 1 + |1 - 2|
    EXPECT_DOUBLE_EQ(p.cycc, 1.0);           // 1 + 1 + 0
}

TEST(Productivity, EmptyWindowAndMissingDelta) {
    auto p = aggregate_productivity({}, {}, {}, 0);
    EXPECT_TRUE(p.all_zero());
    EXPECT_ERROR_KIND(aggregate_productivity({at_day(0, "a")}, {}, {}, 1), ErrorKind::missing_delta);
}

TEST(Productivity, DuplicatingUnderNewAuthorsKeepsRatio) {
    ingest::CommitStream s;
    for (int i = 0; i < 6; ++i) s.push_back(at_day(i, "dev" + std::to_string(i % 3), i));
    std::map<std::string, metrics::FileMetricVector> deltas;
    for (const auto& c : s) deltas[c.hash].nloc = 4;
    auto p = aggregate_productivity(s, deltas, {}, team_size(s));
    auto doubled = s;
    for (auto c : s) {
        c.hash += "_dup";
        c.author_id += "_twin";
        deltas[c.hash].nloc = 4;
        doubled.push_back(c);
    }
    EXPECT_EQ(team_size(doubled), 2 * team_size(s));
    auto q = aggregate_productivity(doubled, deltas, {}, team_size(doubled));
    EXPECT_DOUBLE_EQ(q.comms, p.comms);
    EXPECT_DOUBLE_EQ(q.nloc, p.nloc);
}

TEST(Transforms, ExamplesAndErrors) {
    EXPECT_EQ(apply_transform(Transform::log, 1.0), 0.0);
    EXPECT_EQ(apply_transform(Transform::sqrt, 4.0), 2.0);
    EXPECT_EQ(apply_transform(Transform::identity, 0.3), 0.3);
    EXPECT_ERROR_KIND(apply_transform(Transform::log, 0.0), ErrorKind::nonpositive_under_log);
    EXPECT_ERROR_KIND(parse_transform("cube"), ErrorKind::malformed_input);

    auto spec = TransformSpec::defaults();
    EXPECT_EQ(spec.of("fmodr"), Transform::identity);
    EXPECT_EQ(spec.of("ind"), Transform::log);
    EXPECT_EQ(spec.of("team_size"), Transform::log);
    EXPECT_EQ(spec.of("dens"), Transform::identity);

    WindowObservation o;
    o.team_size = std::exp(1.0);
    for (auto* f : o.productivity.fields()) *f = 1.0;
    o.network.ind = 2.0;
    o.network.fmodr = 0.3;
    o.network_filled = true;
    auto out = apply_transforms({o}, spec);
    EXPECT_NEAR(out[0].team_size, 1.0, 1e-15);
    EXPECT_EQ(out[0].productivity.levd, 0.0);
    EXPECT_NEAR(out[0].network.ind, std::log(2.0), 1e-15);
    EXPECT_EQ(out[0].network.fmodr, 0.3);
    EXPECT_TRUE(out[0].transformed);
    EXPECT_ERROR_KIND(apply_transforms(out, spec), ErrorKind::invalid_argument);

    o.productivity.events = 0;
    EXPECT_FALSE(transformable(o, spec));
    EXPECT_ERROR_KIND(apply_transforms({o}, spec), ErrorKind::nonpositive_under_log);
}

TEST(Transforms, OverridesFromKv) {
    auto doc = kv::Document::parse("ind = sqrt\nfmodr = log\n");
    auto s = TransformSpec::from_kv(doc);
    EXPECT_EQ(s.of("ind"), Transform::sqrt);
    EXPECT_EQ(s.of("fmodr"), Transform::log);
    EXPECT_ERROR_KIND(TransformSpec::from_kv(kv::Document::parse("speed = log\n")), ErrorKind::malformed_input);
    EXPECT_NE(s.to_sidecar().find("transform.ind = sqrt"), std::string::npos);
}

TEST(Observations, DropInactiveUsesAllZeroRule) {
    WindowObservation idle, partial, busy;
    partial.productivity.comms = 1;
    for (auto* f : busy.productivity.fields()) *f = 2;
    auto kept = drop_inactive({idle, partial, busy});
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].productivity.comms, 1);
}

TEST(Observations, CsvRoundTrip) {
    WindowObservation a;
    a.project_id = "p,1";
    a.window_index = 3;
    a.start_ts = t0;
    a.end_ts = t0 + days(294);
    a.team_size = 4;
    a.productivity.levd = 12.25;
    a.productivity.haleff = 1e-7;
    WindowObservation b = a;
    b.window_index = 4;
    b.network = {5, 7, 0.35, 2, 0.5, 1.25, 0.75, 0.1};
    b.network_filled = true;
    auto text = write_observations({a, b});
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "project_id,window_index,start_ts,end_ts,team_size,comms,events,levd,nloc,tokens,funcs,cycc,haleff,"
              "n,edges,dens,diam,clustc,ind,fmodr,eigg");
    auto back = read_observations(text);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].project_id, "p,1");
    EXPECT_FALSE(back[0].network_filled);
    EXPECT_EQ(back[0].productivity, a.productivity);
    EXPECT_EQ(back[1].end_ts, b.end_ts);
    EXPECT_TRUE(back[1].network_filled);
    EXPECT_EQ(back[1].network.edges, 7);
    EXPECT_EQ(back[1].network.fmodr, 0.75);
    EXPECT_EQ(write_observations(back), text);
}
