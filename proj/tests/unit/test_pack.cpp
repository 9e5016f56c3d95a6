#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "redforge/pack.hpp"
#include "redforge/tokenizer.hpp"

using namespace redforge;
using namespace redforge::pack;

namespace {

Document post(const std::string& id, const std::string& text) {
    return make_document(id, Source::sns, "notes", text, InteractionMeta{std::nullopt, 0});
}

Document reply(const std::string& id, const std::string& parent, std::int64_t likes, const std::string& text = "") {
    return make_document(id, Source::sns, "notes", text.empty() ? "reply " + id : text, InteractionMeta{parent, likes});
}

std::string words(std::size_t n, bool end_with_period) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) s += ' ';
        s += "w";
    }
    if (end_with_period) s += '.';
    return s;
}

std::vector<std::size_t> token_counts(const std::vector<Segment>& segs) {
    std::vector<std::size_t> out;
    for (const auto& s : segs) out.push_back(s.tokens);
    return out;
}

Segment seg(const std::string& id, std::size_t tokens) { return Segment{id, 0, tokens, tokens}; }

}  // namespace

TEST_CASE("group_by_interaction orders comments by likes then id") {
    const std::vector<Document> docs{post("C", "context"), reply("A", "C", 5), reply("B", "C", 9)};
    const auto r = group_by_interaction(docs);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].context_id == "C");
    CHECK(r.groups[0].members == std::vector<std::string>{"C", "B", "A"});
    CHECK(r.groups[0].combined_text == "context\nreply B\nreply A");
    CHECK(r.orphans.empty());
}

TEST_CASE("group_by_interaction like ties break on id") {
    const std::vector<Document> docs{post("C", "c"), reply("z", "C", 3), reply("m", "C", 3), reply("q", "C", 7)};
    const auto r = group_by_interaction(docs);
    CHECK(r.groups[0].members == std::vector<std::string>{"C", "q", "m", "z"});
}

TEST_CASE("group_by_interaction dangling parent goes to orphans") {
    const std::vector<Document> docs{post("C", "c"), reply("x", "missing", 1)};
    const auto r = group_by_interaction(docs);
    REQUIRE(r.orphans.size() == 1);
    CHECK(r.orphans[0].id == "x");
    CHECK(r.groups.size() == 1);
}

TEST_CASE("group_by_interaction nested replies join the root group") {
    const std::vector<Document> docs{reply("r2", "r1", 1), post("root", "r"), reply("r1", "root", 2)};
    const auto r = group_by_interaction(docs);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].members == std::vector<std::string>{"root", "r1", "r2"});
}

TEST_CASE("group_by_interaction cycles and chains into dangling parents are orphaned") {
    const std::vector<Document> docs{reply("a", "b", 0), reply("b", "a", 0), reply("c", "a", 0),
                                     reply("d", "nowhere", 0), reply("e", "d", 0), post("solo", "s")};
    const auto r = group_by_interaction(docs);
    CHECK(r.orphans.size() == 5);
    REQUIRE(r.groups.size() == 1);
    CHECK(r.groups[0].members == std::vector<std::string>{"solo"});
}

TEST_CASE("documents without parent or children form singleton groups in input order") {
    const std::vector<Document> docs{post("p1", "one"), make_document("g", Source::general, "web", "two"),
                                     post("p2", "three")};
    const auto r = group_by_interaction(docs);
    REQUIRE(r.groups.size() == 3);
    CHECK(r.groups[0].context_id == "p1");
    CHECK(r.groups[1].context_id == "g");
    CHECK(r.groups[2].context_id == "p2");
    for (const auto& g : r.groups) CHECK(g.members.size() == 1);
}

TEST_CASE("segment_document examples") {
    SUBCASE("hard split of a boundary-free text") {
        const auto segs = segment_text("d", words(9000, false), 4096);
        CHECK(token_counts(segs) == std::vector<std::size_t>{4096, 4096, 808});
    }
    SUBCASE("short text is one segment") {
        const auto segs = segment_document(post("d", words(100, false)), 4096);
        CHECK(token_counts(segs) == std::vector<std::size_t>{100});
    }
    SUBCASE("sentence boundary is preferred over a hard cut") {
        const std::string a = words(3000, true);
        const std::string b = words(2000, true);
        const std::string text = a + " " + b;
        const auto segs = segment_text("d", text, 4096);
        REQUIRE(segs.size() == 2);
        CHECK(segs[0].tokens == 3000);
        CHECK(segs[1].tokens == 2000);
        CHECK(text.substr(segs[1].start, segs[1].end - segs[1].start) == b);
        CHECK(text.substr(segs[0].start, segs[0].end - segs[0].start) == a + " ");
    }
}

TEST_CASE("segment_text edge cases") {
    CHECK(segment_text("e", "", 10).empty());
    CHECK_THROWS_AS(segment_text("e", "a b", 0), Error);
    // leading whitespace stays inside the first segment
    const std::string t = "  a b. c d";
    const auto segs = segment_text("x", t, 2);
    REQUIRE(segs.size() == 2);
    CHECK(segs.front().start == 0);
    CHECK(segs.back().end == t.size());
    // CJK codepoints count one token each
    const auto cjk = segment_text("c", "今天天气很好。明天也好。", 6);
    CHECK(token_counts(cjk) == std::vector<std::size_t>{6, 6});
}

TEST_CASE("pack_segments first-fit-decreasing example") {
    const std::vector<Segment> in{seg("a", 3000), seg("b", 1500), seg("c", 600)};
    const auto out = pack_segments(in, 4096);
    REQUIRE(out.size() == 2);
    CHECK(token_counts(out[0].segments) == std::vector<std::size_t>{3000, 600});
    CHECK(token_counts(out[1].segments) == std::vector<std::size_t>{1500});
    CHECK(out[0].token_count == 3600);
    CHECK(out[1].token_count == 1500);
}

TEST_CASE("pack_segments rejects an oversize segment") {
    const std::vector<Segment> in{seg("a", 10), seg("b", 4097)};
    CHECK_THROWS_AS(pack_segments(in, 4096), Error);
}

TEST_CASE("pack_segments equal sizes keep input order") {
    const std::vector<Segment> in{seg("x", 5), seg("y", 5), seg("z", 5)};
    const auto out = pack_segments(in, 10);
    REQUIRE(out.size() == 2);
    CHECK(out[0].segments[0].doc_id == "x");
    CHECK(out[0].segments[1].doc_id == "y");
    CHECK(out[1].segments[0].doc_id == "z");
}

TEST_CASE("packing properties over random segment sets") {
    std::mt19937_64 rng(2024);
    const char* vocab[] = {"alpha", "beta.", "gamma", "delta!", "eps", "中", "文。", "zeta?"};
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t threshold = 4 + rng() % 60;
        std::vector<Document> docs;
        const int ndocs = 1 + static_cast<int>(rng() % 8);
        for (int d = 0; d < ndocs; ++d) {
            std::string text;
            const int n = static_cast<int>(rng() % 200);
            for (int i = 0; i < n; ++i) {
                text += vocab[rng() % 8];
                text += (rng() % 5 == 0) ? "\n" : (rng() % 7 == 0 ? "  " : " ");
            }
            docs.push_back(make_document("d" + std::to_string(d), Source::general, "web", text));
        }

        std::vector<Segment> segments;
        std::size_t input_tokens = 0;
        for (const auto& doc : docs) {
            const auto segs = segment_document(doc, threshold);
            std::string rebuilt;
            std::size_t pos = 0;
            for (const auto& s : segs) {
                CHECK(s.tokens <= threshold);
                CHECK(s.tokens >= 1);
                CHECK(s.start == pos);
                CHECK(count_tokens(std::string_view(doc.text).substr(s.start, s.end - s.start)) == s.tokens);
                rebuilt += doc.text.substr(s.start, s.end - s.start);
                pos = s.end;
            }
            if (doc.token_count > 0) CHECK(rebuilt == doc.text);
            input_tokens += doc.token_count;
            segments.insert(segments.end(), segs.begin(), segs.end());
        }

        const auto packed = pack_segments(segments, threshold);
        std::size_t packed_tokens = 0;
        std::size_t packed_segments = 0;
        for (const auto& p : packed) {
            CHECK_FALSE(p.segments.empty());
            CHECK(p.token_count <= threshold);
            std::size_t sum = 0;
            for (std::size_t i = 0; i < p.segments.size(); ++i) {
                sum += p.segments[i].tokens;
                if (i) CHECK(p.segments[i - 1].tokens >= p.segments[i].tokens);
            }
            CHECK(sum == p.token_count);
            packed_tokens += sum;
            packed_segments += p.segments.size();
        }
        CHECK(packed_tokens == input_tokens);
        CHECK(packed_segments == segments.size());

        // determinism
        const auto again = pack_segments(segments, threshold);
        REQUIRE(again.size() == packed.size());
        for (std::size_t i = 0; i < packed.size(); ++i) CHECK(again[i].segments == packed[i].segments);
    }
}

TEST_CASE("grouping partitions the input") {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Document> docs;
        const int n = 1 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            const std::string id = "n" + std::to_string(i);
            const auto kind = rng() % 4;
            if (kind == 0) docs.push_back(post(id, "post " + id));
            else if (kind == 3) docs.push_back(reply(id, "ghost" + std::to_string(i), 0));
            else docs.push_back(reply(id, "n" + std::to_string(rng() % n), static_cast<int>(rng() % 10)));
        }
        const auto r = group_by_interaction(docs);
        std::multiset<std::string> seen;
        for (const auto& g : r.groups) {
            CHECK(g.members.front() == g.context_id);
            seen.insert(g.members.begin(), g.members.end());
        }
        for (const auto& o : r.orphans) seen.insert(o.id);
        std::multiset<std::string> want;
        for (const auto& d : docs) want.insert(d.id);
        CHECK(seen == want);
    }
}

TEST_CASE("pack_corpus token conservation and report") {
    std::vector<Document> docs{post("C", words(30, true)), reply("A", "C", 1, words(20, true)),
                               reply("o", "missing", 0, words(50, false)), post("P", words(5, true))};
    const auto r = pack_corpus(docs, 40);
    std::size_t total = 0;
    for (const auto& s : r.sequences) {
        CHECK(s.token_count <= 40);
        total += s.token_count;
    }
    CHECK(total == 105);
    CHECK(r.report.tokens == 105);
    CHECK(r.report.input_docs == 4);
    CHECK(r.report.groups == 2);
    CHECK(r.report.orphans == 1);
    CHECK(r.report.threshold == 40);
    CHECK(r.report.fill_ratio == doctest::Approx(105.0 / (40.0 * static_cast<double>(r.sequences.size()))));
    CHECK_THROWS_AS(pack_corpus(docs, 0), Error);
}

TEST_CASE("packed sequence json layout") {
    PackedSequence p{{Segment{"d1", 0, 12, 3}}, 3};
    const auto j = to_json(p);
    CHECK(j.dump() == R"({"segments":[{"doc_id":"d1","start":0,"end":12}],"token_count":3})");
}
