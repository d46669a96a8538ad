#include <random>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "tiser/context_parser.hpp"

using namespace tiser;

namespace {

ParsedContext parse_fixture(const std::string& name) {
    return parse_context(tiser::testfs::read_fixture(name));
}

void check_round_trip(const ParsedContext& parsed) {
    REQUIRE(parsed.residual.empty());
    std::string rendered = render_context(parsed);
    ParsedContext again = parse_context(rendered);
    CHECK(again.format == parsed.format);
    REQUIRE(again.facts.size() == parsed.facts.size());
    for (size_t i = 0; i < parsed.facts.size(); ++i) CHECK(again.facts[i] == parsed.facts[i]);
}

}  // namespace

TEST_CASE("format detection on the paper contexts") {
    CHECK(detect_format("(Lucas Prescott was born in Northampton, Massachusetts) starts at "
                        "1908") == ContextFormat::tgqa_tuple);
    CHECK(detect_format("2006 - 2007 : Taylor Graham's team is ( New York Red Bulls )") ==
          ContextFormat::interval_colon);
    CHECK(detect_format("E11 was the R17 of E69 from 1946 to 1950.") ==
          ContextFormat::tot_symbolic);
    CHECK(detect_format("George Washington was the first president.") ==
          ContextFormat::unknown);
}

TEST_CASE("tgqa tuple parsing extracts statement and boundary") {
    auto parsed = parse_context("(Amy Johnson was married to Olivia Price) starts at 1914");
    REQUIRE(parsed.facts.size() == 1);
    CHECK(parsed.facts[0].statement == "Amy Johnson was married to Olivia Price");
    CHECK(parsed.facts[0].kind == FactKind::point_start);
    CHECK(parsed.facts[0].start == TimePoint::of_year(1914));
}

TEST_CASE("interval_colon parsing extracts subject, relation and object") {
    auto parsed = parse_context("2012 - 2014 : Conor Sammon's team is ( Derby County )");
    REQUIRE(parsed.facts.size() == 1);
    const auto& f = parsed.facts[0];
    CHECK(f.subject == "Conor Sammon");
    CHECK(f.relation == "team");
    CHECK(f.object == "Derby County");
    CHECK(f.kind == FactKind::interval);
    CHECK(f.start == TimePoint::of_year(2012));
    CHECK(f.end == TimePoint::of_year(2014));
}

TEST_CASE("tot symbolic parsing") {
    auto parsed = parse_context("E16 was the R88 of E25 from 1948 to 1951");
    REQUIRE(parsed.facts.size() == 1);
    const auto& f = parsed.facts[0];
    CHECK(f.subject == "E16");
    CHECK(f.relation == "R88");
    CHECK(f.object == "E25");
    CHECK(f.start == TimePoint::of_year(1948));
    CHECK(f.end == TimePoint::of_year(1951));
}

TEST_CASE("appendix contexts parse with zero residual") {
    for (const char* name :
         {"context_appendix_c.txt", "context_appendix_e.txt", "context_appendix_g.txt",
          "context_appendix_h.txt", "context_table8_tgqa.txt", "context_table8_timeqa.txt",
          "context_table8_tempreason.txt", "context_table9_tot.txt",
          "context_table9_multihoprag.txt"}) {
        CAPTURE(name);
        auto parsed = parse_fixture(name);
        CHECK(parsed.residual.empty());
        CHECK(!parsed.facts.empty());
    }
}

TEST_CASE("clause counts match the papers' contexts") {
    CHECK(parse_fixture("context_appendix_c.txt").facts.size() == 6);
    CHECK(parse_fixture("context_appendix_e.txt").facts.size() == 8);
    CHECK(parse_fixture("context_appendix_g.txt").facts.size() == 4);
    CHECK(parse_fixture("context_appendix_h.txt").facts.size() == 6);
    CHECK(parse_fixture("context_table8_tgqa.txt").facts.size() == 8);
    CHECK(parse_fixture("context_table9_tot.txt").facts.size() == 33);
    auto tot = parse_fixture("context_table9_tot.txt");
    CHECK(tot.format == ContextFormat::tot_symbolic);
    // The bracketed TGQA list and the inline form carry the same facts.
    auto list_form = parse_fixture("context_table8_tgqa.txt");
    CHECK(list_form.format == ContextFormat::tgqa_tuple);
}

TEST_CASE("prose contexts fall back to year-scan facts") {
    auto washington = parse_fixture("context_table8_timeqa.txt");
    CHECK(washington.format == ContextFormat::unknown);
    REQUIRE(washington.facts.size() == 1);
    CHECK(washington.facts[0].start == TimePoint::of_year(1732));

    auto multihop = parse_fixture("context_table9_multihoprag.txt");
    CHECK(multihop.format == ContextFormat::unknown);
    CHECK(multihop.facts.size() == 3);  // one per timestamped snippet
    for (const auto& f : multihop.facts) CHECK(f.start->year == 2023);
}

TEST_CASE("round-trip on every residual-free appendix context") {
    for (const char* name :
         {"context_appendix_c.txt", "context_appendix_e.txt", "context_appendix_g.txt",
          "context_appendix_h.txt", "context_table8_tgqa.txt", "context_table8_timeqa.txt",
          "context_table8_tempreason.txt", "context_table9_tot.txt",
          "context_table9_multihoprag.txt"}) {
        CAPTURE(name);
        check_round_trip(parse_fixture(name));
    }
}

TEST_CASE("render of an empty context is empty") {
    ParsedContext empty;
    CHECK(render_context(empty).empty());
}

TEST_CASE("render with residual clauses is an error") {
    ParsedContext parsed = parse_context("(broken clause with no verb)");
    REQUIRE(!parsed.residual.empty());
    CHECK_THROWS_AS(render_context(parsed), HasResidualError);
}

TEST_CASE("conjoined tgqa statements expand into separate facts") {
    auto parsed = parse_context(
        "1. (Amy Johnson was born in Willowdale, Kansas) starts at 1880. 2. (Olivia Price was "
        "born in Harrisonburg) starts at 1890. 3. (Amy Johnson was married to Olivia Price) and "
        "(Olivia Price was married to Amy Johnson) start at 1914. 4. (Amy Johnson died in San "
        "Francisco) starts at 1964.");
    CHECK(parsed.format == ContextFormat::tgqa_tuple);
    CHECK(parsed.residual.empty());
    REQUIRE(parsed.facts.size() == 5);
    CHECK(parsed.facts[2].statement == "Amy Johnson was married to Olivia Price");
    CHECK(parsed.facts[3].statement == "Olivia Price was married to Amy Johnson");
    CHECK(parsed.facts[2].start == TimePoint::of_year(1914));
}

TEST_CASE("interval clauses without parentheses still parse") {
    auto parsed = parse_context(
        "2006 - 2007: Taylor Graham's team is New York Red Bulls.2007 - 2008: Taylor Graham's "
        "team is Seattle Sounders.");
    CHECK(parsed.format == ContextFormat::interval_colon);
    REQUIRE(parsed.facts.size() == 2);
    CHECK(parsed.facts[0].object == "New York Red Bulls");
    CHECK(parsed.facts[1].object == "Seattle Sounders");
}

TEST_CASE("fact-count conservation holds for structured and junk input") {
    for (const char* name : {"context_appendix_c.txt", "context_appendix_e.txt",
                             "context_appendix_g.txt", "context_table9_tot.txt",
                             "context_table9_multihoprag.txt"}) {
        std::string text = tiser::testfs::read_fixture(name);
        auto parsed = parse_context(text);
        auto clauses = split_clauses(text);
        CHECK(parsed.facts.size() + parsed.residual.size() == clauses.size());
    }
    std::string junk = "(half open. 1999 - 1856 : backwards. no year here at all";
    auto parsed = parse_context(junk);
    CHECK(parsed.facts.size() + parsed.residual.size() == split_clauses(junk).size());
}

TEST_CASE("property: parser is total over random bytes") {
    std::mt19937_64 rng(99);
    const std::string alphabet = "() .:-0123456789abcDEF'\"[],<>\xc3\xa9\xf0\x9f";
    for (int trial = 0; trial < 500; ++trial) {
        std::string s;
        size_t len = rng() % 120;
        for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % alphabet.size()]);
        auto parsed = parse_context(s);  // must not throw
        auto clauses = split_clauses(s);
        CHECK(parsed.facts.size() + parsed.residual.size() == clauses.size());
    }
}

TEST_CASE("property: round-trip on generated tgqa contexts") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 100; ++trial) {
        std::string ctx;
        int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            if (!ctx.empty()) ctx += " ";
            ctx += "(Person" + std::to_string(rng() % 5) + " did thing " + std::to_string(i) +
                   ") " + (rng() % 2 ? "starts" : "ends") + " at " +
                   std::to_string(1900 + rng() % 100) + ".";
        }
        auto parsed = parse_context(ctx);
        REQUIRE(parsed.residual.empty());
        check_round_trip(parsed);
    }
}
