#include <gtest/gtest.h>

#include <string>

#include "chatea/backend.hpp"
#include "chatea/cards.hpp"
#include "chatea/descriptions.hpp"
#include "chatea/parse.hpp"
#include "chatea/prompts.hpp"
#include "chatea/rng.hpp"
#include "test_support.hpp"

using namespace chatea;
using chatea::testing::make_kg;
using chatea::testing::read_file;

namespace {

std::string fixture(const std::string& name) {
    std::string text = read_file(std::string(CHATEA_FIXTURE_DIR) + "/" + name);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
}

void expect_matches_golden(const std::string& rendered, const std::string& fixture_name) {
    const std::string want = fixture(fixture_name);
    if (rendered != want) {
        std::size_t at = 0;
        while (at < rendered.size() && at < want.size() && rendered[at] == want[at]) ++at;
        FAIL() << fixture_name << " diverges at byte " << at << "\n  rendered: ..."
               << rendered.substr(at > 30 ? at - 30 : 0, 80) << "\n  golden:   ..."
               << want.substr(at > 30 ? at - 30 : 0, 80);
    }
}

// The case-study cards, tuple order as printed in the source prompt.
EntityCard main_case_card() {
    EntityCard c;
    c.name = "British Monarch";
    c.id = "7497";
    c.description =
        "The British Monarch is the head of the monarchy of the United Kingdom, currently held by "
        "Queen Elizabeth II, who has reigned since 1952 and has made various visits to countries "
        "such as the United States, South Korea, and Lithuania, among others, while also hosting "
        "visits from foreign leaders and dignitaries.";
    c.tuples = {
        {"Ireland", "Host a visit", "British Monarch", "2011-03", "2011-03"},
        {"British Monarch", "Host a visit", "Elizabeth II", "2011-05", "2011-05"},
        {"British Monarch", "Make a visit", "United States", "2007-05", "2007-05"},
        {"British Monarch", "Make a visit", "South Korea", "1999-04", "1999-04"},
        {"Elizabeth II", "Make a visit", "British Monarch", "2011-05", "2011-05"},
    };
    return c;
}

EntityCard candidate_case_card() {
    EntityCard c;
    c.name = "Monarchy_of_the_United_Kingdom";
    c.id = "23393";
    c.description =
        "The Monarchy of the United Kingdom is the constitutional monarchy that serves as the head "
        "of state of the United Kingdom, with the monarch appointed by the Governor of Hong Kong "
        "and holding various roles such as the Lord Chancellor, Master of the Rolls, and Lord "
        "President of the Council.";
    c.tuples = {
        {"Monarchy_of_the_United_Kingdom", "country", "United_Kingdom", "~", "~"},
        {"Governor_of_Hong_Kong", "appointed by", "Monarchy_of_the_United_Kingdom", "~", "~"},
        {"Monarchy_of_the_United_Kingdom", "instance of", "Constitutional_monarchy", "~", "~"},
        {"Chancellor_of_the_Duchy_of_Lancaster", "appointed by", "Monarchy_of_the_United_Kingdom",
         "~", "~"},
        {"Deputy_Prime_Minister_of_the_United_Kingdom", "appointed by",
         "Monarchy_of_the_United_Kingdom", "~", "~"},
    };
    return c;
}

std::size_t count_occurrences(const std::string& text, const std::string& token) {
    std::size_t n = 0, pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        ++n;
        ++pos;
    }
    return n;
}

}  // namespace

TEST(SystemPromptTest, MatchesGoldenFixture) {
    expect_matches_golden(render_system_prompt(), "system_prompt.golden.txt");
}

TEST(SystemPromptTest, ContainsClassDefinitionLines) {
    const auto prompt = render_system_prompt();
    EXPECT_NE(prompt.find("description = LLM(self.entity_name, self.tuples)"), std::string::npos);
    EXPECT_NE(prompt.find("def get_neighbors(self):"), std::string::npos);
    EXPECT_NE(prompt.find("neighbors.add(tail_entity)"), std::string::npos);
    EXPECT_NE(prompt.find("time_info.append((start_time, end_time))"), std::string::npos);
    EXPECT_TRUE(prompt.ends_with("you MUST strictly output like [Output Format]."));
}

TEST(SystemPromptTest, DeterministicAndCaseRequired) {
    EXPECT_EQ(render_system_prompt(), render_system_prompt());
    EXPECT_THROW(render_system_prompt(""), std::invalid_argument);
    const auto custom = render_system_prompt("my worked case");
    EXPECT_NE(custom.find("my worked case"), std::string::npos);
    EXPECT_EQ(custom.find("{{ reasoning case }}"), std::string::npos);
}

TEST(ReasoningPromptTest, MatchesGoldenFixture) {
    expect_matches_golden(render_reasoning_prompt(main_case_card(), candidate_case_card()),
                          "reasoning_prompt.golden.txt");
}

TEST(ReasoningPromptTest, EmptyDescriptionRendersEmptyLiteral) {
    EntityCard a = main_case_card();
    a.description.clear();
    a.tuples.clear();
    const auto prompt = render_reasoning_prompt(a, a);
    EXPECT_NE(prompt.find("Entity('British Monarch', '7497', '', [])"), std::string::npos);
}

TEST(ReasoningPromptTest, StepBlockMentionsEachLabelOnce) {
    const auto prompt = render_reasoning_prompt(main_case_card(), candidate_case_card());
    const auto steps_begin = prompt.find("Step 1,");
    const auto steps_end = prompt.find("NOTICE, the information");
    ASSERT_NE(steps_begin, std::string::npos);
    ASSERT_NE(steps_end, std::string::npos);
    const std::string steps = prompt.substr(steps_begin, steps_end - steps_begin);
    for (const char* label : {"[NAME SIMILARITY]", "[PROBABILITY OF DESCRIPTION POINTING SAME ENTITY]",
                              "[STRUCTURE SIMILARITY]", "[TIME SIMILARITY]"})
        EXPECT_EQ(count_occurrences(steps, label), 1u) << label;
    // steps reference the four facets in order
    EXPECT_LT(prompt.find("[NAME SIMILARITY]", steps_begin),
              prompt.find("[PROBABILITY OF DESCRIPTION POINTING SAME ENTITY]", steps_begin));
    EXPECT_LT(prompt.find("[PROBABILITY OF DESCRIPTION POINTING SAME ENTITY]", steps_begin),
              prompt.find("[STRUCTURE SIMILARITY]", steps_begin));
    EXPECT_LT(prompt.find("[STRUCTURE SIMILARITY]", steps_begin),
              prompt.find("[TIME SIMILARITY]", steps_begin));
}

TEST(ReasoningPromptTest, InjectiveOnCards) {
    const auto base = render_reasoning_prompt(main_case_card(), candidate_case_card());
    EntityCard other = candidate_case_card();
    other.id = "23394";
    EXPECT_NE(render_reasoning_prompt(main_case_card(), other), base);
    other = candidate_case_card();
    other.tuples[0].start = "2001-01";
    EXPECT_NE(render_reasoning_prompt(main_case_card(), other), base);
}

TEST(RethinkingPromptTest, MatchesGoldenFixture) {
    expect_matches_golden(
        render_rethinking_prompt("British Monarch", {{"Monarchy_of_the_United_Kingdom", 5.0}}),
        "rethinking_prompt.golden.txt");
}

TEST(RethinkingPromptTest, ListsPairsInGivenOrder) {
    const auto prompt = render_rethinking_prompt(
        "X", {{"best", 4.5}, {"mid", 3.25}, {"worst", 1.0}});
    EXPECT_NE(prompt.find("[('best', 4.50), ('mid', 3.25), ('worst', 1.00)]"), std::string::npos);
    EXPECT_NE(prompt.find("Just directly answer [YES] or [NO], don't give other text."),
              std::string::npos);
    EXPECT_THROW(render_rethinking_prompt("X", {}), std::invalid_argument);
}

TEST(ParseScoresTest, CaseStudyOutput) {
    const auto scores = parse_scores(fixture("reply_case_output.txt"));
    ASSERT_TRUE(scores.has_value());
    EXPECT_EQ(scores.value(), (SimilarityScores{5, 5, 5, 5}));
}

TEST(ParseScoresTest, MisreadOutput) {
    const auto scores = parse_scores(fixture("reply_misread.txt"));
    ASSERT_TRUE(scores.has_value());
    EXPECT_EQ(scores.value(), (SimilarityScores{4, 3, 4, 2}));
}

TEST(ParseScoresTest, TemplateEchoFails) {
    const auto scores = parse_scores(fixture("reply_format_echo.txt"));
    EXPECT_FALSE(scores.has_value());
    EXPECT_NE(scores.error().find("NAME SIMILARITY"), std::string::npos);
    // the raw reply travels with the error
    EXPECT_NE(scores.error().find("Myanmar"), std::string::npos);
}

TEST(ParseScoresTest, ToleratesCaseAndWhitespace) {
    const auto scores = parse_scores(
        "[name similarity]  =  3  out  of  5, [PROBABILITY OF DESCRIPTION POINTING SAME ENTITY] = "
        "2 out of 5\n[Structure Similarity] = 4 out of 5 and [TIME SIMILARITY] = 1 out of 5");
    ASSERT_TRUE(scores.has_value());
    EXPECT_EQ(scores.value(), (SimilarityScores{3, 2, 4, 1}));
}

TEST(ParseScoresTest, LastOccurrenceWins) {
    const auto scores = parse_scores(canonical_score_line(1, 1, 1, 1) + "\nCorrection: " +
                                     canonical_score_line(2, 3, 4, 5));
    ASSERT_TRUE(scores.has_value());
    EXPECT_EQ(scores.value(), (SimilarityScores{2, 3, 4, 5}));
}

TEST(ParseScoresTest, OutOfRangeRejected) {
    auto line = canonical_score_line(5, 5, 5, 5);
    line.replace(line.find("= 5"), 3, "= 7");
    EXPECT_FALSE(parse_scores(line).has_value());
    EXPECT_FALSE(parse_scores("").has_value());
}

TEST(ParseScoresTest, RoundtripWithCanonicalLine) {
    for (int a = 1; a <= 5; ++a)
        for (int b : {1, 3, 5})
            for (int c : {2, 4})
                for (int d : {1, 5}) {
                    const auto parsed = parse_scores(canonical_score_line(a, b, c, d));
                    ASSERT_TRUE(parsed.has_value());
                    EXPECT_EQ(parsed.value(), (SimilarityScores{a, b, c, d}));
                }
}

TEST(ParseScoresTest, FuzzNeverThrows) {
    Rng rng(2718);
    for (int iter = 0; iter < 300; ++iter) {
        std::string junk;
        const std::size_t len = rng.uniform(200);
        for (std::size_t i = 0; i < len; ++i)
            junk.push_back(static_cast<char>(32 + rng.uniform(95)));
        EXPECT_NO_THROW({ auto r = parse_scores(junk); (void)r; });
    }
}

TEST(ScoresTest, AggregateWeights) {
    const SimilarityScores s{5, 3, 1, 3};
    EXPECT_DOUBLE_EQ(s.aggregate(), 3.0);
    EXPECT_DOUBLE_EQ(s.aggregate({2.0, 0.0, 0.0, 0.0}), 5.0);
    EXPECT_DOUBLE_EQ(s.aggregate({1.0, 1.0, 0.0, 0.0}), 4.0);
}

TEST(ParseVerdictTest, Tokens) {
    EXPECT_TRUE(parse_verdict("[YES]").value().satisfied);
    EXPECT_FALSE(parse_verdict("I think [NO] because the scores are low").value().satisfied);
    EXPECT_FALSE(parse_verdict("maybe").has_value());
    // later token wins
    EXPECT_FALSE(parse_verdict("[YES] ... wait, [NO]").value().satisfied);
    EXPECT_TRUE(parse_verdict("[NO]?? Actually [YES]").value().satisfied);
}

TEST(ParseVerdictTest, LenientAndStrictModes) {
    EXPECT_TRUE(parse_verdict("YES", true).value().satisfied);
    EXPECT_FALSE(parse_verdict("NO.", true).value().satisfied);
    EXPECT_FALSE(parse_verdict("YES", false).has_value());
    // word boundaries: NOTICE and know must not read as NO
    EXPECT_FALSE(parse_verdict("NOTICE", true).has_value());
    EXPECT_FALSE(parse_verdict("I know nothing", true).has_value());
}

TEST(MakeCardTest, CapAndMasks) {
    const auto kg = make_kg({"A", "B", "C"}, {"likes"},
                            {{0, 0, 1, Timestamp::of(2001, 2), Timestamp::of(2002, 3)},
                             {0, 0, 2, {}, {}}});
    const auto card = make_card(kg, 0, "a description", {.tuple_cap = 1});
    EXPECT_EQ(card.tuples.size(), 1u);
    EXPECT_EQ(card.name, "A");
    EXPECT_EQ(card.id, "0");
    EXPECT_EQ(card.description, "a description");

    const auto no_desc = make_card(kg, 0, "a description", {.include_description = false});
    EXPECT_TRUE(no_desc.description.empty());

    const auto masked_time = make_card(kg, 0, "", {.mask_time = true});
    for (const auto& t : masked_time.tuples) {
        EXPECT_EQ(t.start, "~");
        EXPECT_EQ(t.end, "~");
    }

    const auto masked_structure = make_card(kg, 0, "", {.mask_structure = true});
    EXPECT_TRUE(masked_structure.tuples.empty());

    const auto masked_names = make_card(kg, 0, "", {.mask_names = true});
    EXPECT_EQ(masked_names.name, "entity_0");
    EXPECT_EQ(masked_names.tuples[0].head, "entity_0");
}

TEST(MakeCardTest, PlainTextRendering) {
    const auto kg = make_kg({"A", "B"}, {"likes"}, {{0, 0, 1, {}, {}}});
    const auto card = make_card(kg, 0, "d", {});
    const auto plain = render_card_plain(card);
    EXPECT_NE(plain.find("entity name 'A' (id '0')"), std::string::npos);
    EXPECT_EQ(plain.find("Entity("), std::string::npos);
    const auto prompt = render_reasoning_prompt(card, card, /*plain=*/true);
    EXPECT_EQ(prompt.find("Entity("), std::string::npos);
}

TEST(CardRenderTest, QuoteEscaping) {
    EntityCard c;
    c.name = "O'Brien";
    c.id = "1";
    c.description = "likes 'quotes'";
    const auto rendered = render_card(c);
    EXPECT_NE(rendered.find("Entity('O\\'Brien', '1', 'likes \\'quotes\\'', [])"),
              std::string::npos);
}

TEST(DescriptionPromptTest, NamedTemplateFields) {
    const auto card = main_case_card();
    const auto prompt = render_description_prompt(card);
    EXPECT_NE(prompt.find("'British Monarch'"), std::string::npos);
    EXPECT_NE(prompt.find("(Ireland, Host a visit, British Monarch, 2011-03, 2011-03)"),
              std::string::npos);
    EXPECT_TRUE(prompt.ends_with("Answer with the description paragraph only."));
}

TEST(TemplateHashTest, StableWithinBuild) {
    EXPECT_EQ(template_hash(), template_hash());
    EXPECT_NE(template_hash(), 0u);
}

namespace {

// Counts calls and replies with a fixed description.
class CountingBackend : public ChatBackend {
public:
    explicit CountingBackend(std::string reply) : reply_(std::move(reply)) {}
    ChatReply send(const ChatRequest&) override {
        ++calls;
        ChatReply r;
        r.content = reply_;
        r.prompt_tokens = 10;
        r.completion_tokens = 5;
        return r;
    }
    std::string id() const override { return "counting"; }
    int calls = 0;

private:
    std::string reply_;
};

}  // namespace

TEST(DescriptionCacheTest, HitMeansZeroBackendCalls) {
    // two entities sharing one surface name: ids keep their entries apart
    const auto kg = make_kg({"A", "A"}, {"r"}, {{0, 0, 1, {}, {}}});
    auto backend = std::make_shared<CountingBackend>("A short description.\n\nExtra paragraph.");
    ChatClient client(backend);
    DescriptionCache cache;

    const auto first = generate_description(client, kg, 0, cache, "m1", "sys");
    EXPECT_EQ(first, "A short description.");  // single trimmed paragraph
    EXPECT_EQ(backend->calls, 1);
    const auto second = generate_description(client, kg, 0, cache, "m1", "sys");
    EXPECT_EQ(second, first);
    EXPECT_EQ(backend->calls, 1);  // cache hit

    // distinct model id is a distinct cache entry
    generate_description(client, kg, 0, cache, "m2", "sys");
    EXPECT_EQ(backend->calls, 2);
    // distinct entity id with the same surface name is a distinct entry
    generate_description(client, kg, 1, cache, "m1", "sys");
    EXPECT_EQ(backend->calls, 3);
}

namespace {

class AlwaysFailBackend : public ChatBackend {
public:
    ChatReply send(const ChatRequest&) override { throw ApiError(400, "bad request"); }
    std::string id() const override { return "failing"; }
};

}  // namespace

TEST(DescriptionCacheTest, BackendFailureDegradesToEmpty) {
    const auto kg = make_kg({"A"}, {"r"}, {});
    ChatClient client(std::make_shared<AlwaysFailBackend>());
    DescriptionCache cache;
    EXPECT_EQ(generate_description(client, kg, 0, cache, "m", "sys"), "");
    // failures are not cached, so recovery on a later call stays possible
    EXPECT_EQ(cache.size(), 0u);
}

TEST(DescriptionCacheTest, PersistRoundtrip) {
    chatea::testing::TempDir dir("desccache");
    DescriptionCache cache;
    cache.put("kg1", 7, "m", "line one\nline two, with commas");
    cache.put("kg2", 9, "m", "plain");
    cache.save(dir.file("cache.txt"));

    DescriptionCache loaded;
    loaded.load(dir.file("cache.txt"));
    EXPECT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded.get("kg1", 7, "m").value(), "line one\nline two, with commas");
    EXPECT_EQ(loaded.get("kg2", 9, "m").value(), "plain");
    EXPECT_FALSE(loaded.get("kg1", 8, "m").has_value());
}
