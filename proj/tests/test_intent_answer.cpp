#include <gtest/gtest.h>

#include "fairkg/answer.hpp"
#include "fairkg/curation.hpp"
#include "fairkg/error.hpp"
#include "fairkg/intent.hpp"
#include "oracles.hpp"

using namespace fairkg;
using testsupport::kCodaDoi;
using testsupport::kRwDoi;
using testsupport::kScandDoi;
using testsupport::paraphrase_groups;

namespace fairkg {
void PrintTo(const Intent& intent, std::ostream* os) { *os << to_json(intent).dump(); }
} // namespace fairkg

namespace {

class IntentTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        kb_ = testsupport::fixture_kb(true, true).release();
        testsupport::add_fixture_publications(*kb_);
    }
    static void TearDownTestSuite() {
        delete kb_;
        kb_ = nullptr;
    }

    static Intent parse(const std::string& q) {
        return kb_->store().read([&](const PropertyGraph& g, const DataModelSchema&) { return parse_intent(q, g); });
    }

    static bool all_verified(const GroundedAnswer& a) {
        return kb_->store().read([&](const PropertyGraph& g, const DataModelSchema&) {
            return kb_->read_index([&](const VectorIndex& idx) {
                return std::all_of(a.sources.begin(), a.sources.end(),
                                   [&](const Source& s) { return verify_source(s, g, idx); });
            });
        });
    }

    static KnowledgeBase* kb_;
};

KnowledgeBase* IntentTest::kb_ = nullptr;

} // namespace

TEST_F(IntentTest, ParaphrasesYieldIdenticalIntents) {
    for (const auto& group : paraphrase_groups()) {
        ASSERT_GE(group.phrasings.size(), 3u);
        for (const auto& q : group.phrasings) {
            EXPECT_EQ(to_json(parse(q)), to_json(group.expected)) << q;
            EXPECT_EQ(parse(q), group.expected) << q;
        }
    }
}

TEST_F(IntentTest, TopicFacets) {
    EXPECT_EQ(topic_facets("what robot model"), std::vector<std::string>{"usesModel"});
    EXPECT_EQ(topic_facets("which robot carries a LiDAR"), std::vector<std::string>{"hasSensor"});
    EXPECT_EQ(topic_facets("sensors and control modes"), (std::vector<std::string>{"hasSensor", "usesControl"}));
    EXPECT_TRUE(topic_facets("tell me everything").empty());
}

TEST_F(IntentTest, DatasetMatching) {
    kb_->store().read([](const PropertyGraph& g, const DataModelSchema&) {
        EXPECT_EQ(match_datasets("tell me about scand and coda", g), (std::vector<std::string>{kScandDoi, kCodaDoi}));
        EXPECT_EQ(match_datasets("doi:10.18738/T8/V2RWLD please", g), std::vector<std::string>{kRwDoi});
        EXPECT_TRUE(match_datasets("the decoda project", g).empty());
        return 0;
    });
}

TEST_F(IntentTest, VagueComparisonIsRejected) {
    for (const char* q : {"What is the robot model difference?", "Compare the sensors of CODa",
                          "How do the datasets differ?"}) {
        try {
            parse(q);
            ADD_FAILURE() << q;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::AmbiguousComparison) << q;
        }
    }
    EXPECT_THROW(kb_->ask("What is the robot model difference?", AnswerMode::Grounded), Error);
}

TEST_F(IntentTest, FreeFormFallback) {
    const Intent i = parse("How was the audio resampled?");
    EXPECT_EQ(i.kind, IntentKind::FreeForm);
    EXPECT_EQ(i.text, "how was the audio resampled");
}

TEST_F(IntentTest, GroundedAnswersCiteVerifiableSources) {
    const auto questions = testsupport::grounding_questions();
    std::size_t non_empty = 0;
    for (const auto& q : questions) {
        const GroundedAnswer a = kb_->ask(q, AnswerMode::Grounded);
        if (a.empty_result) {
            EXPECT_EQ(a.text, kNoGroundedInformation) << q;
            EXPECT_TRUE(a.sources.empty()) << q;
            continue;
        }
        ++non_empty;
        EXPECT_FALSE(a.text.empty()) << q;
        EXPECT_FALSE(a.sources.empty()) << q;
        EXPECT_TRUE(all_verified(a)) << q;
    }
    EXPECT_EQ(non_empty, questions.size());
    // files come from the record even without a report
    EXPECT_EQ(kb_->ask("Point to the files of SCAND", AnswerMode::Grounded).intent.kind, IntentKind::LocateFiles);
}

TEST(Answer, EmptyIndexGivesNoInformation) {
    PropertyGraph g;
    const auto schema = builtin_schema();
    VectorIndex empty;
    HashingEmbeddingProvider embedder(16);
    AnswerContext ctx{g, schema, empty, &embedder};
    auto a = answer("How was the audio resampled?", ctx, AnswerMode::Grounded);
    EXPECT_TRUE(a.empty_result);
    EXPECT_EQ(a.text, kNoGroundedInformation);
    EXPECT_TRUE(a.sources.empty());
    EXPECT_EQ(to_json(a)["empty_result"], true);
    testsupport::EchoCompleter echo;
    ctx.completer = &echo;
    EXPECT_TRUE(answer("How was the audio resampled?", ctx, AnswerMode::LLM).empty_result);
    EXPECT_TRUE(echo.prompts.empty());
}

TEST_F(IntentTest, StructuredAnswerContent) {
    auto which = kb_->ask("Which datasets use Boston Dynamics Spot?", AnswerMode::Grounded);
    EXPECT_NE(which.text.find(kRwDoi), std::string::npos);
    EXPECT_NE(which.text.find(kScandDoi), std::string::npos);
    EXPECT_EQ(which.text.find(kCodaDoi), std::string::npos);
    EXPECT_EQ(which.sources.size(), 2u);

    auto kind = kb_->ask("What kind of robot is used in Vid2Real Real World?", AnswerMode::Grounded);
    EXPECT_NE(kind.text.find("Boston Dynamics Spot"), std::string::npos);
    ASSERT_EQ(kind.sources.size(), 1u);
    EXPECT_EQ(std::get<FactSource>(kind.sources[0]).predicate, "usesModel");

    auto files = kb_->ask("Point to all video files for session 1 in Vid2Real Real World.", AnswerMode::Grounded);
    EXPECT_NE(files.text.find("session_01/s01_p01_video.mp4"), std::string::npos);
    EXPECT_NE(files.text.find("session_01/s01_p02_video.mp4"), std::string::npos);
    EXPECT_EQ(files.text.find("s02_"), std::string::npos);
    EXPECT_EQ(files.sources.size(), 2u);

    auto cmp = kb_->ask("What is the robot model difference between CODa and SCAND?", AnswerMode::Grounded);
    EXPECT_NE(cmp.text.find("usesModel [different]"), std::string::npos);
    EXPECT_NE(cmp.text.find("Clearpath Husky"), std::string::npos);

    auto free = kb_->ask("How was the audio resampled?", AnswerMode::Grounded);
    ASSERT_FALSE(free.empty_result);
    EXPECT_TRUE(std::holds_alternative<ChunkSource>(free.sources.front()));
    EXPECT_LE(free.sources.size(), 5u);
}

TEST_F(IntentTest, LlmModeUsesBoundedContext) {
    testsupport::EchoCompleter echo;
    auto a = kb_->ask("Tell me about Vid2Real Real World.", AnswerMode::LLM, &echo);
    EXPECT_EQ(a.text, "mock completion");
    ASSERT_EQ(echo.prompts.size(), 1u);
    const std::string& prompt = echo.prompts[0];
    EXPECT_NE(prompt.find("Question: Tell me about Vid2Real Real World."), std::string::npos);

    std::size_t facts = 0, chunks = 0;
    for (const auto& s : a.sources) (std::holds_alternative<FactSource>(s) ? facts : chunks)++;
    EXPECT_GT(facts, 0u);
    EXPECT_LE(facts, kMaxContextFacts);
    EXPECT_GT(chunks, 0u);
    EXPECT_LE(chunks, kMaxContextChunks);
    EXPECT_TRUE(all_verified(a));
    // every cited fact appears in the prompt
    kb_->store().read([&](const PropertyGraph& g, const DataModelSchema&) {
        for (const auto& s : a.sources)
            if (const auto* f = std::get_if<FactSource>(&s))
                EXPECT_NE(prompt.find(serialize_fact(g, *f)), std::string::npos);
        return 0;
    });

    echo.fail = true;
    try {
        kb_->ask("Tell me about CODa", AnswerMode::LLM, &echo);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ProviderError);
    }
    EXPECT_THROW(kb_->ask("Tell me about CODa", AnswerMode::LLM, nullptr), Error);
    EXPECT_EQ(answer_mode_from_string("LLM"), AnswerMode::LLM);
    EXPECT_THROW(answer_mode_from_string("poetry"), Error);
}
