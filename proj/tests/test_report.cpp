#include <gtest/gtest.h>

#include <random>

#include "fairkg/error.hpp"
#include "fairkg/harvester.hpp"
#include "fairkg/report.hpp"
#include "support.hpp"

using namespace fairkg;
using testsupport::kRwDoi;
using testsupport::read_fixture;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorCode::InvalidArgument;
}

std::size_t nonblank_lines(const std::string& s) {
    std::size_t n = 0;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);)
        if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
    return n;
}

} // namespace

TEST(ParseReport, FixtureSections) {
    const std::string text = read_fixture("vid2real_rw_report.md");
    const DataReport r = parse_report(text);
    EXPECT_EQ(r.source_doi, kRwDoi);
    const ReportSection* robot = r.section("RobotDescription");
    ASSERT_NE(robot, nullptr);
    EXPECT_FALSE(robot->provisional);
    EXPECT_EQ(robot->fields[1], (KvField{"Robot Model", "Boston Dynamics Spot"}));
    const ReportSection* safety = r.section("Safety Protocol");
    ASSERT_NE(safety, nullptr);
    EXPECT_TRUE(safety->provisional);
    EXPECT_EQ(safety->fields.size(), 2u);
    ASSERT_NE(r.section("Preamble"), nullptr); // the "# title" line
    EXPECT_EQ(r.section("Processing")->free_text.size(), 1u);

    const auto acc = account_lines(r);
    EXPECT_EQ(acc.total(), nonblank_lines(text));
    EXPECT_EQ(acc.provisional_kv, 2u);
    EXPECT_EQ(acc.headings, 9u);
}

TEST(ParseReport, EdgeCases) {
    EXPECT_EQ(code_of([] { parse_report(" \n\t\n"); }), ErrorCode::EmptyDocument);
    const auto r = parse_report("intro line\n## Overview\nA: 1\n## Overview\nB: 2\nsee http://x.org\n", "doi:10.1/X");
    EXPECT_EQ(r.source_doi, "doi:10.1/X");
    ASSERT_EQ(r.sections.size(), 2u);
    EXPECT_EQ(r.sections[0].name, "Preamble");
    EXPECT_EQ(r.section("Overview")->fields.size(), 2u);
    EXPECT_EQ(r.section("Overview")->free_text.size(), 1u);
    EXPECT_TRUE(is_known_section("QualityStatement"));
    EXPECT_FALSE(is_known_section("Safety Protocol"));
}

TEST(NamingConvention, CompileErrors) {
    for (const char* bad : {"s{session", "s}x", "{1abc}.txt", "{a}{b}.txt", "{a}_{a}.txt", "dir/{a}.txt", "{a}", ""}) {
        EXPECT_EQ(code_of([&] { compile_pattern(1, bad); }), ErrorCode::MalformedPattern) << bad;
    }
    const auto p = compile_pattern(3, "s{session}_p{participant}.{ext}");
    EXPECT_EQ(p.tokens(), (std::vector<std::string>{"session", "participant", "ext"}));
    EXPECT_TRUE(compile_pattern(9, "*").wildcard);
}

TEST(NamingConvention, ParseSection) {
    EXPECT_EQ(code_of([] { parse_naming_convention("pattern 1: a_{x}.txt\npattern 1: b_{x}.txt\n"); }),
              ErrorCode::DuplicatePriority);
    EXPECT_EQ(code_of([] { parse_naming_convention("nothing here\n"); }), ErrorCode::MalformedPattern);
    EXPECT_EQ(code_of([] { parse_naming_convention("pattern one: a_{x}.txt\n"); }), ErrorCode::MalformedPattern);
    EXPECT_EQ(code_of([] { parse_naming_convention("pattern 1: a_{x}.txt\ntokens: x = {1}\n"); }),
              ErrorCode::MalformedPattern);

    const auto conv = parse_naming_convention(
        "pattern 2: {a}.{ext}\npattern 1: run{n}_{kind}.{ext}\ntokens: kind in {rgb, depth}; ext ∈ {png}; n ∈ *\n");
    ASSERT_EQ(conv.patterns.size(), 2u);
    EXPECT_EQ(conv.patterns[0].priority, 1);
    EXPECT_EQ(conv.patterns[0].domains.at("kind"), (std::set<std::string>{"rgb", "depth"}));
    EXPECT_FALSE(conv.patterns[0].domains.contains("n"));
}

TEST(NamingConvention, Classification) {
    const auto conv = report_convention(parse_report(read_fixture("vid2real_rw_report.md")));
    ASSERT_EQ(conv.patterns.size(), 2u);
    auto c = classify_file(conv, "session_01/s01_p02_gaze.csv");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->priority, 1);
    EXPECT_EQ(c->bindings, (std::map<std::string, std::string>{
                               {"session", "01"}, {"participant", "02"}, {"stream", "gaze"}, {"ext", "csv"}}));
    c = classify_file(conv, "surveys/01_questionnaire.csv");
    ASSERT_TRUE(c);
    EXPECT_EQ(c->priority, 2);
    EXPECT_EQ(c->bindings.at("session"), "01");
    EXPECT_FALSE(classify_file(conv, "README.txt"));
    EXPECT_FALSE(classify_file(conv, "s01_p01_depth.mp4")); // stream outside domain
    EXPECT_FALSE(classify_file(conv, "dir/"));

    const auto wild = parse_naming_convention("pattern 1: x_{a}.bin\npattern 2: *\n");
    EXPECT_EQ(classify_file(wild, "x_7.bin")->priority, 1);
    auto any = classify_file(wild, "calib.yaml");
    ASSERT_TRUE(any);
    EXPECT_EQ(any->priority, 2);
    EXPECT_TRUE(any->bindings.empty());
}

TEST(NamingConvention, RandomNamesRoundTrip) {
    const auto conv = parse_naming_convention(
        "pattern 1: s{session}_p{participant}_{stream}.{ext}\ntokens: stream ∈ {video, audio, gaze}; ext ∈ {mp4, wav}\n");
    std::mt19937 rng(7);
    const std::vector<std::string> streams{"video", "audio", "gaze"}, exts{"mp4", "wav"};
    auto digits = [&](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s.push_back(static_cast<char>('0' + rng() % 10));
        return s;
    };
    for (int i = 0; i < 500; ++i) {
        std::map<std::string, std::string> expect{{"session", digits(1 + rng() % 3)},
                                                  {"participant", digits(1 + rng() % 3)},
                                                  {"stream", streams[rng() % 3]},
                                                  {"ext", exts[rng() % 2]}};
        std::string name = "s" + expect["session"] + "_p" + expect["participant"] + "_" + expect["stream"] + "." +
                           expect["ext"];
        auto c = classify_file(conv, "dir/" + name);
        ASSERT_TRUE(c) << name;
        EXPECT_EQ(c->bindings, expect) << name;
    }
}

TEST(ProvisionalSections, LabelsAndSchema) {
    EXPECT_EQ(provisional_label("Safety Protocol"), "SafetyProtocol");
    EXPECT_EQ(provisional_label("stress signals"), "StressSignals");
    EXPECT_EQ(provisional_label("GazeCoding"), "GazeCoding");
    EXPECT_EQ(provisional_edge_type("Safety Protocol"), "hasSafetyProtocol");

    const auto report = parse_report(read_fixture("vid2real_rw_report.md"));
    const auto base = builtin_schema();
    const auto ext = extend_with_provisional(base, report);
    ASSERT_NE(ext.node_label("SafetyProtocol"), nullptr);
    EXPECT_EQ(ext.node_label("SafetyProtocol")->status, LabelStatus::Provisional);
    ASSERT_NE(ext.edge_type("hasSafetyProtocol"), nullptr);
    EXPECT_GT(ext.version(), base.version());
    EXPECT_EQ(base.node_label("SafetyProtocol"), nullptr);
    // idempotent
    EXPECT_EQ(extend_with_provisional(ext, report).version(), ext.version());
}

TEST(ReportToGraph, SessionsFilesAndEntities) {
    const auto record = testsupport::fixture_record("vid2real_rw.json");
    const auto report = parse_report(read_fixture("vid2real_rw_report.md"));
    const auto schema = extend_with_provisional(builtin_schema(), report);
    PropertyGraph g;
    upsert_dataset(g, schema, record, extract_entities(record, nullptr, builtin_rules()));
    apply_proposals(g, schema, report_to_graph(report, report_convention(report), record.files, builtin_rules()));
    EXPECT_TRUE(validate(schema, g).ok());

    const Node* s1 = g.find("ExperimentSession", kRwDoi + "/session 01");
    ASSERT_NE(s1, nullptr);
    std::vector<std::string> files;
    for (const Edge* e : g.out_edges(s1->id))
        if (e->edge_type == "includesFile") files.push_back(string_property(g.node(e->target)->properties, "path"));
    // four recordings plus the questionnaire, which binds session "01" too
    EXPECT_EQ(files.size(), 5u);
    EXPECT_EQ(g.nodes_with_label("ExperimentSession").size(), 2u);

    EXPECT_NE(g.find("Sensor", "360 camera"), nullptr);
    EXPECT_NE(g.find("Sensor", "stereo cameras"), nullptr);
    EXPECT_EQ(g.nodes_with_label("SafetyProtocol").size(), 1u);
    EXPECT_EQ(g.nodes_with_label("EthicsApproval").size(), 1u);
    EXPECT_EQ(g.nodes_with_label("QualityStatement").size(), 1u);
    const Node* ds = g.find_dataset(kRwDoi);
    EXPECT_EQ(ds->properties.at("report_ingested"), Scalar{true});

    DataReport orphan = report;
    orphan.source_doi.clear();
    EXPECT_EQ(code_of([&] { report_to_graph(orphan, {}, record.files, builtin_rules()); }), ErrorCode::InvalidArgument);
}
