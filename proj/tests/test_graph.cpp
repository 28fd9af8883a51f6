#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fairkg/error.hpp"
#include "fairkg/graph.hpp"
#include "fairkg/schema.hpp"
#include "fairkg/text.hpp"
#include "oracles.hpp"

using namespace fairkg;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& stem) {
    static int counter = 0;
    return fs::temp_directory_path() / ("fairkg_" + stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(++counter));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(PropertyGraph, UpsertIsIdentityBased) {
    PropertyGraph g;
    auto a = g.upsert_node("RobotModel", {{"name", "Boston Dynamics Spot"}});
    auto b = g.upsert_node("RobotModel", {{"name", "  boston   dynamics SPOT"}, {"vendor", "BD"}});
    EXPECT_TRUE(a.created);
    EXPECT_FALSE(b.created);
    EXPECT_EQ(a.id, b.id);
    EXPECT_EQ(g.node(a.id)->name(), "Boston Dynamics Spot");
    EXPECT_EQ(string_property(g.node(a.id)->properties, "vendor"), "BD");

    auto f1 = g.upsert_node("DataFile", {{"path", "a.mp4"}, {"name", "a.mp4"}, {"dataset", "doi:10.1/X"}});
    auto f2 = g.upsert_node("DataFile", {{"path", "a.mp4"}, {"name", "a.mp4"}, {"dataset", "doi:10.1/Y"}});
    EXPECT_NE(f1.id, f2.id);
    EXPECT_TRUE(g.audit().empty());
}

TEST(PropertyGraph, EdgesRequireEndpointsAndDeduplicate) {
    PropertyGraph g;
    auto ds = g.upsert_node("Dataset", {{"doi", "doi:10.1/A"}, {"title", "A"}});
    auto rm = g.upsert_node("RobotModel", {{"name", "Spot"}});
    EXPECT_TRUE(g.add_edge("usesModel", ds.id, rm.id));
    EXPECT_FALSE(g.add_edge("usesModel", ds.id, rm.id));
    EXPECT_EQ(g.edge_count(), 1u);
    EXPECT_THROW(g.add_edge("usesModel", ds.id, "RobotModel:nothing"), Error);
    EXPECT_TRUE(g.remove_node(rm.id));
    EXPECT_EQ(g.edge_count(), 0u);
    EXPECT_TRUE(g.audit().empty());
}

TEST(PropertyGraph, SnapshotErrors) {
    PropertyGraph g;
    g.upsert_node("Dataset", {{"doi", "doi:10.1/A"}, {"title", "A"}, {"size", std::int64_t{3}}, {"ok", true}, {"w", 0.25}});
    const auto p = temp_file("snap");
    save(g, p);
    EXPECT_EQ(load(p), g);

    try {
        load(temp_file("absent"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }

    std::string bytes = slurp(p);
    {
        std::string flipped = bytes;
        flipped[bytes.find("title") + 1] = 'X';
        std::ofstream(p, std::ios::binary | std::ios::trunc) << flipped;
        try {
            load(p);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::CorruptStore);
        }
    }
    {
        std::ofstream(p, std::ios::binary | std::ios::trunc) << bytes.substr(0, bytes.size() / 2);
        try {
            load(p);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::CorruptStore);
        }
    }
    fs::remove(p);
}

TEST(Queries, CompareAndProfile) {
    PropertyGraph g;
    const auto s = builtin_schema();
    auto a = g.upsert_node("Dataset", {{"doi", "doi:10.1/A"}, {"title", "A"}});
    auto b = g.upsert_node("Dataset", {{"doi", "doi:10.1/B"}, {"title", "B"}});
    auto tele = g.upsert_node("ControlMode", {{"name", "joystick teleoperation"}});
    auto auton = g.upsert_node("ControlMode", {{"name", "autonomous navigation"}});
    auto lidar = g.upsert_node("Sensor", {{"name", "3D LiDAR"}});
    g.add_edge("usesControl", a.id, tele.id);
    g.add_edge("usesControl", b.id, auton.id);
    g.add_edge("hasSensor", a.id, lidar.id);
    g.add_edge("hasSensor", b.id, lidar.id);

    auto t = compare(g, s, {"doi:10.1/A", "doi:10.1/B"}, std::vector<std::string>{"usesControl", "hasSensor"});
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].facet, "usesControl");
    EXPECT_FALSE(t.rows[0].same);
    EXPECT_EQ(t.rows[0].cells[0], std::vector<std::string>{"joystick teleoperation"});
    EXPECT_TRUE(t.rows[1].same);

    try {
        compare(g, s, {"doi:10.1/A"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
    try {
        compare(g, s, {"doi:10.1/A", "doi:10.1/Z", "doi:10.1/Q"});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DatasetNotFound);
        EXPECT_EQ(e.details(), (std::vector<std::string>{"doi:10.1/Z", "doi:10.1/Q"}));
    }
    try {
        find_datasets_by(g, s, "Starship", "x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownLabel);
    }
    EXPECT_TRUE(find_datasets_by(g, s, "RobotModel", "nothing").empty());

    auto profile = dataset_profile(g, "doi:10.1/A");
    ASSERT_EQ(profile.groups.size(), 2u);
    EXPECT_EQ(profile.groups[0].edge_type, "hasSensor");
}

TEST(Queries, FilterValueMatching) {
    EXPECT_TRUE(filter_value_matches("1", "01"));
    EXPECT_TRUE(filter_value_matches("001", "1"));
    EXPECT_FALSE(filter_value_matches("1", "10"));
    EXPECT_TRUE(filter_value_matches("video", "video"));
    EXPECT_FALSE(filter_value_matches("video", "Video"));
}

// 50 randomized graphs of up to 500 nodes: queries against brute-force scans,
// index audit, and byte-identical persistence round trips.
TEST(GraphOracle, RandomizedGraphsMatchBruteForce) {
    const auto start = std::chrono::steady_clock::now();
    const auto schema = builtin_schema();
    std::mt19937_64 rng(20240502);
    for (int round = 0; round < 50; ++round) {
        const std::size_t size = 20 + rng() % 481;
        PropertyGraph g = random_graph(rng, size);
        ASSERT_LE(g.node_count(), 500u);
        ASSERT_TRUE(g.audit().empty()) << "round " << round;
        ASSERT_TRUE(validate(schema, g).ok()) << "round " << round;

        for (const auto& k : kEntities) {
            for (const char* name : kNames) {
                std::vector<std::string> got;
                for (const Node& n : find_datasets_by(g, schema, k.label, name))
                    got.push_back(string_property(n.properties, "doi"));
                ASSERT_EQ(got, brute_find(g, k.label, name)) << k.label << "/" << name << " round " << round;
            }
        }

        for (const Node* ds : g.nodes_with_label("Dataset")) {
            const std::string doi = string_property(ds->properties, "doi");
            std::vector<FileFilters> filter_sets{{}, {{"session", "1"}}, {{"session", "01"}, {"stream", "video"}},
                                                 {{"stream", "gaze"}}, {{"participant", "7"}}, {{"missing", "x"}}};
            for (const auto& f : filter_sets) {
                std::vector<std::string> got;
                for (const Node& n : locate_files(g, doi, f)) got.push_back(string_property(n.properties, "path"));
                ASSERT_EQ(got, brute_locate(g, ds->id, f)) << doi << " round " << round;
            }
        }

        const auto p = temp_file("oracle");
        save(g, p);
        const std::string first = slurp(p);
        PropertyGraph back = load(p);
        ASSERT_EQ(back, g);
        ASSERT_EQ(back.canonical_serialization(), g.canonical_serialization());
        ASSERT_TRUE(back.audit().empty());
        save(back, p);
        ASSERT_EQ(slurp(p), first) << "round " << round;
        ASSERT_EQ(PropertyGraph::from_canonical_json(nlohmann::json::parse(g.canonical_serialization())), g);
        fs::remove(p);
    }
    const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    EXPECT_LT(secs, 60.0);
}
