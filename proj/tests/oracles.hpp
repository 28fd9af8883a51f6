#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fairkg/graph.hpp"
#include "fairkg/intent.hpp"
#include "fairkg/retrieval.hpp"
#include "fairkg/text.hpp"
#include "support.hpp"

// Independent reference implementations shared by the unit tests and the
// acceptance runner.
namespace testsupport {

using namespace fairkg;

struct EntityKind {
    const char* label;
    const char* edge;
};

inline const EntityKind kEntities[] = {{"RobotModel", "usesModel"},     {"Robot", "hasRobot"},
                                {"Sensor", "hasSensor"},         {"ControlMode", "usesControl"},
                                {"ResearchMethod", "usesMethod"}, {"ExperimentLocation", "conductedAt"},
                                {"Instrument", "usesInstrument"}};

inline const char* kNames[] = {"Boston Dynamics Spot", "Clearpath Husky", "Clearpath Jackal", "3D LiDAR", "IMU",
                        "stereo cameras",       "joystick teleoperation", "autonomous navigation",
                        "field experiment",     "survey", "UT campus", "  Clearpath   HUSKY "};

// A random graph shaped like curated catalogs: datasets, shared entities,
// and per-dataset files with token properties.
inline PropertyGraph random_graph(std::mt19937_64& rng, std::size_t max_nodes) {
    PropertyGraph g;
    std::uniform_int_distribution<int> n_ds(1, 20);
    const int datasets = n_ds(rng);
    std::vector<std::string> ds_ids;
    for (int d = 0; d < datasets; ++d) {
        const std::string doi = "doi:10.5555/R" + std::to_string(rng() % 1000);
        auto r = g.upsert_node("Dataset", {{"doi", doi}, {"title", "Dataset " + doi}, {"name", "Dataset " + doi}});
        ds_ids.push_back(r.id);
    }
    std::uniform_int_distribution<std::size_t> pick_ds(0, ds_ids.size() - 1);
    std::uniform_int_distribution<int> pick_entity(0, std::size(kEntities) - 1);
    std::uniform_int_distribution<int> pick_name(0, std::size(kNames) - 1);
    std::uniform_int_distribution<int> action(0, 9);
    while (g.node_count() < max_nodes) {
        const int a = action(rng);
        const std::string& ds = ds_ids[pick_ds(rng)];
        if (a < 4) {
            const auto& k = kEntities[pick_entity(rng)];
            auto r = g.upsert_node(k.label, {{"name", kNames[pick_name(rng)]}});
            g.add_edge(k.edge, ds, r.id);
        } else if (a < 8) {
            const std::string doi = string_property(g.node(ds)->properties, "doi");
            const int session = static_cast<int>(rng() % 4);
            std::string sess = std::to_string(session);
            if (rng() % 2) sess = "0" + sess;
            const char* streams[] = {"video", "audio", "gaze"};
            const std::string stream = streams[rng() % 3];
            const std::string path = "s" + sess + "/f" + std::to_string(rng() % 100000) + "_" + stream;
            Properties props{{"path", path}, {"name", path}, {"dataset", doi}, {"session", sess}, {"stream", stream}};
            if (rng() % 3 == 0) props["participant"] = std::int64_t(rng() % 20);
            auto r = g.upsert_node("DataFile", props);
            g.add_edge("containsFile", ds, r.id);
        } else if (a == 8) {
            auto robot = g.upsert_node("Robot", {{"name", kNames[pick_name(rng)]}});
            auto sensor = g.upsert_node("Sensor", {{"name", kNames[pick_name(rng)]}});
            g.add_edge("hasSensor", robot.id, sensor.id);
        } else if (g.edge_count() > 0) {
            auto it = g.edges().begin();
            std::advance(it, rng() % g.edge_count());
            const Edge e = it->second;
            g.remove_edge(e.edge_type, e.source, e.target);
        }
    }
    return g;
}

inline std::vector<std::string> brute_find(const PropertyGraph& g, const std::string& label, const std::string& name) {
    std::set<std::string> dois;
    auto matches = [&](const Node& n) {
        return n.label == label && text::normalize_name(string_property(n.properties, "name")) == text::normalize_name(name);
    };
    for (const auto& [key, e] : g.edges()) {
        const Node& s = g.nodes().at(e.source);
        const Node& t = g.nodes().at(e.target);
        if (s.label == "Dataset" && matches(t)) dois.insert(string_property(s.properties, "doi"));
        if (t.label == "Dataset" && matches(s)) dois.insert(string_property(t.properties, "doi"));
    }
    return {dois.begin(), dois.end()};
}

inline bool brute_value_eq(const std::string& want, const std::string& have) {
    auto digits = [](const std::string& s) {
        return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
    };
    if (digits(want) && digits(have) && want.size() < 18 && have.size() < 18) return std::stoll(want) == std::stoll(have);
    return want == have;
}

inline std::vector<std::string> brute_locate(const PropertyGraph& g, const std::string& ds_id, const FileFilters& filters) {
    std::vector<std::string> paths;
    for (const auto& [key, e] : g.edges()) {
        if (e.edge_type != "containsFile" || e.source != ds_id) continue;
        const Node& f = g.nodes().at(e.target);
        bool ok = true;
        for (const auto& [k, v] : filters) {
            auto it = f.properties.find(k);
            if (it == f.properties.end() || !brute_value_eq(v, scalar_to_string(it->second))) ok = false;
        }
        if (ok) paths.push_back(string_property(f.properties, "path"));
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

// Un-normalized gaussian vector per text, fixed by the text itself.
class GaussianProvider : public EmbeddingProvider {
public:
    explicit GaussianProvider(std::size_t dim) : dim_(dim) {}

    std::vector<double> raw(const std::string& text) const {
        std::mt19937_64 rng(std::hash<std::string>{}(text));
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<double> v(dim_);
        for (double& x : v) x = n(rng) * 3.0;
        return v;
    }
    std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override {
        ++calls;
        std::vector<std::vector<double>> out;
        for (const auto& t : texts) out.push_back(raw(t));
        return out;
    }
    std::size_t dimension() const override { return dim_; }

    int calls = 0;

private:
    std::size_t dim_;
};

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
}

struct ParaphraseGroup {
    std::vector<std::string> phrasings;
    Intent expected;
};

inline std::vector<ParaphraseGroup> paraphrase_groups() {
    Intent robot_kind;
    robot_kind.kind = IntentKind::Detail;
    robot_kind.dois = {kRwDoi};
    robot_kind.facets = {"usesModel"};

    Intent which_spot;
    which_spot.kind = IntentKind::WhichDatasets;
    which_spot.entity_label = "RobotModel";
    which_spot.entity_name = "Boston Dynamics Spot";

    Intent videos;
    videos.kind = IntentKind::LocateFiles;
    videos.dois = {kRwDoi};
    videos.filters = {{"session", "1"}, {"stream", "video"}};

    Intent control;
    control.kind = IntentKind::Compare;
    control.dois = {kCodaDoi, kRwDoi};
    control.facets = {"usesControl"};

    Intent coda_sensors;
    coda_sensors.kind = IntentKind::Detail;
    coda_sensors.dois = {kCodaDoi};
    coda_sensors.facets = {"hasSensor"};

    Intent rw_ethics;
    rw_ethics.kind = IntentKind::Detail;
    rw_ethics.dois = {kRwDoi};
    rw_ethics.facets = {"approvedBy"};

    return {
        {{"What kind of robot is used in Vid2Real Real World?",
          "What type of robot was utilized in the Vid2Real real-world study?",
          "Which robot platform does Vid2Real Real World use?"},
         robot_kind},
        {{"Which datasets use Boston Dynamics Spot?", "What datasets involve the Boston Dynamics Spot robot?",
          "Which studies were run with a Boston Dynamics Spot?"},
         which_spot},
        {{"Point to all video files for session 1 in Vid2Real Real World.",
          "Where are the session 01 video files of Vid2Real Real World?",
          "List the video files from session 1 of the Vid2Real real world dataset."},
         videos},
        {{"How does the control mode differ between CODa and Vid2Real Real World?",
          "Compare the control mode of Vid2Real Real World and CODa.",
          "What is the difference in control mode between Vid2Real Real World and CODa?"},
         control},
        {{"What sensors does CODa have?", "Which sensors were used to record CODa?",
          "List the sensors in the CODa dataset."},
         coda_sensors},
        {{"Was Vid2Real Real World approved by an IRB?", "What ethics approval does Vid2Real Real World have?",
          "Did the Vid2Real real world study get IRB approval?"},
         rw_ethics},
    };
}

/// Every fixture question used by the grounding checks.
inline std::vector<std::string> grounding_questions() {
    std::vector<std::string> questions;
    for (const auto& g : paraphrase_groups()) questions.insert(questions.end(), g.phrasings.begin(), g.phrasings.end());
    questions.insert(questions.end(), {"How was the audio resampled?", "Does the CODa dataset include LiDAR ?",
                                       "What is the robot model difference between CODa and SCAND?",
                                       "Which datasets use a Clearpath Jackal?", "Tell me about SCAND.",
                                       "Point to the files of SCAND"});
    return questions;
}

} // namespace testsupport
