#pragma once

#include <atomic>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fairkg/answer.hpp"
#include "fairkg/curation.hpp"
#include "fairkg/error.hpp"
#include "fairkg/harvester.hpp"
#include "fairkg/retrieval.hpp"
#include "fairkg/service.hpp"

namespace testsupport {

inline const std::string kRwDoi = "doi:10.18738/T8/V2RWLD";
inline const std::string kCodaDoi = "doi:10.18738/T8/BBOQMV";
inline const std::string kScandDoi = "doi:10.18738/T8/0PRYRH";
inline const std::string kRepoBase = "https://dataverse.tdl.org";

inline std::string read_fixture(const std::string& name) {
    std::ifstream in(std::string(FAIRKG_FIXTURE_DIR) + "/" + name, std::ios::binary);
    if (!in) throw std::runtime_error("missing fixture " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline fairkg::MetadataRecord fixture_record(const std::string& name, const std::string& base = kRepoBase) {
    return fairkg::parse_ddi(read_fixture(name), base);
}

/// Knowledge base holding the two curated fixtures (and SCAND when asked).
inline std::unique_ptr<fairkg::KnowledgeBase> fixture_kb(bool with_reports = true, bool with_scand = false) {
    auto kb = std::make_unique<fairkg::KnowledgeBase>(std::make_shared<fairkg::HashingEmbeddingProvider>(256));
    auto opt = [&](const char* f) { return with_reports ? std::optional<std::string>(read_fixture(f)) : std::nullopt; };
    kb->ingest_record(fixture_record("vid2real_rw.json"), opt("vid2real_rw_report.md"));
    kb->ingest_record(fixture_record("coda.json"), opt("coda_report.md"));
    if (with_scand) kb->ingest_record(fixture_record("scand.json"));
    return kb;
}

inline void add_fixture_publications(fairkg::KnowledgeBase& kb) {
    kb.add_document(kRwDoi, fairkg::SourceKind::Publication,
                    "# Vid2Real HRI: Align video-based HRI study designs with real-world settings\n\n"
                    "We compare an online video study with an in-person study of the same quadruped robot encounters.");
}

/// In-process stand-in for the repository export API.
class MockRepository {
public:
    MockRepository() {
        server_.Get("/api/datasets/export", [this](const httplib::Request& req, httplib::Response& res) {
            ++requests_;
            const std::string id = req.get_param_value("persistentId");
            std::lock_guard lock(mutex_);
            if (auto s = status_.find(id); s != status_.end()) {
                res.status = s->second;
                res.set_content("{}", "application/json");
                return;
            }
            auto it = records_.find(id);
            if (it == records_.end()) {
                res.status = 404;
                res.set_content(R"({"status":"ERROR","message":"not found"})", "application/json");
                return;
            }
            res.set_content(it->second, "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~MockRepository() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    void add(const std::string& doi, std::string body) {
        std::lock_guard lock(mutex_);
        records_[doi] = std::move(body);
    }
    void fail(const std::string& doi, int status) {
        std::lock_guard lock(mutex_);
        status_[doi] = status;
    }
    std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
    int requests() const { return requests_; }

    void add_fixtures() {
        add(kRwDoi, read_fixture("vid2real_rw.json"));
        add(kCodaDoi, read_fixture("coda.json"));
    }

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
    std::mutex mutex_;
    std::map<std::string, std::string> records_;
    std::map<std::string, int> status_;
    std::atomic<int> requests_{0};
};

/// Completion provider that echoes a fixed reply and records prompts.
class EchoCompleter final : public fairkg::CompletionProvider {
public:
    std::string complete(const std::string& prompt, int) override {
        std::lock_guard lock(mutex_);
        prompts.push_back(prompt);
        if (fail) throw fairkg::Error(fairkg::ErrorCode::ProviderError, "completion backend unavailable");
        return "mock completion";
    }
    std::vector<std::string> prompts;
    bool fail = false;

private:
    std::mutex mutex_;
};

/// ChatService listening on an ephemeral local port, with a mock completer.
class LiveService {
public:
    explicit LiveService(std::shared_ptr<fairkg::KnowledgeBase> kb = nullptr)
        : completer_(std::make_shared<EchoCompleter>()) {
        if (!kb) kb = std::make_shared<fairkg::KnowledgeBase>(std::make_shared<fairkg::HashingEmbeddingProvider>(256));
        service_ = std::make_unique<fairkg::ChatService>(kb, completer_);
        port_ = service_->bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { service_->listen_after_bind(); });
        service_->wait_until_ready();
    }
    ~LiveService() {
        service_->stop();
        thread_.join();
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port_);
        c.set_read_timeout(60, 0);
        return c;
    }

    struct Reply {
        int status;
        nlohmann::json body;
        std::string raw;
        std::string content_type;
    };

    Reply get(const std::string& path) const { return wrap(client().Get(path)); }
    Reply post(const std::string& path, const nlohmann::json& body) const {
        return wrap(client().Post(path, body.dump(), "application/json"));
    }
    Reply post_raw(const std::string& path, const std::string& body) const {
        return wrap(client().Post(path, body, "application/json"));
    }

    std::string session() const { return post("/sessions", nlohmann::json::object()).body.at("session_id"); }

    fairkg::ChatService& service() { return *service_; }
    EchoCompleter& completer() { return *completer_; }

private:
    static Reply wrap(const httplib::Result& r) {
        if (!r) throw std::runtime_error("request failed: " + httplib::to_string(r.error()));
        Reply out{r->status, nlohmann::json(), r->body, r->get_header_value("Content-Type")};
        if (out.content_type.rfind("application/json", 0) == 0) out.body = nlohmann::json::parse(r->body);
        return out;
    }

    std::shared_ptr<EchoCompleter> completer_;
    std::unique_ptr<fairkg::ChatService> service_;
    int port_ = -1;
    std::thread thread_;
};

/// Runs `sessions` scripted conversations concurrently against one service and
/// serially against another; returns one message per divergence or failure.
inline std::vector<std::string> session_isolation_failures(
    int sessions, const std::function<std::shared_ptr<fairkg::KnowledgeBase>()>& make_kb,
    const std::vector<std::string>& questions) {
    auto script_for = [&](int s) {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < questions.size(); ++i) out.push_back(questions[(s + i) % questions.size()]);
        return out;
    };
    std::vector<std::string> problems;

    LiveService serial(make_kb());
    std::vector<nlohmann::json> expected;
    for (int s = 0; s < sessions; ++s) {
        const std::string id = serial.session();
        for (const auto& q : script_for(s)) serial.post("/sessions/" + id + "/query", {{"text", q}});
        expected.push_back(serial.get("/sessions/" + id).body["messages"]);
    }

    LiveService live(make_kb());
    std::vector<std::string> ids(sessions);
    std::vector<std::string> errors(sessions);
    std::vector<std::thread> threads;
    for (int s = 0; s < sessions; ++s) {
        threads.emplace_back([&, s] {
            try {
                ids[s] = live.session();
                for (const auto& q : script_for(s)) {
                    auto r = live.post("/sessions/" + ids[s] + "/query", {{"text", q}});
                    if (r.status != 200 && r.status != 422) errors[s] = "status " + std::to_string(r.status);
                }
            } catch (const std::exception& e) {
                errors[s] = e.what();
            }
        });
    }
    for (auto& t : threads) t.join();

    std::set<std::string> unique(ids.begin(), ids.end());
    if (unique.size() != static_cast<std::size_t>(sessions)) problems.push_back("session ids are not unique");
    for (int s = 0; s < sessions; ++s) {
        if (!errors[s].empty()) {
            problems.push_back("session " + std::to_string(s) + ": " + errors[s]);
            continue;
        }
        if (live.get("/sessions/" + ids[s]).body["messages"] != expected[s])
            problems.push_back("session " + std::to_string(s) + " log differs from the serial run");
    }
    return problems;
}

} // namespace testsupport
