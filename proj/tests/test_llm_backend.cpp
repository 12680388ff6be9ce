#include "ctiforge/cost.hpp"
#include "ctiforge/errors.hpp"
#include "ctiforge/llm_backend.hpp"
#include "ctiforge/pipeline.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <mutex>
#include <thread>

using namespace ctiforge;

namespace {

// Minimal chat-completions endpoint. Flow prompts get both headings back;
// everything else gets unheaded prose.
class FakeChatServer {
 public:
  FakeChatServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request &req, httplib::Response &res) {
      std::lock_guard lock(mu_);
      requests.push_back(nlohmann::json::parse(req.body));
      auth.push_back(req.get_header_value("Authorization"));
      if (status != 200) {
        res.status = status;
        res.set_content("overloaded", "text/plain");
        return;
      }
      const std::string prompt = requests.back()["messages"][1]["content"];
      std::string content = "Generated prose about the intrusion.";
      if (prompt.find("\"## MITRE Summary Table\" first") != std::string::npos)
        content = "## MITRE Summary Table\n\n| T1566 |\n\n## Data Extraction\n\n| ioc |";
      nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeChatServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  std::vector<nlohmann::json> requests;
  std::vector<std::string> auth;
  int status = 200;

 private:
  httplib::Server server_;
  std::mutex mu_;
  int port_ = 0;
  std::thread thread_;
};

GenerationRequest request(const std::string &prompt) {
  GenerationRequest r;
  r.sections = {SectionKind::MetadataOverview};
  r.prompt = prompt;
  return r;
}

}  // namespace

TEST(LlmHttp, RequestShapeAndUsage) {
  FakeChatServer srv;
  LlmHttpConfig cfg;
  cfg.base_url = srv.base_url();
  cfg.model = "test-model";
  cfg.api_key = "k-123";
  LlmHttpBackend b(cfg);
  const auto r = b.generate(request(std::string(4000, 'p')));
  EXPECT_EQ(r.body, "Generated prose about the intrusion.");
  ASSERT_EQ(srv.requests.size(), 1u);
  const auto &body = srv.requests[0];
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_DOUBLE_EQ(body["temperature"].get<double>(), 0.2);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["role"], "user");
  EXPECT_EQ(body["messages"][1]["content"], std::string(4000, 'p'));
  EXPECT_EQ(srv.auth[0], "Bearer k-123");
  EXPECT_EQ(r.usage.completion_chars, r.body.size());
  EXPECT_EQ(r.usage.prompt_chars, cfg.system_prompt.size() + 4000);
  EXPECT_EQ(r.usage.scu_estimate, estimate_scu(r.usage.prompt_chars, kDefaultScuBaseRate));
}

TEST(LlmHttp, ScuMonotoneInPromptLength) {
  FakeChatServer srv;
  LlmHttpConfig cfg;
  cfg.base_url = srv.base_url();
  LlmHttpBackend b(cfg);
  Decimal prev;
  for (std::size_t n : {0u, 10u, 500u, 4000u, 12000u}) {
    const Decimal cur = b.generate(request(std::string(n, 'x'))).usage.scu_estimate;
    EXPECT_GE(cur, prev) << n;
    prev = cur;
  }
}

TEST(LlmHttp, ErrorsSurfaceAsBackendError) {
  FakeChatServer srv;
  srv.status = 503;
  LlmHttpConfig cfg;
  cfg.base_url = srv.base_url();
  LlmHttpBackend b(cfg);
  try {
    b.generate(request("x"));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendError);
  }
  LlmHttpConfig bad;
  bad.base_url = "ftp://nope";
  EXPECT_THROW(LlmHttpBackend{bad}, Error);
}

TEST(LlmHttp, ApiKeyFromEnvironment) {
  ::setenv("CTI_FORGE_API_KEY", "from-env", 1);
  EXPECT_EQ(with_env_api_key({}).api_key, "from-env");
  LlmHttpConfig explicit_key;
  explicit_key.api_key = "given";
  EXPECT_EQ(with_env_api_key(explicit_key).api_key, "given");
  ::unsetenv("CTI_FORGE_API_KEY");
}

TEST(LlmHttp, FullRunHasAllHeadingsAndNonemptyBodies) {
  FakeChatServer srv;
  LlmHttpConfig cfg;
  cfg.base_url = srv.base_url();
  LlmHttpBackend llm(cfg);
  testsupport::TempDir dir;
  auto store = init_store(StoreKind::Journal, dir / "s");
  const Catalog cat = Catalog::load(default_data_dir() / "attack-enterprise-13.1.csv");
  const Lexicon lex = Lexicon::load();
  PipelineDeps d;
  d.store = store.get();
  d.backends = {&llm, &llm, &llm};
  d.catalog = &cat;
  d.lexicon = &lex;
  IntelRequest req;
  req.intel = {IntelSource::Kind::File, testsupport::fixture("campaign.html").string()};
  req.file_name = "llm.md";
  const RunResult r = run(req, d);
  ASSERT_EQ(r.report.sections.size(), 7u);
  for (const auto &s : r.report.sections) {
    EXPECT_TRUE(s.body.starts_with(heading(s.kind))) << s.body;
    EXPECT_GT(s.body.size(), heading(s.kind).size() + 2);
    EXPECT_EQ(s.meta.backend_id, "llm-http");
  }
  // Four assistant sections, one flow call, one tags call.
  EXPECT_EQ(srv.requests.size(), 6u);
  Decimal total;
  for (const auto &u : r.usages) total += u.scu_estimate;
  EXPECT_GT(total, Decimal());
  EXPECT_TRUE(store->exists("llm.md"));
}
