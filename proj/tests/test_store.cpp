#include "ctiforge/errors.hpp"
#include "ctiforge/store.hpp"
#include "store_contract.hpp"
#include "temp_dir.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <regex>
#include <set>
#include <thread>

using namespace ctiforge;

namespace {

std::string sha256(const std::string &data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

bool git_available() { return std::system("git --version >/dev/null 2>&1") == 0; }

struct ContractParam {
  StoreKind kind;
  std::size_t index;
};

std::string param_name(const testing::TestParamInfo<ContractParam> &info) {
  return std::string(store_kind_name(info.param.kind)) + "_" +
         testsupport::store_contract()[info.param.index].name;
}

std::vector<ContractParam> all_params() {
  std::vector<ContractParam> out;
  for (StoreKind k : {StoreKind::Journal, StoreKind::Git})
    for (std::size_t i = 0; i < testsupport::store_contract().size(); ++i) out.push_back({k, i});
  return out;
}

}  // namespace

class StoreContract : public testing::TestWithParam<ContractParam> {};

TEST_P(StoreContract, Holds) {
  if (GetParam().kind == StoreKind::Git && !git_available()) GTEST_SKIP() << "git not installed";
  testsupport::TempDir dir;
  const testsupport::StoreEnv env{GetParam().kind, dir / "store"};
  const auto &c = testsupport::store_contract()[GetParam().index];
  try {
    c.run(env);
  } catch (const testsupport::ContractFailure &f) {
    FAIL() << f.what();
  }
}

INSTANTIATE_TEST_SUITE_P(BothStores, StoreContract, testing::ValuesIn(all_params()), param_name);

TEST(StoreContractSuite, HasTwentyCases) {
  EXPECT_EQ(testsupport::store_contract().size(), 20u);
  std::set<std::string> names;
  for (const auto &c : testsupport::store_contract()) names.insert(c.name);
  EXPECT_EQ(names.size(), 20u);
}

TEST(StoreKinds, Parse) {
  EXPECT_EQ(parse_store_kind("journal"), StoreKind::Journal);
  EXPECT_EQ(parse_store_kind("git"), StoreKind::Git);
  try {
    parse_store_kind("svn");
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
  }
}

TEST(JournalStore, RecordFormatAndIdDigest) {
  testsupport::TempDir dir;
  auto store = init_store(StoreKind::Journal, dir / "s");
  const CommitRef a = store->put("a.md", "alpha", "first");
  const CommitRef b = store->put("b.md", "beta", "second");

  const std::string journal = testsupport::read_file(dir / "s" / "journal.ndjson");
  const std::regex line_re(
      R"re(\{"id":"[0-9a-f]{64}","parent":(null|"[0-9a-f]{64}"),"files":\["[^"]+"\],"message":"[^"]*","timestamp":"\d{4}-\d\d-\d\dT\d\d:\d\d:\d\dZ"\})re");
  std::size_t lines = 0;
  std::size_t start = 0;
  while (start < journal.size()) {
    const auto nl = journal.find('\n', start);
    ASSERT_NE(nl, std::string::npos);
    EXPECT_TRUE(std::regex_match(journal.substr(start, nl - start), line_re)) << journal.substr(start, nl - start);
    start = nl + 1;
    ++lines;
  }
  EXPECT_EQ(lines, 2u);

  EXPECT_EQ(a.id, sha256("\na.md " + sha256("alpha") + "\nfirst"));
  EXPECT_EQ(b.id, sha256(a.id + "\nb.md " + sha256("beta") + "\nsecond"));
  EXPECT_EQ(testsupport::read_file(dir / "s" / "files" / "b.md"), "beta");
}

TEST(JournalStore, CorruptJournalIsReported) {
  testsupport::TempDir dir;
  auto store = init_store(StoreKind::Journal, dir / "s");
  store->put("a.md", "x", "m");
  testsupport::write_file(dir / "s" / "journal.ndjson", testsupport::read_file(dir / "s" / "journal.ndjson") + "{oops\n");
  EXPECT_THROW(store->latest_commit(), Error);
}

class ConcurrentPuts : public testing::TestWithParam<StoreKind> {};

TEST_P(ConcurrentPuts, SharedHandleAndTwoHandlesKeepLinearHistory) {
  if (GetParam() == StoreKind::Git && !git_available()) GTEST_SKIP() << "git not installed";
  testsupport::TempDir dir;
  auto shared = init_store(GetParam(), dir / "s");
  auto other = open_store(GetParam(), dir / "s");
  constexpr int kPerThread = 5;
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      ReportStore &s = t % 2 ? *shared : *other;
      for (int i = 0; i < kPerThread; ++i) {
        try {
          s.put("r" + std::to_string(t) + "-" + std::to_string(i) + ".md", "body", "msg");
        } catch (const Error &e) {
          // Cross-handle races may exhaust the retry budget; that must surface as Conflict.
          if (e.code() != ErrorCode::Conflict) ++failures;
        }
      }
    });
  }
  for (auto &th : threads) th.join();
  EXPECT_EQ(failures.load(), 0);
  const auto history = shared->list_commits_since(std::nullopt);
  ASSERT_FALSE(history.empty());
  EXPECT_FALSE(history.front().parent.has_value());
  std::set<std::string> ids;
  for (std::size_t i = 0; i < history.size(); ++i) {
    EXPECT_TRUE(ids.insert(history[i].id).second);
    if (i) EXPECT_EQ(history[i].parent, std::optional<std::string>(history[i - 1].id));
    ASSERT_EQ(history[i].files.size(), 1u);
    EXPECT_TRUE(shared->exists(history[i].files[0]));
  }
}

INSTANTIATE_TEST_SUITE_P(BothStores, ConcurrentPuts, testing::Values(StoreKind::Journal, StoreKind::Git),
                         [](const testing::TestParamInfo<StoreKind> &i) {
                           return std::string(store_kind_name(i.param));
                         });

TEST(SharedHandle, ConcurrentPutsNeverConflict) {
  testsupport::TempDir dir;
  auto store = init_store(StoreKind::Journal, dir / "s");
  std::vector<std::thread> threads;
  std::atomic<int> errors{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) {
        try {
          store->put("n" + std::to_string(t * 10 + i) + ".md", "x", "m");
        } catch (const Error &) {
          ++errors;
        }
      }
    });
  }
  for (auto &th : threads) th.join();
  EXPECT_EQ(errors.load(), 0);
  EXPECT_EQ(store->list_commits_since(std::nullopt).size(), 80u);
}
