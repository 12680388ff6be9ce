#include "store_contract.hpp"

#include "ctiforge/errors.hpp"

#include <fstream>
#include <regex>
#include <set>
#include <sstream>

namespace testsupport {

using namespace ctiforge;

namespace {

void expect(bool cond, const std::string &what) {
  if (!cond) throw ContractFailure(what);
}

template <typename T>
void expect_eq(const T &actual, const T &expected, const std::string &what) {
  if (!(actual == expected)) {
    std::ostringstream os;
    os << what << " (got " << actual << ", expected " << expected << ")";
    throw ContractFailure(os.str());
  }
}

template <typename F>
void expect_error(ErrorCode code, F f, const std::string &what) {
  try {
    f();
  } catch (const Error &e) {
    if (e.code() == code) return;
    throw ContractFailure(what + ": threw " + std::string(to_string(e.code())) + " instead of " +
                          std::string(to_string(code)));
  }
  throw ContractFailure(what + ": no error raised");
}

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<ContractCase> build() {
  std::vector<ContractCase> c;

  c.push_back({"empty_store_has_no_files", [](const StoreEnv &env) {
                 auto s = env.create();
                 expect(!s->exists("a.md"), "exists on empty store");
               }});
  c.push_back({"empty_store_has_no_history", [](const StoreEnv &env) {
                 auto s = env.create();
                 expect(!s->latest_commit().has_value(), "latest_commit on empty store");
                 expect(s->list_commits_since(std::nullopt).empty(), "list_commits_since on empty store");
               }});
  c.push_back({"put_then_exists", [](const StoreEnv &env) {
                 auto s = env.create();
                 s->put("a.md", "alpha\n", "add a");
                 expect(s->exists("a.md"), "exists after put");
                 expect(!s->exists("b.md"), "other names stay absent");
               }});
  c.push_back({"put_then_read_round_trips_bytes", [](const StoreEnv &env) {
                 auto s = env.create();
                 const std::string body = std::string("# T\n\nline\twith tab\r\nnul:") + '\0' + "end caf\xc3\xa9\n";
                 s->put("bytes.md", body, "add bytes");
                 expect_eq(s->read("bytes.md"), body, "read content");
               }});
  c.push_back({"root_commit_fields", [](const StoreEnv &env) {
                 auto s = env.create();
                 const CommitRef r = s->put("a.md", "x", "add CTI report: a.md");
                 expect(!r.id.empty(), "commit id");
                 expect(std::regex_match(r.id, std::regex("[0-9a-f]+")), "commit id is hex");
                 expect(!r.parent.has_value(), "root commit has no parent");
                 expect(r.files == std::vector<std::string>{"a.md"}, "files of commit");
                 expect_eq(r.message, std::string("add CTI report: a.md"), "message");
                 expect(std::regex_match(r.timestamp, std::regex(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z)")),
                        "timestamp format " + r.timestamp);
                 expect(r.touches("a.md") && !r.touches("b.md"), "touches");
               }});
  c.push_back({"latest_commit_after_one_put", [](const StoreEnv &env) {
                 auto s = env.create();
                 const CommitRef r = s->put("a.md", "x", "m");
                 const auto latest = s->latest_commit();
                 expect(latest.has_value(), "latest present");
                 expect(*latest == r, "latest equals the returned commit");
               }});
  c.push_back({"second_put_links_to_first", [](const StoreEnv &env) {
                 auto s = env.create();
                 const CommitRef a = s->put("a.md", "x", "m1");
                 const CommitRef b = s->put("b.md", "y", "m2");
                 expect(b.parent == a.id, "parent of second commit");
                 expect_eq(s->latest_commit()->id, b.id, "latest id");
                 expect(a.id != b.id, "distinct ids");
               }});
  c.push_back({"list_all_oldest_first", [](const StoreEnv &env) {
                 auto s = env.create();
                 const CommitRef a = s->put("a.md", "1", "m1");
                 const CommitRef b = s->put("b.md", "2", "m2");
                 const CommitRef d = s->put("c.md", "3", "m3");
                 const auto all = s->list_commits_since(std::nullopt);
                 expect_eq(all.size(), std::size_t{3}, "commit count");
                 expect(all[0] == a && all[1] == b && all[2] == d, "order and content of history");
               }});
  c.push_back({"list_since_latest_is_empty", [](const StoreEnv &env) {
                 auto s = env.create();
                 s->put("a.md", "1", "m1");
                 const CommitRef b = s->put("b.md", "2", "m2");
                 expect(s->list_commits_since(b.id).empty(), "nothing after latest");
               }});
  c.push_back({"list_since_root_returns_newer_in_order", [](const StoreEnv &env) {
                 auto s = env.create();
                 const CommitRef root = s->put("a.md", "1", "m1");
                 const CommitRef b = s->put("b.md", "2", "m2");
                 const CommitRef d = s->put("c.md", "3", "m3");
                 const auto since = s->list_commits_since(root.id);
                 expect_eq(since.size(), std::size_t{2}, "commits after root");
                 expect(since[0].id == b.id && since[1].id == d.id, "order after root");
               }});
  c.push_back({"list_since_unknown_ref", [](const StoreEnv &env) {
                 auto s = env.create();
                 s->put("a.md", "1", "m1");
                 expect_error(ErrorCode::UnknownRef,
                              [&] { s->list_commits_since(std::string(40, 'f')); }, "unknown since id");
               }});
  c.push_back({"read_missing_file", [](const StoreEnv &env) {
                 auto s = env.create();
                 expect_error(ErrorCode::UnknownRef, [&] { s->read("nope.md"); }, "read on empty store");
                 s->put("a.md", "1", "m1");
                 expect_error(ErrorCode::UnknownRef, [&] { s->read("nope.md"); }, "read of absent name");
               }});
  c.push_back({"overwrite_creates_new_commit", [](const StoreEnv &env) {
                 auto s = env.create();
                 const CommitRef a = s->put("a.md", "v1", "m1");
                 const CommitRef b = s->put("a.md", "v2", "m2");
                 expect(b.parent == a.id && b.id != a.id, "overwrite is a new child commit");
                 expect_eq(s->read("a.md"), std::string("v2"), "latest content");
                 expect(b.files == std::vector<std::string>{"a.md"}, "change set");
               }});
  c.push_back({"identical_puts_get_distinct_ids", [](const StoreEnv &env) {
                 auto s = env.create();
                 std::set<std::string> ids;
                 for (int i = 0; i < 3; ++i) ids.insert(s->put("same.md", "same", "same").id);
                 expect_eq(ids.size(), std::size_t{3}, "unique ids");
                 expect_eq(s->list_commits_since(std::nullopt).size(), std::size_t{3}, "history length");
               }});
  c.push_back({"working_copy_matches_content", [](const StoreEnv &env) {
                 auto s = env.create();
                 s->put("a.md", "working copy\n", "m");
                 expect_eq(slurp(s->path_of("a.md")), std::string("working copy\n"), "checked-out file");
               }});
  c.push_back({"history_survives_reopen", [](const StoreEnv &env) {
                 std::vector<CommitRef> before;
                 {
                   auto s = env.create();
                   s->put("a.md", "1", "m1");
                   s->put("b.md", "2", "m2");
                   before = s->list_commits_since(std::nullopt);
                 }
                 auto s = env.reopen();
                 expect(s->list_commits_since(std::nullopt) == before, "history after reopen");
                 expect(s->exists("a.md") && s->exists("b.md"), "files after reopen");
               }});
  c.push_back({"invalid_name_rejected_without_commit", [](const StoreEnv &env) {
                 auto s = env.create();
                 for (const char *bad : {"../escape.md", "", "notes.txt", "a/b.md"}) {
                   expect_error(ErrorCode::InvalidFileName, [&] { s->put(bad, "x", "m"); },
                                std::string("put '") + bad + "'");
                 }
                 expect(!s->latest_commit().has_value(), "no commit after rejected puts");
               }});
  c.push_back({"stale_parent_is_retried", [](const StoreEnv &env) {
                 auto s = env.create();
                 auto other = env.reopen();
                 const CommitRef base = s->put("base.md", "0", "m0");
                 int calls = 0;
                 std::optional<CommitRef> rival;
                 s->set_before_write_hook([&] {
                   if (++calls == 1) rival = other->put("rival.md", "r", "rival");
                 });
                 const CommitRef mine = s->put("mine.md", "m", "mine");
                 s->set_before_write_hook(nullptr);
                 expect_eq(calls, 2, "attempts");
                 expect(rival.has_value() && rival->parent == base.id, "rival landed on base");
                 expect(mine.parent == rival->id, "retried commit is built on the rival");
                 expect(s->exists("rival.md") && s->exists("mine.md") && s->exists("base.md"), "all files present");
                 const auto hist = s->list_commits_since(std::nullopt);
                 expect_eq(hist.size(), std::size_t{3}, "linear history length");
               }});
  c.push_back({"persistent_staleness_gives_conflict", [](const StoreEnv &env) {
                 auto s = env.create();
                 auto other = env.reopen();
                 s->put("base.md", "0", "m0");
                 int calls = 0;
                 s->set_before_write_hook([&] {
                   ++calls;
                   other->put("rival.md", std::to_string(calls), "rival " + std::to_string(calls));
                 });
                 expect_error(ErrorCode::Conflict, [&] { s->put("mine.md", "m", "mine"); }, "exhausted retries");
                 s->set_before_write_hook(nullptr);
                 expect_eq(calls, ReportStore::kPutAttempts, "attempts before giving up");
                 expect(!s->exists("mine.md"), "failed put left no file");
                 expect_eq(s->list_commits_since(std::nullopt).size(),
                           static_cast<std::size_t>(1 + ReportStore::kPutAttempts), "only rival commits added");
               }});
  c.push_back({"missing_root_is_unavailable", [](const StoreEnv &env) {
                 StoreEnv gone{env.kind, env.root / "does-not-exist"};
                 auto s = gone.reopen();
                 expect_error(ErrorCode::StoreUnavailable, [&] { s->exists("a.md"); }, "exists");
                 expect_error(ErrorCode::StoreUnavailable, [&] { s->latest_commit(); }, "latest_commit");
                 expect_error(ErrorCode::StoreUnavailable, [&] { s->put("a.md", "x", "m"); }, "put");
               }});
  return c;
}

}  // namespace

const std::vector<ContractCase> &store_contract() {
  static const std::vector<ContractCase> cases = build();
  return cases;
}

}  // namespace testsupport
