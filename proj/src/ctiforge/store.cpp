#include "ctiforge/store.hpp"

#include "ctiforge/errors.hpp"
#include "ctiforge/model.hpp"
#include "ctiforge/subprocess.hpp"
#include "ctiforge/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <sys/file.h>
#include <unistd.h>

namespace ctiforge {

namespace fs = std::filesystem;

bool CommitRef::touches(std::string_view name) const {
  return std::find(files.begin(), files.end(), name) != files.end();
}

std::string_view store_kind_name(StoreKind k) { return k == StoreKind::Journal ? "journal" : "git"; }

StoreKind parse_store_kind(std::string_view s) {
  const std::string key = text::to_lower(text::trim(s));
  if (key == "journal") return StoreKind::Journal;
  if (key == "git") return StoreKind::Git;
  fail(ErrorCode::InvalidArgument, "unknown store kind '" + std::string(s) + "' (expected journal or git)");
}

void ReportStore::require_root() const {
  std::error_code ec;
  if (!fs::is_directory(root_, ec)) {
    fail(ErrorCode::StoreUnavailable, "report store " + root_.string() + " does not exist");
  }
}

CommitRef ReportStore::put(std::string_view name, std::string_view content, std::string_view message) {
  validate_file_name(name);
  std::lock_guard lock(put_mutex_);
  require_root();
  for (int attempt = 1; attempt <= kPutAttempts; ++attempt) {
    const std::optional<std::string> parent = head_id();
    if (hook_) hook_();
    if (auto ref = try_commit(parent, name, content, message)) return *ref;
  }
  fail(ErrorCode::Conflict, "report store head kept moving; gave up after " + std::to_string(kPutAttempts) +
                                " attempts to commit " + std::string(name));
}

namespace {

void write_atomically(const fs::path &path, std::string_view content) {
  static std::atomic<unsigned> counter{0};
  const fs::path tmp = path.parent_path() /
                       ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter++));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::StoreUnavailable, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) fail(ErrorCode::StoreUnavailable, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    fail(ErrorCode::StoreUnavailable, "cannot move report into place at " + path.string());
  }
}

std::string slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::StoreUnavailable, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Exclusive advisory lock on a file, released on destruction.
class FileLock {
 public:
  explicit FileLock(const fs::path &path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::StoreUnavailable, "cannot open lock file " + path.string());
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        fail(ErrorCode::StoreUnavailable, "cannot lock " + path.string());
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock &) = delete;
  FileLock &operator=(const FileLock &) = delete;

 private:
  int fd_ = -1;
};

std::vector<CommitRef> history_since(std::vector<CommitRef> all, const std::optional<std::string> &since_id) {
  if (!since_id) return all;
  const auto it = std::find_if(all.begin(), all.end(), [&](const CommitRef &c) { return c.id == *since_id; });
  if (it == all.end()) fail(ErrorCode::UnknownRef, "unknown commit id " + *since_id);
  return {it + 1, all.end()};
}

// ---------------------------------------------------------------------------

class JournalStore final : public ReportStore {
 public:
  explicit JournalStore(fs::path root) : ReportStore(std::move(root)) {}

  StoreKind kind() const override { return StoreKind::Journal; }

  bool exists(std::string_view name) override {
    const auto all = load();
    return std::any_of(all.begin(), all.end(), [&](const CommitRef &c) { return c.touches(name); });
  }

  std::optional<CommitRef> latest_commit() override {
    auto all = load();
    if (all.empty()) return std::nullopt;
    return std::move(all.back());
  }

  std::vector<CommitRef> list_commits_since(const std::optional<std::string> &since_id) override {
    return history_since(load(), since_id);
  }

  std::string read(std::string_view name) override {
    if (!exists(name)) fail(ErrorCode::UnknownRef, "no report named " + std::string(name));
    return slurp(path_of(name));
  }

 protected:
  fs::path files_dir() const override { return root() / "files"; }

  std::optional<std::string> head_id() override {
    auto latest = latest_commit();
    if (!latest) return std::nullopt;
    return latest->id;
  }

  std::optional<CommitRef> try_commit(const std::optional<std::string> &parent, std::string_view name,
                                      std::string_view content, std::string_view message) override {
    require_root();
    FileLock lock(root() / ".lock");
    if (head_id() != parent) return std::nullopt;

    std::error_code ec;
    fs::create_directories(files_dir(), ec);
    if (ec) fail(ErrorCode::StoreUnavailable, "cannot create " + files_dir().string());

    CommitRef ref;
    ref.parent = parent;
    ref.files = {std::string(name)};
    ref.message = std::string(message);
    ref.timestamp = text::iso8601_utc_now();
    std::string digest_input = parent.value_or("") + "\n";
    for (const auto &f : ref.files) digest_input += f + " " + text::sha256_hex(content) + "\n";
    digest_input += message;
    ref.id = text::sha256_hex(digest_input);

    write_atomically(path_of(name), content);

    nlohmann::ordered_json rec;
    rec["id"] = ref.id;
    rec["parent"] = parent ? nlohmann::ordered_json(*parent) : nlohmann::ordered_json(nullptr);
    rec["files"] = ref.files;
    rec["message"] = ref.message;
    rec["timestamp"] = ref.timestamp;
    const std::string line = rec.dump() + "\n";
    const int fd = ::open(journal_path().c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd < 0) fail(ErrorCode::StoreUnavailable, "cannot open " + journal_path().string());
    const ssize_t n = ::write(fd, line.data(), line.size());
    ::fsync(fd);
    ::close(fd);
    if (n != static_cast<ssize_t>(line.size())) fail(ErrorCode::StoreUnavailable, "short write to journal");
    return ref;
  }

 private:
  fs::path journal_path() const { return root() / "journal.ndjson"; }

  std::vector<CommitRef> load() {
    require_root();
    std::vector<CommitRef> out;
    std::error_code ec;
    if (!fs::exists(journal_path(), ec)) return out;
    std::size_t line_no = 0;
    for (const auto &line : text::split(slurp(journal_path()), '\n')) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        const auto rec = nlohmann::json::parse(line);
        CommitRef c;
        c.id = rec.at("id").get<std::string>();
        if (!rec.at("parent").is_null()) c.parent = rec.at("parent").get<std::string>();
        c.files = rec.at("files").get<std::vector<std::string>>();
        c.message = rec.at("message").get<std::string>();
        c.timestamp = rec.at("timestamp").get<std::string>();
        out.push_back(std::move(c));
      } catch (const nlohmann::json::exception &e) {
        fail(ErrorCode::StoreUnavailable,
             "corrupt journal " + journal_path().string() + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return out;
  }
};

// ---------------------------------------------------------------------------

const std::map<std::string, std::string> &git_env() {
  static const std::map<std::string, std::string> kEnv = {
      {"GIT_AUTHOR_NAME", "cti-forge"},     {"GIT_AUTHOR_EMAIL", "cti-forge@localhost"},
      {"GIT_COMMITTER_NAME", "cti-forge"},  {"GIT_COMMITTER_EMAIL", "cti-forge@localhost"},
      {"GIT_TERMINAL_PROMPT", "0"},         {"LC_ALL", "C"},
  };
  return kEnv;
}

constexpr std::string_view kBranch = "refs/heads/main";

class GitStore final : public ReportStore {
 public:
  explicit GitStore(fs::path root) : ReportStore(std::move(root)) {}

  StoreKind kind() const override { return StoreKind::Git; }

  bool exists(std::string_view name) override {
    require_repo();
    return git({"cat-file", "-e", std::string(kBranch) + ":" + std::string(name)}).status == 0;
  }

  std::optional<CommitRef> latest_commit() override {
    require_repo();
    const auto head = head_id();
    if (!head) return std::nullopt;
    auto commits = log_range(*head, 1);
    if (commits.empty()) return std::nullopt;
    return std::move(commits.front());
  }

  std::vector<CommitRef> list_commits_since(const std::optional<std::string> &since_id) override {
    require_repo();
    const auto head = head_id();
    if (!head) {
      if (since_id) fail(ErrorCode::UnknownRef, "unknown commit id " + *since_id);
      return {};
    }
    auto all = log_range(*head, 0);
    std::reverse(all.begin(), all.end());
    return history_since(std::move(all), since_id);
  }

  std::string read(std::string_view name) override {
    require_repo();
    const auto r = git({"cat-file", "blob", std::string(kBranch) + ":" + std::string(name)});
    if (r.status != 0) fail(ErrorCode::UnknownRef, "no report named " + std::string(name));
    return r.out;
  }

 protected:
  fs::path files_dir() const override { return root(); }

  std::optional<std::string> head_id() override {
    require_repo();
    const auto r = git({"rev-parse", "--verify", "-q", std::string(kBranch) + "^{commit}"});
    if (r.status != 0) return std::nullopt;
    return std::string(text::trim(r.out));
  }

  std::optional<CommitRef> try_commit(const std::optional<std::string> &parent, std::string_view name,
                                      std::string_view content, std::string_view message) override {
    require_repo();
    static std::atomic<unsigned> counter{0};
    const fs::path index = root() / ".git" /
                           ("cti-forge-index-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    struct RemoveOnExit {
      fs::path p;
      ~RemoveOnExit() {
        std::error_code ec;
        fs::remove(p, ec);
      }
    } cleanup{index};
    std::map<std::string, std::string> env = git_env();
    env["GIT_INDEX_FILE"] = index.string();

    if (parent) must(git({"read-tree", *parent}, env), "read-tree");
    const std::string blob(text::trim(must(git({"hash-object", "-w", "--stdin"}, env, std::string(content)), "hash-object").out));
    must(git({"update-index", "--add", "--cacheinfo", "100644," + blob + "," + std::string(name)}, env), "update-index");
    const std::string tree(text::trim(must(git({"write-tree"}, env), "write-tree").out));
    std::vector<std::string> commit_args = {"commit-tree", "--no-gpg-sign", tree};
    if (parent) {
      commit_args.push_back("-p");
      commit_args.push_back(*parent);
    }
    commit_args.push_back("-m");
    commit_args.push_back(std::string(message));
    const std::string commit(text::trim(must(git(commit_args, env), "commit-tree").out));

    const std::string expected = parent.value_or(std::string(40, '0'));
    if (git({"update-ref", std::string(kBranch), commit, expected}).status != 0) return std::nullopt;

    write_atomically(path_of(name), content);
    // Keep the default index in step so the working tree reads as clean; a
    // busy index only costs cosmetics, never history.
    git({"update-index", "--add", "--cacheinfo", "100644," + blob + "," + std::string(name)});

    auto commits = log_range(commit, 1);
    if (commits.empty()) fail(ErrorCode::StoreUnavailable, "commit " + commit + " vanished");
    return std::move(commits.front());
  }

 private:
  ProcessResult git(const std::vector<std::string> &args, const std::map<std::string, std::string> &env = git_env(),
                    const std::string &input = {}) const {
    std::vector<std::string> argv = {"git", "-c", "core.quotepath=off", "-c", "core.autocrlf=false"};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_process(argv, root(), env, input);
  }

  const ProcessResult &must(const ProcessResult &r, std::string_view what) const {
    if (r.status != 0) {
      fail(ErrorCode::StoreUnavailable, "git " + std::string(what) + " failed: " + std::string(text::trim(r.err)));
    }
    return r;
  }

  void require_repo() const {
    require_root();
    std::error_code ec;
    if (!fs::exists(root() / ".git", ec)) {
      fail(ErrorCode::StoreUnavailable, root().string() + " is not a git working tree");
    }
  }

  // Newest first; `limit` 0 means the whole history.
  std::vector<CommitRef> log_range(const std::string &tip, int limit) const {
    std::vector<std::string> args = {"log", "--no-renames", "--name-only",
                                     "--format=%x1e%H%x1f%P%x1f%ct%x1f%B%x1f"};
    if (limit > 0) args.push_back("-" + std::to_string(limit));
    args.push_back(tip);
    args.push_back("--");
    const auto r = must(git(args), "log");
    std::vector<CommitRef> out;
    for (const auto &record : text::split(r.out, '\x1e')) {
      if (text::trim(record).empty()) continue;
      const auto fields = text::split(record, '\x1f');
      if (fields.size() < 5) fail(ErrorCode::StoreUnavailable, "unexpected git log output");
      CommitRef c;
      c.id = fields[0];
      const std::string_view parents = text::trim(fields[1]);
      if (!parents.empty()) c.parent = std::string(parents.substr(0, parents.find(' ')));
      const auto seconds = std::stoll(fields[2]);
      c.timestamp = text::iso8601_utc(std::chrono::system_clock::time_point(std::chrono::seconds(seconds)));
      c.message = std::string(text::trim(fields[3]));
      for (const auto &f : text::split(fields[4], '\n')) {
        const std::string_view v = text::trim(f);
        if (!v.empty()) c.files.emplace_back(v);
      }
      out.push_back(std::move(c));
    }
    return out;
  }
};

}  // namespace

std::unique_ptr<ReportStore> open_store(StoreKind kind, const fs::path &root) {
  if (kind == StoreKind::Journal) return std::make_unique<JournalStore>(root);
  return std::make_unique<GitStore>(root);
}

std::unique_ptr<ReportStore> init_store(StoreKind kind, const fs::path &root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) fail(ErrorCode::StoreUnavailable, "cannot create report store " + root.string() + ": " + ec.message());
  if (kind == StoreKind::Git && !fs::exists(root / ".git", ec)) {
    const auto r = run_process({"git", "init", "-q", "-b", "main"}, root, git_env());
    if (r.status != 0) {
      fail(ErrorCode::StoreUnavailable, "git init failed in " + root.string() + ": " + std::string(text::trim(r.err)));
    }
  }
  return open_store(kind, root);
}

}  // namespace ctiforge
