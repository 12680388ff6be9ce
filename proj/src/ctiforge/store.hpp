#pragma once

// Versioned report repository. put() follows a fetch-latest-commit, build,
// compare-and-swap protocol and retries when another writer got in first.

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ctiforge {

struct CommitRef {
  std::string id;
  std::optional<std::string> parent;
  std::vector<std::string> files;
  std::string message;
  std::string timestamp;  // UTC, YYYY-MM-DDTHH:MM:SSZ

  bool touches(std::string_view name) const;
  bool operator==(const CommitRef &) const = default;
};

enum class StoreKind { Journal, Git };
std::string_view store_kind_name(StoreKind k);
// "journal" or "git"; throws InvalidArgument.
StoreKind parse_store_kind(std::string_view s);

class ReportStore {
 public:
  virtual ~ReportStore() = default;

  virtual StoreKind kind() const = 0;
  const std::filesystem::path &root() const { return root_; }

  // All operations throw StoreUnavailable when the store directory is gone
  // or unreadable.
  virtual bool exists(std::string_view name) = 0;
  virtual std::optional<CommitRef> latest_commit() = 0;
  // Throws Conflict once the retry budget is spent.
  CommitRef put(std::string_view name, std::string_view content, std::string_view message);
  // Commits after `since_id` (all commits when absent), oldest first. Throws
  // UnknownRef for an id that is not in the history.
  virtual std::vector<CommitRef> list_commits_since(const std::optional<std::string> &since_id) = 0;
  // Content of `name` at the latest commit; throws UnknownRef if absent.
  virtual std::string read(std::string_view name) = 0;
  // Where the checked-out copy of `name` lives.
  std::filesystem::path path_of(std::string_view name) const { return files_dir() / std::string(name); }

  // Called once per put attempt after the parent has been read and before
  // the compare-and-swap. Test seam for simulating a concurrent writer.
  void set_before_write_hook(std::function<void()> hook) { hook_ = std::move(hook); }

  static constexpr int kPutAttempts = 4;  // first try plus three retries

 protected:
  explicit ReportStore(std::filesystem::path root) : root_(std::move(root)) {}

  void require_root() const;
  virtual std::filesystem::path files_dir() const = 0;
  virtual std::optional<std::string> head_id() = 0;
  // Writes a commit with `parent` as the expected head; nullopt when the
  // head moved in the meantime.
  virtual std::optional<CommitRef> try_commit(const std::optional<std::string> &parent, std::string_view name,
                                              std::string_view content, std::string_view message) = 0;

 private:
  std::filesystem::path root_;
  std::function<void()> hook_;
  std::mutex put_mutex_;
};

// Opens an existing store directory. Missing directories surface as
// StoreUnavailable on first use.
std::unique_ptr<ReportStore> open_store(StoreKind kind, const std::filesystem::path &root);
// Creates the directory (and repository, for Git) when needed, then opens it.
std::unique_ptr<ReportStore> init_store(StoreKind kind, const std::filesystem::path &root);

}  // namespace ctiforge
