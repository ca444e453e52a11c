#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nasbo/bo.hpp"

namespace nasbo {

inline constexpr int kLogFormatVersion = 1;
inline constexpr std::string_view kEngineVersion = "0.3.0";

struct RunEvent {
  std::uint64_t seq = 0;
  std::string kind;
  nlohmann::json payload;
  /// FNV-1a 64 over the previous chain value and this event's content.
  std::uint64_t chain = 0;
};

std::uint64_t chain_checksum(std::uint64_t previous, std::uint64_t seq, std::string_view kind,
                             const nlohmann::json& payload);

struct LogContents {
  std::vector<RunEvent> events;
  /// Bytes covered by complete, valid events.
  std::uintmax_t valid_bytes = 0;
  /// True when a torn final line was ignored.
  bool truncated_tail = false;
};

/// Parses and validates an event log. A final line that is incomplete or
/// unparseable is treated as a torn write and dropped; any other malformed
/// line, a sequence gap or a checksum mismatch throws ParseError.
LogContents read_event_log(const std::filesystem::path& path);

/// Exclusive advisory lock on `<dir>/lock`, held for the object's lifetime.
class RunLock {
 public:
  /// Throws DataError when another process holds the lock.
  explicit RunLock(const std::filesystem::path& dir);
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;
  ~RunLock();

 private:
  int fd_ = -1;
};

/// Append-only NDJSON writer. Each event is flushed to disk before emit()
/// returns.
class EventLogWriter final : public EventSink {
 public:
  /// Starts a new log; throws DataError if the file already has content.
  static EventLogWriter create(const std::filesystem::path& path);
  /// Continues a validated log, truncating a torn tail first.
  static EventLogWriter append(const std::filesystem::path& path, const LogContents& contents);

  EventLogWriter(EventLogWriter&& other) noexcept;
  EventLogWriter& operator=(EventLogWriter&&) = delete;
  ~EventLogWriter() override;

  void emit(std::string_view kind, const nlohmann::json& payload) override;
  std::uint64_t next_seq() const { return next_seq_; }

 private:
  EventLogWriter(int fd, std::uint64_t next_seq, std::uint64_t chain);

  int fd_;
  std::uint64_t next_seq_;
  std::uint64_t chain_;
};

/// Everything needed to rebuild a run from its header event.
struct RunHeader {
  int format_version = kLogFormatVersion;
  std::string engine_version{kEngineVersion};
  std::string space_document;
  nlohmann::json config;
  nlohmann::json oracle;
};

nlohmann::json header_to_json(const RunHeader& header);
/// Throws DataError with upgrade guidance on a format version mismatch.
RunHeader header_from_json(const nlohmann::json& j);

/// Feeds the logged evaluations of `events` into `optimizer` in order and
/// restores the last logged hyperparameters as the fit warm start.
/// Returns the number of evaluation events consumed.
std::size_t replay_events(const std::vector<RunEvent>& events, BayesOptimizer& optimizer);

}  // namespace nasbo
