#include "nasbo/event_log.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nasbo/errors.hpp"

namespace nasbo {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view bytes) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string encode_line(const RunEvent& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["kind"] = e.kind;
  j["payload"] = e.payload;
  j["chain"] = hex64(e.chain);
  return j.dump() + "\n";
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw DataError(std::string("event log write failed: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

std::uint64_t chain_checksum(std::uint64_t previous, std::uint64_t seq, std::string_view kind,
                             const nlohmann::json& payload) {
  std::uint64_t h = fnv1a(kFnvOffset, hex64(previous));
  h = fnv1a(h, std::to_string(seq));
  h = fnv1a(h, "\n");
  h = fnv1a(h, kind);
  h = fnv1a(h, "\n");
  return fnv1a(h, payload.dump());
}

LogContents read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open event log " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::string source = path.string();

  LogContents out;
  std::uint64_t chain = kFnvOffset;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    const bool last = nl == std::string::npos || nl + 1 == text.size();
    if (nl == std::string::npos) {
      out.truncated_tail = true;
      break;
    }
    const std::string_view line(text.data() + pos, nl - pos);
    RunEvent e;
    try {
      const auto j = nlohmann::json::parse(line);
      e.seq = j.at("seq").get<std::uint64_t>();
      e.kind = j.at("kind").get<std::string>();
      e.payload = j.at("payload");
      const auto chain_text = j.at("chain").get<std::string>();
      std::size_t used = 0;
      e.chain = std::stoull(chain_text, &used, 16);
      if (used != chain_text.size() || chain_text.size() != 16) throw DataError("bad chain field");
    } catch (const std::exception& ex) {
      if (last) {
        out.truncated_tail = true;
        break;
      }
      throw ParseError(source, line_no, std::string("malformed event: ") + ex.what());
    }
    if (e.seq != out.events.size()) {
      throw ParseError(source, line_no,
                       "sequence gap: expected " + std::to_string(out.events.size()) + ", found " + std::to_string(e.seq));
    }
    const std::uint64_t expected = chain_checksum(chain, e.seq, e.kind, e.payload);
    if (expected != e.chain) {
      throw ParseError(source, line_no, "checksum chain broken at event " + std::to_string(e.seq) +
                                            "; the log was modified or corrupted");
    }
    chain = e.chain;
    out.events.push_back(std::move(e));
    pos = nl + 1;
    out.valid_bytes = pos;
  }
  return out;
}

// ---------------------------------------------------------------- lock

RunLock::RunLock(const std::filesystem::path& dir) {
  const auto path = dir / "lock";
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw DataError("cannot create lock file " + path.string() + ": " + std::strerror(errno));
  if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    ::close(fd_);
    fd_ = -1;
    throw DataError("run directory " + dir.string() + " is in use by another process");
  }
}

RunLock::~RunLock() {
  if (fd_ >= 0) {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
}

// ---------------------------------------------------------------- writer

EventLogWriter::EventLogWriter(int fd, std::uint64_t next_seq, std::uint64_t chain)
    : fd_(fd), next_seq_(next_seq), chain_(chain) {}

EventLogWriter::EventLogWriter(EventLogWriter&& other) noexcept
    : fd_(other.fd_), next_seq_(other.next_seq_), chain_(other.chain_) {
  other.fd_ = -1;
}

EventLogWriter::~EventLogWriter() {
  if (fd_ >= 0) ::close(fd_);
}

EventLogWriter EventLogWriter::create(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    if (errno == EEXIST) {
      throw DataError("event log " + path.string() + " already exists; use `search resume` or a fresh --out");
    }
    throw DataError("cannot create event log " + path.string() + ": " + std::strerror(errno));
  }
  return EventLogWriter(fd, 0, kFnvOffset);
}

EventLogWriter EventLogWriter::append(const std::filesystem::path& path, const LogContents& contents) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
  if (fd < 0) throw DataError("cannot open event log " + path.string() + ": " + std::strerror(errno));
  if (::ftruncate(fd, static_cast<off_t>(contents.valid_bytes)) != 0) {
    ::close(fd);
    throw DataError("cannot truncate torn tail of " + path.string());
  }
  const std::uint64_t chain = contents.events.empty() ? kFnvOffset : contents.events.back().chain;
  return EventLogWriter(fd, contents.events.size(), chain);
}

void EventLogWriter::emit(std::string_view kind, const nlohmann::json& payload) {
  RunEvent e{next_seq_, std::string(kind), payload, 0};
  e.chain = chain_checksum(chain_, e.seq, e.kind, e.payload);
  write_all(fd_, encode_line(e));
  ::fsync(fd_);
  chain_ = e.chain;
  ++next_seq_;
}

// ---------------------------------------------------------------- header

nlohmann::json header_to_json(const RunHeader& h) {
  return {{"format_version", h.format_version},
          {"engine_version", h.engine_version},
          {"space", h.space_document},
          {"config", h.config},
          {"oracle", h.oracle}};
}

RunHeader header_from_json(const nlohmann::json& j) {
  RunHeader h;
  h.format_version = j.at("format_version").get<int>();
  h.engine_version = j.value("engine_version", "unknown");
  if (h.format_version != kLogFormatVersion) {
    throw DataError("event log format version " + std::to_string(h.format_version) + " (engine " + h.engine_version +
                    ") does not match this binary's version " + std::to_string(kLogFormatVersion) +
                    " (engine " + std::string(kEngineVersion) + "); use the engine version that wrote the log");
  }
  h.space_document = j.at("space").get<std::string>();
  h.config = j.at("config");
  h.oracle = j.at("oracle");
  return h;
}

// ---------------------------------------------------------------- replay

std::size_t replay_events(const std::vector<RunEvent>& events, BayesOptimizer& optimizer) {
  const auto& space = optimizer.space();
  std::size_t consumed = 0;
  std::optional<KernelParams> warm1, warm2;
  for (const auto& e : events) {
    if (e.kind == "refit") {
      warm1 = kernel_from_json(e.payload.at("gp1"));
      warm2 = kernel_from_json(e.payload.at("gp2"));
      continue;
    }
    if (e.kind == "run_end") {
      optimizer.set_stop_reason(e.payload.value("reason", "budget"));
      continue;
    }
    if (e.kind != "init_eval" && e.kind != "bo_eval") continue;
    const bool init = e.kind == "init_eval";
    try {
      if (e.payload.contains("record")) {
        const EvaluationRecord record = record_from_json(e.payload.at("record"));
        const DecisionVector z = decode_arch(record.request.arch, space);
        if (z != record.request.decision) throw DataError("recorded arch and decision disagree");
        init ? optimizer.absorb_init(&record, z) : optimizer.absorb_step(&record, z);
      } else {
        const auto d = e.payload.at("decision").get<std::array<std::uint32_t, kStageCount>>();
        const DecisionVector z{d};
        if (!is_valid(z, space)) throw DataError("recorded decision is outside the space");
        init ? optimizer.absorb_init(nullptr, z) : optimizer.absorb_step(nullptr, z);
      }
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("event " + std::to_string(e.seq) + ": " + ex.what());
    }
    ++consumed;
  }
  optimizer.set_warm_start(warm1, warm2);
  return consumed;
}

}  // namespace nasbo
