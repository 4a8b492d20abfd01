#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sarvr/common.hpp"
#include "sarvr/sensors.hpp"

namespace sarvr::recorder {

namespace fs = std::filesystem;

// --- log records -------------------------------------------------------------------

struct LogRecord {
  /// Session monotonic ms.
  Millis t = 0;
  std::string component;
  std::string event;
  nlohmann::json payload = nlohmann::json::object();

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

/// One line, no trailing newline: "PT<s>.<mmm>S<TAB>component<TAB>event<TAB><json>".
/// Tabs, newlines and backslashes in component and event are escaped.
std::string format_line(const LogRecord& r);
/// Throws ParseError.
LogRecord parse_line(std::string_view line);

std::vector<LogRecord> read_log(const fs::path& path);

/// Background writer owning one log file. Producers block when the bounded
/// queue is full; lines reach the OS at least once per flush interval.
class LogWriter {
 public:
  /// Throws IoFailure when the file cannot be opened.
  explicit LogWriter(const fs::path& path, std::size_t capacity = 4096,
                     std::chrono::milliseconds flush_interval = std::chrono::milliseconds(1000));
  ~LogWriter();
  LogWriter(const LogWriter&) = delete;
  LogWriter& operator=(const LogWriter&) = delete;

  /// Throws IoFailure after close() or a failed write, ClockRegression if t
  /// goes backwards.
  void append(LogRecord record);
  /// Blocks until every appended record is written and flushed.
  void flush();
  void close();

  const fs::path& path() const { return path_; }
  std::size_t written() const;

 private:
  void run();

  fs::path path_;
  std::size_t capacity_;
  std::chrono::milliseconds flush_interval_;
  std::FILE* file_ = nullptr;

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable space_;
  std::condition_variable drained_;
  std::deque<std::string> queue_;
  std::optional<Millis> last_t_;
  std::size_t written_ = 0;
  std::size_t in_flight_ = 0;
  bool closed_ = false;
  bool failed_ = false;
  std::thread thread_;
};

// --- timeline merge ----------------------------------------------------------------

struct TimelineSource {
  std::string name;
  /// Lower wins ties.
  int priority = 0;
  std::vector<LogRecord> records;
};

struct MergedRecord {
  std::string source;
  LogRecord record;
};

/// K-way merge; equal timestamps resolve by (priority, source order, position).
/// Throws UnsortedSource naming the offending source.
std::vector<MergedRecord> merge_timeline(const std::vector<TimelineSource>& sources);

// --- archive -----------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

struct ZipEntry {
  std::string name;
  std::string data;
};

/// Store-only zip with fixed entry timestamps so identical inputs give identical bytes.
std::string build_zip(const std::vector<ZipEntry>& entries);
/// Reads a zip produced by build_zip (stored entries only). Throws ParseError, BadCrc.
std::vector<ZipEntry> read_zip(std::string_view bytes);

/// A file the session opened, under its name in the archive.
struct StreamFile {
  /// Stream label, e.g. "performance", "kinect", "EDA".
  std::string stream;
  /// Path relative to the session directory; also the archive entry name.
  std::string path;

  friend bool operator==(const StreamFile&, const StreamFile&) = default;
};

struct PackageRequest {
  std::string facility_id;
  std::string participant_1;
  std::string participant_2;
  /// Wall-clock anchor captured at session start; names the archive (UTC date).
  std::int64_t wall_clock_epoch_ms = 0;
  fs::path session_dir;
  std::vector<StreamFile> streams;
  fs::path out_dir;
  /// Recorded in the manifest only; excluded from reproducibility checks.
  std::int64_t created_at_ms = 0;
};

struct PackageResult {
  fs::path archive;
  nlohmann::json manifest;
};

/// "YYYY-MM-DD" in UTC.
std::string utc_date(std::int64_t epoch_ms);
/// "{facility}_{pid1}_{pid2}_{YYYY-MM-DD}".
std::string archive_name(const std::string& facility_id, const std::string& pid1, const std::string& pid2,
                         std::int64_t epoch_ms);

/// Throws MissingStream(stream) and IoFailure.
PackageResult package_session(const PackageRequest& request);

struct Verification {
  bool ok = false;
  std::vector<std::string> problems;
  nlohmann::json manifest;
  std::vector<std::string> entries;
};

/// Recomputes every manifest checksum from the archive contents.
Verification verify_archive(const fs::path& archive);

// --- upload ------------------------------------------------------------------------

struct NoUpload {};
struct LocalDir {
  fs::path path;
};
struct HttpPut {
  /// "http://host:port/prefix"; the archive file name is appended.
  std::string url;
  /// Bearer credential; falls back to SARVR_UPLOAD_TOKEN when empty.
  std::string token;
  int attempts = 3;
  std::chrono::milliseconds backoff{200};
};

using UploadTarget = std::variant<NoUpload, LocalDir, HttpPut>;

struct Receipt {
  std::string target;
  std::string location;
  std::string sha256;
  int attempts = 0;
  bool local_only = false;
};

inline constexpr const char* kUploadTokenEnv = "SARVR_UPLOAD_TOKEN";

/// Throws UploadFailed(attempts) and ChecksumMismatch.
Receipt upload(const fs::path& archive, const UploadTarget& target);

// --- session files -----------------------------------------------------------------

/// Owns every stream file of one session directory and remembers which were opened.
class SessionRecorder {
 public:
  /// Creates the directory and opens the performance log.
  explicit SessionRecorder(fs::path dir);
  ~SessionRecorder();

  const fs::path& dir() const { return dir_; }
  LogWriter& performance() { return *performance_; }
  /// Opened on first use.
  LogWriter& wand(WandColor color);

  void kinect_frame(const sensors::KinectFrame& frame);
  /// Appends samples to <side>/<CHANNEL>.csv, writing the two header rows first.
  void e4_samples(Side side, sensors::E4Channel channel, double start_epoch,
                  const std::vector<std::vector<double>>& rows);

  void close();
  bool closed() const { return closed_; }
  std::vector<StreamFile> streams() const;

 private:
  std::ofstream& open_text(const std::string& stream, const std::string& rel);

  fs::path dir_;
  std::unique_ptr<LogWriter> performance_;
  std::map<WandColor, std::unique_ptr<LogWriter>> wands_;
  std::map<std::string, std::ofstream> texts_;
  std::vector<StreamFile> streams_;
  bool kinect_open_ = false;
  bool kinect_any_ = false;
  bool closed_ = false;
  std::mutex mu_;
};

/// e.g. "e4_left/EDA.csv".
std::string e4_path(Side side, sensors::E4Channel channel);

}  // namespace sarvr::recorder
