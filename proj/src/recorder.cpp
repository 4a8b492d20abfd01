#include "sarvr/recorder.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <queue>
#include <sstream>

#include <httplib.h>

namespace sarvr::recorder {

// --- log records -------------------------------------------------------------------

namespace {

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out += s[i];
      continue;
    }
    if (++i == s.size()) throw Error(ErrorCode::ParseError, "dangling escape");
    switch (s[i]) {
      case '\\': out += '\\'; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      case 'r': out += '\r'; break;
      default: throw Error(ErrorCode::ParseError, std::string("unknown escape \\") + s[i]);
    }
  }
  return out;
}

std::string format_offset(Millis t) {
  if (t < 0) throw Error(ErrorCode::OutOfRange, "negative log time " + std::to_string(t));
  char buf[48];
  std::snprintf(buf, sizeof(buf), "PT%lld.%03lldS", static_cast<long long>(t / 1000), static_cast<long long>(t % 1000));
  return buf;
}

Millis parse_offset(std::string_view s) {
  if (s.size() < 7 || s.substr(0, 2) != "PT" || s.back() != 'S') throw Error(ErrorCode::ParseError, "bad timestamp");
  s = s.substr(2, s.size() - 3);
  const auto dot = s.find('.');
  if (dot == std::string_view::npos || s.size() - dot - 1 != 3) throw Error(ErrorCode::ParseError, "bad timestamp");
  auto secs = parse_int(s.substr(0, dot));
  auto ms = parse_int(s.substr(dot + 1));
  if (!secs || !ms || *secs < 0 || *ms < 0) throw Error(ErrorCode::ParseError, "bad timestamp");
  return *secs * 1000 + *ms;
}

}  // namespace

std::string format_line(const LogRecord& r) {
  std::string line = format_offset(r.t);
  line += '\t';
  line += escape_field(r.component);
  line += '\t';
  line += escape_field(r.event);
  line += '\t';
  line += r.payload.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  return line;
}

LogRecord parse_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::array<std::string_view, 3> head;
  for (auto& field : head) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw Error(ErrorCode::ParseError, "expected 4 tab-separated fields");
    field = line.substr(0, tab);
    line.remove_prefix(tab + 1);
  }
  LogRecord r;
  r.t = parse_offset(head[0]);
  r.component = unescape_field(head[1]);
  r.event = unescape_field(head[2]);
  r.payload = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (r.payload.is_discarded()) throw Error(ErrorCode::ParseError, "payload is not JSON");
  return r;
}

std::vector<LogRecord> read_log(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::vector<LogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(parse_line(line));
  }
  return out;
}

LogWriter::LogWriter(const fs::path& path, std::size_t capacity, std::chrono::milliseconds flush_interval)
    : path_(path), capacity_(std::max<std::size_t>(1, capacity)), flush_interval_(flush_interval) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  thread_ = std::thread([this] { run(); });
}

LogWriter::~LogWriter() { close(); }

void LogWriter::append(LogRecord record) {
  std::string line = format_line(record);
  line += '\n';
  std::unique_lock lock(mu_);
  space_.wait(lock, [&] { return queue_.size() < capacity_ || closed_ || failed_; });
  if (closed_) throw Error(ErrorCode::IoFailure, path_.filename().string() + " is closed");
  if (failed_) throw Error(ErrorCode::IoFailure, "write to " + path_.filename().string() + " failed");
  if (last_t_ && record.t < *last_t_) {
    throw Error(ErrorCode::ClockRegression, std::to_string(record.t) + " after " + std::to_string(*last_t_));
  }
  last_t_ = record.t;
  queue_.push_back(std::move(line));
  cv_.notify_one();
}

void LogWriter::flush() {
  std::unique_lock lock(mu_);
  drained_.wait(lock, [&] { return (queue_.empty() && in_flight_ == 0) || failed_ || !thread_.joinable(); });
  if (failed_) throw Error(ErrorCode::IoFailure, "write to " + path_.filename().string() + " failed");
}

void LogWriter::close() {
  {
    std::lock_guard lock(mu_);
    if (closed_ && !thread_.joinable()) return;
    closed_ = true;
  }
  cv_.notify_all();
  space_.notify_all();
  if (thread_.joinable()) thread_.join();
  if (file_) {
    std::fclose(file_);
    file_ = nullptr;
  }
  drained_.notify_all();
}

std::size_t LogWriter::written() const {
  std::lock_guard lock(mu_);
  return written_;
}

void LogWriter::run() {
  std::unique_lock lock(mu_);
  while (true) {
    cv_.wait_for(lock, flush_interval_, [&] { return !queue_.empty() || closed_; });
    std::deque<std::string> batch;
    batch.swap(queue_);
    in_flight_ = batch.size();
    const bool stop = closed_;
    space_.notify_all();
    lock.unlock();

    bool ok = true;
    for (const auto& line : batch) {
      ok = ok && std::fwrite(line.data(), 1, line.size(), file_) == line.size();
    }
    ok = ok && std::fflush(file_) == 0;

    lock.lock();
    written_ += batch.size();
    in_flight_ = 0;
    if (!ok) failed_ = true;
    drained_.notify_all();
    space_.notify_all();
    if ((stop && queue_.empty()) || failed_) return;
  }
}

// --- timeline merge ----------------------------------------------------------------

std::vector<MergedRecord> merge_timeline(const std::vector<TimelineSource>& sources) {
  std::size_t total = 0;
  for (const auto& s : sources) {
    for (std::size_t i = 1; i < s.records.size(); ++i) {
      if (s.records[i].t < s.records[i - 1].t) {
        throw Error(ErrorCode::UnsortedSource, s.name);
      }
    }
    total += s.records.size();
  }

  using Key = std::tuple<Millis, int, std::size_t, std::size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> heap;
  for (std::size_t k = 0; k < sources.size(); ++k) {
    if (!sources[k].records.empty()) heap.emplace(sources[k].records[0].t, sources[k].priority, k, 0);
  }
  std::vector<MergedRecord> out;
  out.reserve(total);
  while (!heap.empty()) {
    auto [t, prio, k, i] = heap.top();
    heap.pop();
    out.push_back({sources[k].name, sources[k].records[i]});
    if (i + 1 < sources[k].records.size()) heap.emplace(sources[k].records[i + 1].t, prio, k, i + 1);
  }
  return out;
}

// --- files and checksums -----------------------------------------------------------

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
}

std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

// --- zip ---------------------------------------------------------------------------

namespace {

constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01

void le16(std::string& out, std::uint16_t v) {
  out += static_cast<char>(v & 0xFF);
  out += static_cast<char>(v >> 8);
}

void le32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint16_t rd16(std::string_view b, std::size_t at) {
  if (at + 2 > b.size()) throw Error(ErrorCode::ParseError, "truncated zip");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) | (static_cast<unsigned char>(b[at + 1]) << 8));
}

std::uint32_t rd32(std::string_view b, std::size_t at) {
  return std::uint32_t{rd16(b, at)} | (std::uint32_t{rd16(b, at + 2)} << 16);
}

std::uint32_t crc32_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

}  // namespace

std::string build_zip(const std::vector<ZipEntry>& entries) {
  std::string out;
  std::string central;
  for (const auto& e : entries) {
    const auto offset = static_cast<std::uint32_t>(out.size());
    const auto crc = crc32_of(e.data);
    const auto size = static_cast<std::uint32_t>(e.data.size());
    const auto name_len = static_cast<std::uint16_t>(e.name.size());

    le32(out, 0x04034b50);
    le16(out, 20);
    le16(out, 0);
    le16(out, 0);
    le16(out, 0);
    le16(out, kDosDate);
    le32(out, crc);
    le32(out, size);
    le32(out, size);
    le16(out, name_len);
    le16(out, 0);
    out += e.name;
    out += e.data;

    le32(central, 0x02014b50);
    le16(central, 20);
    le16(central, 20);
    le16(central, 0);
    le16(central, 0);
    le16(central, 0);
    le16(central, kDosDate);
    le32(central, crc);
    le32(central, size);
    le32(central, size);
    le16(central, name_len);
    le16(central, 0);
    le16(central, 0);
    le16(central, 0);
    le16(central, 0);
    le32(central, 0);
    le32(central, offset);
    central += e.name;
  }
  const auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  le32(out, 0x06054b50);
  le16(out, 0);
  le16(out, 0);
  le16(out, static_cast<std::uint16_t>(entries.size()));
  le16(out, static_cast<std::uint16_t>(entries.size()));
  le32(out, static_cast<std::uint32_t>(central.size()));
  le32(out, cd_offset);
  le16(out, 0);
  return out;
}

std::vector<ZipEntry> read_zip(std::string_view b) {
  if (b.size() < 22) throw Error(ErrorCode::ParseError, "not a zip");
  std::size_t eocd = b.size() - 22;
  while (rd32(b, eocd) != 0x06054b50) {
    if (eocd == 0) throw Error(ErrorCode::ParseError, "no end of central directory");
    --eocd;
  }
  const std::uint16_t count = rd16(b, eocd + 10);
  std::size_t at = rd32(b, eocd + 16);
  std::vector<ZipEntry> out;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (rd32(b, at) != 0x02014b50) throw Error(ErrorCode::ParseError, "bad central directory entry");
    if (rd16(b, at + 10) != 0) throw Error(ErrorCode::ParseError, "compressed entries are not supported");
    const std::uint32_t crc = rd32(b, at + 16);
    const std::uint32_t size = rd32(b, at + 20);
    const std::uint16_t name_len = rd16(b, at + 28);
    const std::uint16_t extra = rd16(b, at + 30);
    const std::uint16_t comment = rd16(b, at + 32);
    const std::uint32_t local = rd32(b, at + 42);
    if (at + 46 + name_len > b.size()) throw Error(ErrorCode::ParseError, "truncated zip");
    ZipEntry e;
    e.name = std::string(b.substr(at + 46, name_len));
    at += 46 + name_len + extra + comment;

    if (rd32(b, local) != 0x04034b50) throw Error(ErrorCode::ParseError, "bad local header for " + e.name);
    const std::size_t data_at = local + 30 + rd16(b, local + 26) + rd16(b, local + 28);
    if (data_at + size > b.size()) throw Error(ErrorCode::ParseError, "truncated entry " + e.name);
    e.data = std::string(b.substr(data_at, size));
    if (crc32_of(e.data) != crc) throw Error(ErrorCode::BadCrc, e.name);
    out.push_back(std::move(e));
  }
  return out;
}

// --- packaging ---------------------------------------------------------------------

std::string utc_date(std::int64_t epoch_ms) {
  const std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000 - (epoch_ms % 1000 < 0 ? 1 : 0));
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[16];
  std::strftime(buf, sizeof(buf), "%Y-%m-%d", &tm);
  return buf;
}

std::string archive_name(const std::string& facility_id, const std::string& pid1, const std::string& pid2,
                         std::int64_t epoch_ms) {
  return facility_id + "_" + pid1 + "_" + pid2 + "_" + utc_date(epoch_ms);
}

PackageResult package_session(const PackageRequest& req) {
  const std::string name = archive_name(req.facility_id, req.participant_1, req.participant_2, req.wall_clock_epoch_ms);

  std::vector<StreamFile> streams = req.streams;
  std::sort(streams.begin(), streams.end(), [](const StreamFile& a, const StreamFile& b) { return a.path < b.path; });

  std::vector<ZipEntry> entries;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& s : streams) {
    const fs::path p = req.session_dir / s.path;
    if (!fs::is_regular_file(p)) throw Error(ErrorCode::MissingStream, s.stream);
    ZipEntry e{s.path, read_file(p)};
    files.push_back({{"path", s.path}, {"stream", s.stream}, {"size", e.data.size()}, {"sha256", sha256_hex(e.data)}});
    entries.push_back(std::move(e));
  }

  nlohmann::json manifest{{"archive", name},
                          {"facility_id", req.facility_id},
                          {"participants", {req.participant_1, req.participant_2}},
                          {"date", utc_date(req.wall_clock_epoch_ms)},
                          {"wall_clock_epoch_ms", req.wall_clock_epoch_ms},
                          {"created_at_ms", req.created_at_ms},
                          {"files", files}};
  entries.push_back({"manifest.json", manifest.dump(2)});

  fs::create_directories(req.out_dir);
  const fs::path archive = req.out_dir / (name + ".zip");
  write_file(archive, build_zip(entries));
  return {archive, manifest};
}

Verification verify_archive(const fs::path& archive) {
  Verification v;
  std::vector<ZipEntry> entries;
  try {
    entries = read_zip(read_file(archive));
  } catch (const Error& e) {
    v.problems.push_back(e.what());
    return v;
  }
  std::map<std::string, const ZipEntry*> by_name;
  for (const auto& e : entries) {
    v.entries.push_back(e.name);
    by_name[e.name] = &e;
  }
  auto m = by_name.find("manifest.json");
  if (m == by_name.end()) {
    v.problems.push_back("manifest.json missing");
    return v;
  }
  v.manifest = nlohmann::json::parse(m->second->data, nullptr, false);
  if (!v.manifest.is_object() || !v.manifest.contains("files")) {
    v.problems.push_back("manifest.json unreadable");
    return v;
  }
  std::size_t listed = 0;
  for (const auto& f : v.manifest["files"]) {
    ++listed;
    const std::string path = f.value("path", "");
    auto it = by_name.find(path);
    if (it == by_name.end()) {
      v.problems.push_back(path + ": listed but not archived");
      continue;
    }
    if (it->second->data.size() != f.value("size", std::size_t{0})) v.problems.push_back(path + ": size differs");
    if (sha256_hex(it->second->data) != f.value("sha256", "")) v.problems.push_back(path + ": checksum differs");
  }
  if (listed + 1 != entries.size()) v.problems.push_back("archive holds files the manifest does not list");
  v.ok = v.problems.empty();
  return v;
}

// --- upload ------------------------------------------------------------------------

namespace {

Receipt upload_local(const fs::path& archive, const LocalDir& target) {
  fs::create_directories(target.path);
  const fs::path dest = target.path / archive.filename();
  fs::copy_file(archive, dest, fs::copy_options::overwrite_existing);
  const std::string want = sha256_file(archive);
  const std::string got = sha256_file(dest);
  if (want != got) throw Error(ErrorCode::ChecksumMismatch, dest.string());
  return {"LocalDir", dest.string(), want, 1, false};
}

Receipt upload_http(const fs::path& archive, const HttpPut& target) {
  constexpr std::string_view kScheme = "http://";
  if (target.url.rfind(kScheme, 0) != 0) throw Error(ErrorCode::UploadFailed, "only http:// targets: " + target.url);
  const auto slash = target.url.find('/', kScheme.size());
  const std::string base = slash == std::string::npos ? target.url : target.url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : target.url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  const std::string path = prefix + "/" + archive.filename().string();

  std::string token = target.token;
  if (token.empty()) {
    if (const char* env = std::getenv(kUploadTokenEnv)) token = env;
  }

  const std::string body = read_file(archive);
  const std::string sha = sha256_hex(body);
  const int attempts = std::max(1, target.attempts);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client cli(base);
    cli.set_connection_timeout(2, 0);
    cli.set_read_timeout(10, 0);
    if (!token.empty()) cli.set_bearer_token_auth(token);
    httplib::Headers headers{{"X-Content-SHA256", sha}};
    auto res = cli.Put(path, headers, body, "application/zip");
    if (res && res->status / 100 == 2) {
      auto reply = nlohmann::json::parse(res->body, nullptr, false);
      if (reply.is_object() && reply.contains("sha256") && reply["sha256"] != sha) {
        throw Error(ErrorCode::ChecksumMismatch, "server stored " + reply["sha256"].dump());
      }
      return {"HttpPut", base + path, sha, attempt, false};
    }
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (attempt < attempts) std::this_thread::sleep_for(target.backoff * (1 << (attempt - 1)));
  }
  throw Error(ErrorCode::UploadFailed, std::to_string(attempts) + " attempts, last: " + last_error);
}

}  // namespace

Receipt upload(const fs::path& archive, const UploadTarget& target) {
  if (!fs::is_regular_file(archive)) throw Error(ErrorCode::IoFailure, "no archive at " + archive.string());
  return std::visit(
      [&](const auto& t) -> Receipt {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, NoUpload>) {
          return {"None", archive.string(), sha256_file(archive), 0, true};
        } else if constexpr (std::is_same_v<T, LocalDir>) {
          return upload_local(archive, t);
        } else {
          return upload_http(archive, t);
        }
      },
      target);
}

// --- session files -----------------------------------------------------------------

std::string e4_path(Side side, sensors::E4Channel channel) {
  return std::string(side == Side::Left ? "e4_left/" : "e4_right/") + std::string(sensors::to_string(channel)) + ".csv";
}

SessionRecorder::SessionRecorder(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  performance_ = std::make_unique<LogWriter>(dir_ / "performance.log");
  streams_.push_back({"performance", "performance.log"});
}

SessionRecorder::~SessionRecorder() { close(); }

LogWriter& SessionRecorder::wand(WandColor color) {
  std::lock_guard lock(mu_);
  auto& w = wands_[color];
  if (!w) {
    const std::string stream = "wand_" + to_lower(to_string(color));
    w = std::make_unique<LogWriter>(dir_ / (stream + ".log"));
    streams_.push_back({stream, stream + ".log"});
  }
  return *w;
}

std::ofstream& SessionRecorder::open_text(const std::string& stream, const std::string& rel) {
  auto it = texts_.find(rel);
  if (it != texts_.end()) return it->second;
  fs::create_directories((dir_ / rel).parent_path());
  auto& out = texts_[rel];
  out.open(dir_ / rel, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + rel);
  streams_.push_back({stream, rel});
  return out;
}

void SessionRecorder::kinect_frame(const sensors::KinectFrame& frame) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(ErrorCode::IoFailure, "recorder is closed");
  auto& out = open_text("kinect", "kinect.json");
  out << (kinect_any_ ? ",\n" : "{\n") << '"' << frame.t << "\":" << sensors::frame_entry_json(frame).dump();
  kinect_any_ = true;
  kinect_open_ = true;
  out.flush();
}

void SessionRecorder::e4_samples(Side side, sensors::E4Channel channel, double start_epoch,
                                 const std::vector<std::vector<double>>& rows) {
  std::lock_guard lock(mu_);
  if (closed_) throw Error(ErrorCode::IoFailure, "recorder is closed");
  const std::string rel = e4_path(side, channel);
  const bool fresh = !texts_.count(rel);
  auto& out = open_text(std::string(sensors::to_string(channel)), rel);
  out.precision(10);
  if (fresh) {
    const std::size_t width = sensors::columns(channel);
    for (double v : {start_epoch, sensors::nominal_rate(channel)}) {
      for (std::size_t c = 0; c < width; ++c) out << (c ? ", " : "") << std::fixed << v;
      out << '\n';
    }
    out << std::defaultfloat;
  }
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << '\n';
  }
  out.flush();
}

void SessionRecorder::close() {
  std::lock_guard lock(mu_);
  if (closed_) return;
  closed_ = true;
  if (performance_) performance_->close();
  for (auto& [color, w] : wands_) w->close();
  if (kinect_open_) texts_["kinect.json"] << "\n}\n";
  for (auto& [rel, out] : texts_) out.close();
}

std::vector<StreamFile> SessionRecorder::streams() const { return streams_; }

}  // namespace sarvr::recorder
