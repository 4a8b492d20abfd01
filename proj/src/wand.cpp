#include "sarvr/wand.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>

namespace sarvr::wand {

double Quaternion::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quaternion Quaternion::normalized() const {
  const double n = norm();
  return n > 0 ? Quaternion{w / n, x / n, y / n, z / n} : Quaternion{};
}

Quaternion operator*(const Quaternion& a, const Quaternion& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quaternion Quaternion::from_axis_angle(double ax, double ay, double az, double angle) {
  const double n = std::sqrt(ax * ax + ay * ay + az * az);
  const double s = std::sin(angle / 2) / n;
  return {std::cos(angle / 2), ax * s, ay * s, az * s};
}

Quaternion Quaternion::from_yaw_pitch(double yaw, double pitch) {
  // Rotation about +y tips the forward axis down, so elevation is its negative.
  return from_axis_angle(0, 0, 1, yaw) * from_axis_angle(0, 1, 0, -pitch);
}

bool is_unit(const Quaternion& q) { return std::abs(q.norm() - 1.0) <= kUnitTolerance; }

YawPitch yaw_pitch(const Quaternion& q) {
  const double yaw = std::atan2(2.0 * (q.w * q.z + q.x * q.y), 1.0 - 2.0 * (q.y * q.y + q.z * q.z));
  const double s = std::clamp(2.0 * (q.w * q.y - q.z * q.x), -1.0, 1.0);
  return {yaw, -std::asin(s)};
}

std::string_view to_string(BatteryState s) {
  switch (s) {
    case BatteryState::Charging: return "Charging";
    case BatteryState::NearFull: return "NearFull";
    case BatteryState::Full: return "Full";
  }
  return "Full";
}

std::vector<std::string_view> led_colors(BatteryState s) {
  switch (s) {
    case BatteryState::Charging: return {"Red"};
    case BatteryState::NearFull: return {"Red", "Green"};
    case BatteryState::Full: return {"Green"};
  }
  return {};
}

// --- codec ------------------------------------------------------------------------

namespace {

constexpr double kQ15 = 32767.0;

std::int16_t to_q15(double c) {
  return static_cast<std::int16_t>(std::lround(std::clamp(c, -1.0, 1.0) * kQ15));
}

double from_q15(std::int16_t v) { return static_cast<double>(v) / kQ15; }

std::size_t payload_size(std::uint8_t kind) {
  switch (static_cast<FrameKind>(kind)) {
    case FrameKind::Orientation: return 12;
    case FrameKind::Button:
    case FrameKind::Dial:
    case FrameKind::Battery: return 6;
  }
  return 0;
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

DecodeResult fail(ErrorCode code) { return DecodeResult{std::nullopt, code, 0}; }

}  // namespace

Quaternion quantize(const Quaternion& q) {
  return {from_q15(to_q15(q.w)), from_q15(to_q15(q.x)), from_q15(to_q15(q.y)), from_q15(to_q15(q.z))};
}

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : bytes) {
    crc ^= static_cast<std::uint16_t>(b << 8);
    for (int i = 0; i < 8; ++i) crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021) : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

std::vector<std::uint8_t> encode_frame(const WandFrame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(kMaxFrameSize);
  out.push_back(kMagic0);
  out.push_back(kMagic1);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(frame.wand_id));
  put16(out, frame.seq);
  out.push_back(static_cast<std::uint8_t>(frame.kind()));
  put32(out, frame.t);
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Orientation>) {
          if (!is_unit(p.q)) throw Error(ErrorCode::NonUnitQuaternion, "norm " + std::to_string(p.q.norm()));
          for (double c : {p.q.w, p.q.x, p.q.y, p.q.z}) put16(out, static_cast<std::uint16_t>(to_q15(c)));
        } else if constexpr (std::is_same_v<P, Button>) {
          out.push_back(static_cast<std::uint8_t>(p.id));
          out.push_back(p.pressed ? 1 : 0);
        } else if constexpr (std::is_same_v<P, Dial>) {
          put16(out, static_cast<std::uint16_t>(p.delta));
        } else {
          out.push_back(static_cast<std::uint8_t>(p.state));
          out.push_back(p.level);
        }
      },
      frame.payload);
  put16(out, crc16_ccitt(out));
  return out;
}

DecodeResult try_decode(std::span<const std::uint8_t> bytes) noexcept {
  if (bytes.size() < kHeaderSize) return fail(ErrorCode::ShortFrame);
  if (bytes[0] != kMagic0 || bytes[1] != kMagic1 || bytes[2] != kVersion) return fail(ErrorCode::BadMagic);
  const std::uint8_t kind = bytes[6];
  const std::size_t psize = payload_size(kind);
  if (psize == 0) return fail(ErrorCode::UnknownKind);
  const std::size_t total = kHeaderSize + psize + kCrcSize;
  if (bytes.size() < total) return fail(ErrorCode::ShortFrame);
  const std::uint16_t want = get16(&bytes[kHeaderSize + psize]);
  if (crc16_ccitt(bytes.first(kHeaderSize + psize)) != want) return fail(ErrorCode::BadCrc);

  WandFrame f;
  if (bytes[3] > 1) return fail(ErrorCode::BadField);
  f.wand_id = static_cast<WandColor>(bytes[3]);
  f.seq = get16(&bytes[4]);
  const std::uint8_t* p = &bytes[kHeaderSize];
  f.t = get32(p);
  p += 4;
  switch (static_cast<FrameKind>(kind)) {
    case FrameKind::Orientation: {
      Quaternion q{from_q15(static_cast<std::int16_t>(get16(p))), from_q15(static_cast<std::int16_t>(get16(p + 2))),
                   from_q15(static_cast<std::int16_t>(get16(p + 4))), from_q15(static_cast<std::int16_t>(get16(p + 6)))};
      if (!is_unit(q)) return fail(ErrorCode::BadField);
      f.payload = Orientation{q};
      break;
    }
    case FrameKind::Button:
      if (p[0] > 1 || p[1] > 1) return fail(ErrorCode::BadField);
      f.payload = Button{static_cast<ButtonId>(p[0]), p[1] == 1};
      break;
    case FrameKind::Dial:
      f.payload = Dial{static_cast<std::int16_t>(get16(p))};
      break;
    case FrameKind::Battery:
      if (p[0] > 2 || p[1] > 100) return fail(ErrorCode::BadField);
      f.payload = Battery{static_cast<BatteryState>(p[0]), p[1]};
      break;
  }
  return DecodeResult{f, ErrorCode::ShortFrame, total};
}

WandFrame decode_frame(std::span<const std::uint8_t> bytes) {
  auto r = try_decode(bytes);
  if (!r.frame) throw Error(r.error, "wand frame");
  return *r.frame;
}

void FrameScanner::feed(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

std::optional<WandFrame> FrameScanner::next() {
  std::size_t pos = 0;
  std::optional<WandFrame> found;
  while (pos < buf_.size()) {
    if (buf_[pos] != kMagic0) {
      ++pos;
      ++skipped_;
      continue;
    }
    auto r = try_decode(std::span(buf_).subspan(pos));
    if (r.frame) {
      found = r.frame;
      pos += r.size;
      break;
    }
    // Need more bytes unless the header already proves this is not a frame.
    if (r.error == ErrorCode::ShortFrame) break;
    ++pos;
    ++skipped_;
  }
  buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos));
  return found;
}

SequenceTracker::Observation SequenceTracker::observe(std::uint16_t seq) {
  Observation o;
  if (!last_) {
    last_ = seq;
    o.accepted = true;
    return o;
  }
  const std::uint16_t delta = static_cast<std::uint16_t>(seq - *last_);
  if (delta == 0 || delta >= 0x8000) {
    o.stale = true;
    return o;
  }
  o.accepted = true;
  o.dropped = delta - 1u;
  total_dropped_ += o.dropped;
  last_ = seq;
  return o;
}

bool probe_port(PortIo& port, std::chrono::milliseconds window) {
  const auto deadline = std::chrono::steady_clock::now() + window;
  FrameScanner scanner;
  std::array<std::uint8_t, 512> buf{};
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return false;
    const std::size_t n = port.read_some(buf, left);
    if (n == 0) continue;
    scanner.feed(std::span(buf).first(n));
    if (scanner.next()) return true;
  }
}

// --- cursor -----------------------------------------------------------------------

Point orientation_to_cursor(const Quaternion& q, const CursorCalibration& calib) {
  if (!is_unit(q)) throw Error(ErrorCode::NonUnitQuaternion, "norm " + std::to_string(q.norm()));
  const auto rel = yaw_pitch(calib.center.conjugate() * q);
  return {std::clamp(0.5 + calib.yaw_gain * rel.yaw, 0.0, 1.0), std::clamp(0.5 - calib.pitch_gain * rel.pitch, 0.0, 1.0)};
}

CursorCalibration recenter(const CursorCalibration& calib, const Quaternion& q_now) {
  if (!is_unit(q_now)) throw Error(ErrorCode::NonUnitQuaternion, "norm " + std::to_string(q_now.norm()));
  CursorCalibration out = calib;
  out.center = q_now;
  return out;
}

// --- gestures ---------------------------------------------------------------------

std::string_view to_string(GestureKind k) { return k == GestureKind::DrumHit ? "DrumHit" : "Cast"; }

std::optional<Gesture> GestureDetector::push(const OrientationSample& sample) {
  const Millis t = sample.t;
  const double pitch = yaw_pitch(sample.q).pitch;
  std::optional<Gesture> out;

  history_.emplace_back(t, pitch);
  while (!history_.empty() && t - history_.front().first > config_.cast_window) history_.pop_front();

  double rate = 0.0;
  if (prev_ && t > prev_->first) rate = (pitch - prev_->second) * 1000.0 / static_cast<double>(t - prev_->first);

  double peak = pitch;
  for (const auto& [ht, hp] : history_) peak = std::max(peak, hp);

  if (!refractory(t) && peak - pitch >= config_.cast_sweep) {
    out = Gesture{GestureKind::Cast, t};
    last_gesture_ = t;
    strike_start_.reset();
    history_.clear();
    history_.emplace_back(t, pitch);
  } else if (strike_start_) {
    if (rate >= 0.0 && prev_) {
      // The lowest point of the strike is the hit.
      if (prev_->first - *strike_start_ <= config_.reversal_window && !refractory(prev_->first)) {
        out = Gesture{GestureKind::DrumHit, prev_->first};
        last_gesture_ = prev_->first;
      }
      strike_start_.reset();
    } else if (t - *strike_start_ > config_.reversal_window) {
      strike_start_.reset();
    }
  } else if (prev_ && rate < -config_.drum_rate) {
    strike_start_ = prev_->first;
  }
  prev_ = std::make_pair(t, pitch);
  return out;
}

std::vector<Gesture> detect_gestures(std::span<const OrientationSample> window, GestureConfig config) {
  GestureDetector detector(config);
  std::vector<Gesture> out;
  for (const auto& s : window) {
    if (auto g = detector.push(s)) out.push_back(*g);
  }
  return out;
}

std::optional<Gesture> detect_gesture(std::span<const OrientationSample> window, GestureConfig config) {
  auto all = detect_gestures(window, config);
  if (all.empty()) return std::nullopt;
  return all.front();
}

// --- emulator and UDP -------------------------------------------------------------

WandFrame WandEmulator::stamp(std::uint32_t t, Payload payload) {
  return WandFrame{color_, seq_++, t, std::move(payload)};
}

WandFrame WandEmulator::orientation(std::uint32_t t, const Quaternion& q) {
  return stamp(t, Orientation{quantize(q.normalized())});
}

WandFrame WandEmulator::button(std::uint32_t t, ButtonId id, bool pressed) { return stamp(t, Button{id, pressed}); }

WandFrame WandEmulator::dial(std::uint32_t t, std::int16_t delta) { return stamp(t, Dial{delta}); }

WandFrame WandEmulator::battery(std::uint32_t t, BatteryState state, std::uint8_t level) {
  return stamp(t, Battery{state, level});
}

namespace {

sockaddr_in loopback(std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return addr;
}

}  // namespace

UdpPort::UdpPort(std::uint16_t port) : port_(port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoFailure, std::strerror(errno));
  auto addr = loopback(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    std::string why = std::strerror(errno);
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::IoFailure, "bind udp " + std::to_string(port) + ": " + why);
  }
  if (port_ == 0) {
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }
}

UdpPort::~UdpPort() {
  if (fd_ >= 0) ::close(fd_);
}

std::string UdpPort::name() const { return "udp:" + std::to_string(port_); }

std::size_t UdpPort::read_some(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout) {
  pollfd p{fd_, POLLIN, 0};
  int rc = ::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(0, timeout.count())));
  if (rc <= 0) return 0;
  ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
  return n > 0 ? static_cast<std::size_t>(n) : 0;
}

UdpSender::UdpSender(std::uint16_t port) : port_(port) {
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw Error(ErrorCode::IoFailure, std::strerror(errno));
}

UdpSender::~UdpSender() {
  if (fd_ >= 0) ::close(fd_);
}

bool UdpSender::send(const WandFrame& frame) { return send_raw(encode_frame(frame)); }

bool UdpSender::send_raw(std::span<const std::uint8_t> bytes) {
  auto addr = loopback(port_);
  return ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) ==
         static_cast<ssize_t>(bytes.size());
}

UdpWandReceiver::UdpWandReceiver(std::uint16_t port, Callback callback)
    : port_(port), callback_(std::move(callback)) {
  thread_ = std::thread([this] {
    std::array<std::uint8_t, 512> buf{};
    while (running_.load()) {
      const std::size_t n = port_.read_some(buf, std::chrono::milliseconds(50));
      if (n == 0) continue;
      // One datagram may carry several frames back to back.
      FrameScanner scanner;
      scanner.feed(std::span(buf).first(n));
      bool any = false;
      while (auto f = scanner.next()) {
        any = true;
        ++frames_;
        callback_(*f);
      }
      if (!any) ++rejected_;
    }
  });
}

UdpWandReceiver::~UdpWandReceiver() { stop(); }

void UdpWandReceiver::stop() {
  running_.store(false);
  if (thread_.joinable()) thread_.join();
}

}  // namespace sarvr::wand
