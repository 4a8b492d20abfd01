#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "sarvr/common.hpp"

namespace sarvr::wand {

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  Quaternion normalized() const;
  Quaternion conjugate() const { return {w, -x, -y, -z}; }
  friend Quaternion operator*(const Quaternion& a, const Quaternion& b);
  friend bool operator==(const Quaternion&, const Quaternion&) = default;

  static Quaternion from_axis_angle(double ax, double ay, double az, double angle);
  /// Yaw about the vertical (z) axis, then pitch about the lateral (y) axis.
  static Quaternion from_yaw_pitch(double yaw, double pitch);
};

inline constexpr double kUnitTolerance = 1e-3;

bool is_unit(const Quaternion& q);

struct YawPitch {
  double yaw = 0.0;
  double pitch = 0.0;
};

/// Z-Y-X Euler yaw and pitch; pitch positive means the wand tip points up.
YawPitch yaw_pitch(const Quaternion& q);

// --- wire protocol ---------------------------------------------------------------
//
// Little-endian layout:
//   magic(2) = 'S','W'  ver(1) = 1  wand_id(1)  seq(2)  kind(1)  payload  crc16(2)
// Every payload starts with the sender timestamp t (u32 ms):
//   Orientation: t, w x y z as Q15 int16           (12 bytes)
//   Button:      t, id u8 (0=A 1=B), pressed u8    (6 bytes)
//   Dial:        t, delta i16                      (6 bytes)
//   Battery:     t, state u8, level u8             (6 bytes)
// crc16 is CRC-16/CCITT-FALSE over everything before it.

inline constexpr std::uint8_t kMagic0 = 'S';
inline constexpr std::uint8_t kMagic1 = 'W';
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 7;
inline constexpr std::size_t kCrcSize = 2;
inline constexpr std::size_t kMaxFrameSize = kHeaderSize + 16 + kCrcSize;

enum class FrameKind : std::uint8_t { Orientation = 1, Button = 2, Dial = 3, Battery = 4 };
enum class ButtonId : std::uint8_t { A = 0, B = 1 };
enum class BatteryState : std::uint8_t { Charging = 0, NearFull = 1, Full = 2 };

std::string_view to_string(BatteryState s);
/// Charging: Red, almost full: Red+Green, full: Green.
std::vector<std::string_view> led_colors(BatteryState s);

struct Orientation {
  Quaternion q;
  friend bool operator==(const Orientation&, const Orientation&) = default;
};
struct Button {
  ButtonId id = ButtonId::A;
  bool pressed = false;
  friend bool operator==(const Button&, const Button&) = default;
};
struct Dial {
  std::int16_t delta = 0;
  friend bool operator==(const Dial&, const Dial&) = default;
};
struct Battery {
  BatteryState state = BatteryState::Full;
  std::uint8_t level = 100;
  friend bool operator==(const Battery&, const Battery&) = default;
};

using Payload = std::variant<Orientation, Button, Dial, Battery>;

struct WandFrame {
  WandColor wand_id = WandColor::Red;
  std::uint16_t seq = 0;
  std::uint32_t t = 0;
  Payload payload;

  FrameKind kind() const { return static_cast<FrameKind>(payload.index() + 1); }
  friend bool operator==(const WandFrame&, const WandFrame&) = default;
};

/// Snaps a quaternion to the Q15 grid the codec carries.
Quaternion quantize(const Quaternion& q);

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes);

/// Throws NonUnitQuaternion for orientation frames off the unit sphere.
std::vector<std::uint8_t> encode_frame(const WandFrame& frame);

struct DecodeResult {
  std::optional<WandFrame> frame;
  ErrorCode error = ErrorCode::ShortFrame;
  /// Bytes the frame occupies when decoding succeeded.
  std::size_t size = 0;
};

/// Total over arbitrary input; never throws.
DecodeResult try_decode(std::span<const std::uint8_t> bytes) noexcept;
/// Throws BadMagic, BadCrc, UnknownKind, ShortFrame, BadField.
WandFrame decode_frame(std::span<const std::uint8_t> bytes);

/// Extracts frames from a byte stream, resynchronising on the magic.
class FrameScanner {
 public:
  void feed(std::span<const std::uint8_t> bytes);
  std::optional<WandFrame> next();
  std::size_t skipped_bytes() const { return skipped_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::size_t skipped_ = 0;
};

/// Per-wand 16-bit sequence tracking with wraparound.
class SequenceTracker {
 public:
  struct Observation {
    bool accepted = false;
    /// Frames missing between the previous accepted seq and this one.
    std::uint32_t dropped = 0;
    /// Duplicate or older than the last accepted frame.
    bool stale = false;
  };

  Observation observe(std::uint16_t seq);
  std::uint64_t total_dropped() const { return total_dropped_; }

 private:
  std::optional<std::uint16_t> last_;
  std::uint64_t total_dropped_ = 0;
};

// --- port discovery ---------------------------------------------------------------

/// Byte source that can be probed for wand output.
class PortIo {
 public:
  virtual ~PortIo() = default;
  virtual std::string name() const = 0;
  /// Returns 0 when nothing arrived within timeout.
  virtual std::size_t read_some(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout) = 0;
};

inline constexpr std::chrono::milliseconds kProbeWindow{500};

/// True iff at least one valid frame (magic + CRC) shows up within window.
bool probe_port(PortIo& port, std::chrono::milliseconds window = kProbeWindow);

// --- cursor ----------------------------------------------------------------------

struct CursorCalibration {
  Quaternion center;
  double yaw_gain = 1.0;
  double pitch_gain = 1.0;
};

/// Relative yaw/pitch from the center orientation, scaled and offset from
/// (0.5, 0.5), clamped to the unit square. Throws NonUnitQuaternion.
Point orientation_to_cursor(const Quaternion& q, const CursorCalibration& calib);
CursorCalibration recenter(const CursorCalibration& calib, const Quaternion& q_now);

// --- gestures --------------------------------------------------------------------

enum class GestureKind : std::uint8_t { DrumHit, Cast };

std::string_view to_string(GestureKind k);

struct Gesture {
  GestureKind kind = GestureKind::DrumHit;
  Millis t = 0;
  friend bool operator==(const Gesture&, const Gesture&) = default;
};

struct GestureConfig {
  /// Downward pitch rate that starts a strike, rad/s.
  double drum_rate = 3.0;
  Millis reversal_window = 200;
  double cast_sweep = 0.8;
  Millis cast_window = 600;
  Millis refractory = 300;
};

struct OrientationSample {
  Millis t = 0;
  Quaternion q;
};

/// Streaming detector, fed at the nominal 50 Hz orientation rate.
class GestureDetector {
 public:
  explicit GestureDetector(GestureConfig config = {}) : config_(config) {}
  std::optional<Gesture> push(const OrientationSample& sample);

 private:
  bool refractory(Millis t) const { return last_gesture_ && t - *last_gesture_ < config_.refractory; }

  GestureConfig config_;
  std::deque<std::pair<Millis, double>> history_;
  std::optional<std::pair<Millis, double>> prev_;
  std::optional<Millis> strike_start_;
  std::optional<Millis> last_gesture_;
};

std::vector<Gesture> detect_gestures(std::span<const OrientationSample> window, GestureConfig config = {});
std::optional<Gesture> detect_gesture(std::span<const OrientationSample> window, GestureConfig config = {});

// --- emulator and transport -----------------------------------------------------

inline constexpr std::uint16_t kDefaultUdpPort = 47800;

/// Software wand: stamps frames with its color and a running sequence number.
class WandEmulator {
 public:
  explicit WandEmulator(WandColor color) : color_(color) {}

  WandFrame orientation(std::uint32_t t, const Quaternion& q);
  WandFrame button(std::uint32_t t, ButtonId id, bool pressed);
  WandFrame dial(std::uint32_t t, std::int16_t delta);
  WandFrame battery(std::uint32_t t, BatteryState state, std::uint8_t level);
  WandColor color() const { return color_; }

 private:
  WandFrame stamp(std::uint32_t t, Payload payload);

  WandColor color_;
  std::uint16_t seq_ = 0;
};

/// Bound localhost UDP socket, usable as a probe-able port.
class UdpPort : public PortIo {
 public:
  /// Throws IoFailure when the port cannot be bound.
  explicit UdpPort(std::uint16_t port);
  ~UdpPort() override;
  UdpPort(const UdpPort&) = delete;
  UdpPort& operator=(const UdpPort&) = delete;

  std::string name() const override;
  std::size_t read_some(std::span<std::uint8_t> buf, std::chrono::milliseconds timeout) override;
  std::uint16_t port() const { return port_; }

 private:
  int fd_ = -1;
  std::uint16_t port_;
};

class UdpSender {
 public:
  explicit UdpSender(std::uint16_t port);
  ~UdpSender();
  UdpSender(const UdpSender&) = delete;
  UdpSender& operator=(const UdpSender&) = delete;

  bool send(const WandFrame& frame);
  bool send_raw(std::span<const std::uint8_t> bytes);

 private:
  int fd_ = -1;
  std::uint16_t port_;
};

/// Input thread: decodes datagrams and hands frames to a callback.
class UdpWandReceiver {
 public:
  using Callback = std::function<void(const WandFrame&)>;

  UdpWandReceiver(std::uint16_t port, Callback callback);
  ~UdpWandReceiver();
  UdpWandReceiver(const UdpWandReceiver&) = delete;
  UdpWandReceiver& operator=(const UdpWandReceiver&) = delete;

  void stop();
  std::uint64_t frames() const { return frames_.load(); }
  std::uint64_t rejected() const { return rejected_.load(); }

 private:
  UdpPort port_;
  Callback callback_;
  std::atomic<bool> running_{true};
  std::atomic<std::uint64_t> frames_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::thread thread_;
};

}  // namespace sarvr::wand
