#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "sarvr/recorder.hpp"

using namespace sarvr;
using namespace sarvr::recorder;
using nlohmann::json;

namespace {

class Scratch : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("sarvr_rec_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path dir_;
};

/// Session directory with a performance log and one E4 file.
PackageRequest sample_request(const fs::path& root) {
  const fs::path session = root / "session";
  write_file(session / "performance.log", format_line({0, "session", "created", {{"k", 1}}}) + "\n");
  write_file(session / "e4_left/EDA.csv", "1700000000\n4\n0.1\n");
  PackageRequest req;
  req.facility_id = "F01";
  req.participant_1 = "P10";
  req.participant_2 = "P11";
  req.wall_clock_epoch_ms = 1'700'000'000'000;
  req.session_dir = session;
  req.streams = {{"performance", "performance.log"}, {"EDA", "e4_left/EDA.csv"}};
  req.out_dir = root / "out";
  return req;
}

}  // namespace

TEST(LogLine, FormatIsIsoOffsetAndTabSeparated) {
  LogRecord r{61'005, "music", "note_judged", {{"j", "Green"}}};
  EXPECT_EQ(format_line(r), "PT61.005S\tmusic\tnote_judged\t{\"j\":\"Green\"}");
  EXPECT_EQ(parse_line(format_line(r)), r);
  EXPECT_EQ(format_line({0, "a", "b", json::object()}), "PT0.000S\ta\tb\t{}");
}

TEST(LogLine, EscapesSurviveRoundTrip) {
  LogRecord r{7, "we\tird\\comp", "line\nbreak\r", {{"text", "tab\there"}}};
  const auto line = format_line(r);
  EXPECT_EQ(std::count(line.begin(), line.end(), '\t'), 3);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(parse_line(line), r);
}

TEST(LogLine, MalformedLinesAreParseErrors) {
  for (std::string bad : {"PT1.000S\ta\tb", "1.000\ta\tb\t{}", "PT1.00S\ta\tb\t{}", "PT1.000S\ta\\x\tb\t{}",
                          "PT1.000S\ta\tb\t{oops"}) {
    try {
      parse_line(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << bad;
    }
  }
  EXPECT_THROW(format_line({-1, "a", "b", {}}), Error);
}

TEST_F(Scratch, WriterKeepsOrderAndRejectsRegression) {
  const auto path = dir_ / "log" / "perf.log";
  {
    LogWriter w(path, 4, std::chrono::milliseconds(10));
    for (int i = 0; i < 100; ++i) w.append({i, "c", "e", {{"i", i}}});
    try {
      w.append({50, "c", "late", {}});
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ClockRegression);
    }
    w.flush();
    EXPECT_EQ(w.written(), 100u);
    w.close();
    EXPECT_THROW(w.append({200, "c", "e", {}}), Error);
  }
  auto records = read_log(path);
  ASSERT_EQ(records.size(), 100u);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(records[static_cast<std::size_t>(i)].payload["i"], i);
}

TEST_F(Scratch, FlushedLinesSurviveAbruptExit) {
  const auto path = dir_ / "crash.log";
  const pid_t pid = ::fork();
  ASSERT_GE(pid, 0);
  if (pid == 0) {
    LogWriter w(path, 16, std::chrono::milliseconds(5));
    for (int i = 0; i < 50; ++i) w.append({i, "c", "e", {{"i", i}}});
    w.flush();
    w.append({99, "c", "e", {{"i", 99}}});
    std::_Exit(0);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  auto records = read_log(path);
  ASSERT_GE(records.size(), 50u);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(records[static_cast<std::size_t>(i)].t, i);
}

TEST(Timeline, MergeBreaksTiesByPriorityThenSource) {
  TimelineSource kinect{"kinect", 1, {{0, "k", "a", {}}, {10, "k", "b", {}}}};
  TimelineSource perf{"performance", 0, {{10, "p", "a", {}}, {10, "p", "b", {}}, {20, "p", "c", {}}}};
  TimelineSource wand{"wand", 1, {{5, "w", "a", {}}, {10, "w", "b", {}}}};
  auto merged = merge_timeline({kinect, perf, wand});
  std::vector<std::string> order;
  for (const auto& m : merged) order.push_back(m.source + ":" + m.record.event);
  EXPECT_EQ(order, (std::vector<std::string>{"kinect:a", "wand:a", "performance:a", "performance:b", "kinect:b",
                                             "wand:b", "performance:c"}));
  TimelineSource bad{"broken", 0, {{5, "x", "a", {}}, {4, "x", "b", {}}}};
  try {
    merge_timeline({perf, bad});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsortedSource);
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
  }
}

TEST(Checksum, KnownSha256) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Zip, DeterministicRoundTripAndCrcCheck) {
  std::vector<ZipEntry> entries = {{"a.txt", "hello"}, {"dir/b.bin", std::string("\0\1\2", 3)}, {"empty", ""}};
  const auto bytes = build_zip(entries);
  EXPECT_EQ(bytes, build_zip(entries));
  auto back = read_zip(bytes);
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back[i].name, entries[i].name);
    EXPECT_EQ(back[i].data, entries[i].data);
  }

  auto corrupt = bytes;
  corrupt[30 + 5] ^= 0x20;  // first byte of "hello" after the local header and name
  try {
    read_zip(corrupt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadCrc);
  }
  EXPECT_THROW(read_zip("not a zip"), Error);
}

TEST(Archive, NameUsesUtcDate) {
  EXPECT_EQ(utc_date(0), "1970-01-01");
  EXPECT_EQ(utc_date(1'700'000'000'000), "2023-11-14");
  EXPECT_EQ(utc_date(1'700'006'399'999), "2023-11-14");
  EXPECT_EQ(utc_date(1'700'006'400'000), "2023-11-15");
  EXPECT_EQ(archive_name("F01", "P10", "P11", 1'700'000'000'000), "F01_P10_P11_2023-11-14");
}

TEST_F(Scratch, PackageThenVerify) {
  auto req = sample_request(dir_);
  auto result = package_session(req);
  EXPECT_EQ(result.archive.filename(), "F01_P10_P11_2023-11-14.zip");
  EXPECT_EQ(result.manifest["files"].size(), 2u);
  auto v = verify_archive(result.archive);
  EXPECT_TRUE(v.ok) << (v.problems.empty() ? "" : v.problems[0]);
  EXPECT_EQ(v.entries.size(), 3u);

  // Tamper with a stored file: the checksum no longer matches the manifest.
  auto entries = read_zip(read_file(result.archive));
  entries[0].data += "x";
  write_file(result.archive, build_zip(entries));
  auto tampered = verify_archive(result.archive);
  EXPECT_FALSE(tampered.ok);
  EXPECT_FALSE(tampered.problems.empty());
}

TEST_F(Scratch, MissingStreamIsNamed) {
  auto req = sample_request(dir_);
  req.streams.push_back({"kinect", "kinect.json"});
  try {
    package_session(req);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingStream);
    EXPECT_NE(std::string(e.what()).find("kinect"), std::string::npos);
  }
}

TEST_F(Scratch, UploadToLocalDirAndNone) {
  auto pkg = package_session(sample_request(dir_));
  auto none = upload(pkg.archive, NoUpload{});
  EXPECT_TRUE(none.local_only);
  EXPECT_EQ(none.attempts, 0);
  auto local = upload(pkg.archive, LocalDir{dir_ / "share"});
  EXPECT_EQ(local.sha256, sha256_file(pkg.archive));
  EXPECT_TRUE(fs::exists(dir_ / "share" / pkg.archive.filename()));
  EXPECT_THROW(upload(dir_ / "nope.zip", NoUpload{}), Error);
}

TEST_F(Scratch, HttpUploadSendsBearerAndRetries) {
  auto pkg = package_session(sample_request(dir_));
  httplib::Server server;
  std::atomic<int> calls{0};
  std::atomic<bool> fail{false};
  std::string seen_auth, seen_path;
  std::mutex mu;
  server.Put(R"(/drop/(.+))", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    {
      std::lock_guard lock(mu);
      seen_auth = req.get_header_value("Authorization");
      seen_path = req.path;
    }
    if (fail) {
      res.status = 500;
      return;
    }
    res.set_content(json{{"sha256", sha256_hex(req.body)}}.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread th([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string url = "http://127.0.0.1:" + std::to_string(port) + "/drop/";
  auto ok = upload(pkg.archive, HttpPut{url, "secret", 3, std::chrono::milliseconds(1)});
  EXPECT_EQ(ok.attempts, 1);
  EXPECT_EQ(ok.sha256, sha256_file(pkg.archive));
  {
    std::lock_guard lock(mu);
    EXPECT_EQ(seen_auth, "Bearer secret");
    EXPECT_EQ(seen_path, "/drop/" + pkg.archive.filename().string());
  }

  fail = true;
  calls = 0;
  try {
    upload(pkg.archive, HttpPut{url, "secret", 3, std::chrono::milliseconds(1)});
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UploadFailed);
    EXPECT_NE(std::string(e.what()).find("3 attempts"), std::string::npos);
  }
  EXPECT_EQ(calls.load(), 3);
  server.stop();
  th.join();
}

TEST_F(Scratch, SessionRecorderTracksOpenedStreams) {
  SessionRecorder rec(dir_ / "s1");
  rec.performance().append({0, "session", "created", {}});
  rec.wand(WandColor::Blue).append({5, "wand", "frame", {}});
  rec.e4_samples(Side::Left, sensors::E4Channel::EDA, 1'700'000'000.0, {{0.1}, {0.2}});
  rec.e4_samples(Side::Left, sensors::E4Channel::EDA, 1'700'000'000.0, {{0.3}});
  rec.kinect_frame({1'700'000'000'000, {sensors::synthetic_body(1, {0, 0, 1.5})}});
  rec.close();
  EXPECT_TRUE(rec.closed());

  std::vector<std::string> paths;
  for (const auto& s : rec.streams()) paths.push_back(s.path);
  std::sort(paths.begin(), paths.end());
  EXPECT_EQ(paths, (std::vector<std::string>{"e4_left/EDA.csv", "kinect.json", "performance.log", "wand_blue.log"}));
  EXPECT_EQ(e4_path(Side::Right, sensors::E4Channel::ACC), "e4_right/ACC.csv");

  auto eda = sensors::parse_e4_csv(read_file(dir_ / "s1" / "e4_left/EDA.csv"), sensors::E4Channel::EDA);
  EXPECT_EQ(eda.samples.size(), 3u);
  auto kinect = sensors::parse_kinect_file(read_file(dir_ / "s1" / "kinect.json"));
  EXPECT_EQ(kinect.frames.size(), 1u);
}
