// Command-line front end: engine service, offline analysis, screening and a
// UDP wand emulator.

#include <csignal>
#include <cmath>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "sarvr/analysis.hpp"
#include "sarvr/engine.hpp"
#include "sarvr/recorder.hpp"
#include "sarvr/service.hpp"

namespace {

using namespace sarvr;

sarvr::service::Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

std::vector<int> parse_ints(const std::vector<std::string>& raw) {
  std::vector<int> out;
  for (const auto& r : raw) {
    for (auto piece : split(r, ',')) {
      if (trim(piece).empty()) continue;
      auto v = parse_int(piece);
      if (!v) throw Error(ErrorCode::ParseError, "not an integer: '" + std::string(piece) + "'");
      out.push_back(static_cast<int>(*v));
    }
  }
  return out;
}

int serve(const std::string& config_path, const std::string& host, int port, const std::string& token) {
  auto config = config_path.empty() ? engine::EngineConfig{} : engine::EngineConfig::load(config_path);
  engine::Engine eng(config);
  service::ServiceOptions opts;
  opts.host = host;
  opts.port = static_cast<std::uint16_t>(port);
  opts.token = token;
  service::Service svc(eng, opts);
  g_service = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::thread([&svc] {
    while (svc.port() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    std::cerr << "listening on port " << svc.port() << "\n";
  }).detach();
  svc.run();
  g_service = nullptr;
  return 0;
}

int analyze_ratings(const std::string& path, const std::string& pooling, bool csv) {
  auto sheets = analysis::parse_ratings_csv(recorder::read_file(path));
  auto [first, final] = analysis::first_and_final(sheets);
  auto imp = analysis::rating_improvements(first, final);
  std::cout << (csv ? analysis::improvements_csv(imp) : analysis::improvements_table(imp));
  if (csv) return 0;
  const auto mode = pooling == "category-means" ? analysis::Pooling::CategoryMeans : analysis::Pooling::Pairs;
  auto pairs = analysis::pool(first, final, mode);
  try {
    std::cout << "\n" << analysis::wilcoxon_table(analysis::wilcoxon_signed_rank(pairs));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::AllZeroDifferences) throw;
    std::cout << "\nwilcoxon: all differences are zero\n";
  }
  return 0;
}

int analyze_events(const std::string& path, std::optional<double> duration, bool csv) {
  auto log = analysis::parse_event_log(recorder::read_file(path), duration);
  auto rates = analysis::event_rates(log);
  std::cout << (csv ? analysis::rates_csv(rates) : analysis::rates_table(rates));
  return 0;
}

int wand_emulator(int port, const std::string& color_name, double seconds, double hz, double strike_every) {
  auto color = wand_color_from_string(color_name);
  if (!color) throw Error(ErrorCode::ParseError, "color must be Red or Blue");
  wand::WandEmulator emu(*color);
  wand::UdpSender sender(static_cast<std::uint16_t>(port));
  sender.send(emu.battery(0, wand::BatteryState::Full, 100));
  const auto period = std::chrono::duration<double>(1.0 / hz);
  const int samples = static_cast<int>(seconds * hz);
  auto next = std::chrono::steady_clock::now();
  for (int i = 0; i < samples; ++i) {
    const double t = i / hz;
    // Slow yaw sweep; a quick downward strike and rebound every strike_every seconds.
    const double in_cycle = std::fmod(t, strike_every);
    double pitch = 0.2;
    if (in_cycle < 0.1) pitch = 0.2 - 6.0 * in_cycle;
    else if (in_cycle < 0.2) pitch = -0.4 + 6.0 * (in_cycle - 0.1);
    const double yaw = 0.3 * std::sin(t * 0.5);
    sender.send(emu.orientation(static_cast<std::uint32_t>(t * 1000.0), wand::Quaternion::from_yaw_pitch(yaw, pitch)));
    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
    std::this_thread::sleep_until(next);
  }
  std::cerr << "sent " << samples + 1 << " frames to udp:" << port << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sarvr: dyadic activity engine and analysis tools"};
  app.require_subcommand(1);

  auto* serve_cmd = app.add_subcommand("serve", "run the engine behind the HTTP API");
  std::string config_path, host = "127.0.0.1", token;
  int port = 8080;
  serve_cmd->add_option("-c,--config", config_path, "engine config JSON");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("-p,--port", port, "0 picks a free port");
  serve_cmd->add_option("--token", token, "bearer token required on every request");

  auto* analyze = app.add_subcommand("analyze", "offline analysis");
  analyze->require_subcommand(1);
  auto* ratings = analyze->add_subcommand("ratings", "first-to-final rating improvements and Wilcoxon test");
  std::string ratings_path, pooling = "pairs";
  bool csv = false;
  ratings->add_option("file", ratings_path)->required()->check(CLI::ExistingFile);
  ratings->add_option("--pooling", pooling)->check(CLI::IsMember({"pairs", "category-means"}));
  ratings->add_flag("--csv", csv);
  auto* events = analyze->add_subcommand("events", "coded behaviour event rates");
  std::string events_path;
  std::optional<double> duration;
  events->add_option("file", events_path)->required()->check(CLI::ExistingFile);
  events->add_option("--duration", duration, "session length in minutes");
  events->add_flag("--csv", csv);

  auto* screen = app.add_subcommand("screen", "screening instruments");
  screen->require_subcommand(1);
  auto* aes = screen->add_subcommand("aes", "score an 18-item apathy scale");
  auto* sage = screen->add_subcommand("sage", "classify a cognitive screening total");
  std::vector<std::string> items;
  int sage_score = 0;
  aes->add_option("items", items, "18 item values, space or comma separated")->required();
  sage->add_option("score", sage_score)->required();

  auto* emu = app.add_subcommand("wand-emulator", "stream emulated wand frames over UDP");
  int emu_port = wand::kDefaultUdpPort;
  std::string emu_color = "Red";
  double emu_seconds = 10.0, emu_hz = 50.0, emu_strike = 1.0;
  emu->add_option("-p,--port", emu_port);
  emu->add_option("--color", emu_color)->check(CLI::IsMember({"Red", "Blue"}));
  emu->add_option("--seconds", emu_seconds);
  emu->add_option("--hz", emu_hz)->check(CLI::PositiveNumber);
  emu->add_option("--strike-every", emu_strike)->check(CLI::PositiveNumber);

  auto* vocab = app.add_subcommand("vocab", "print the seed feedback vocabulary as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve_cmd) return serve(config_path, host, port, token);
    if (*ratings) return analyze_ratings(ratings_path, pooling, csv);
    if (*events) return analyze_events(events_path, duration, csv);
    if (*aes) {
      auto values = parse_ints(items);
      std::cout << analysis::score_aes(values) << "\n";
      return 0;
    }
    if (*sage) {
      std::cout << analysis::to_string(analysis::classify_sage(sage_score)) << "\n";
      return 0;
    }
    if (*emu) return wand_emulator(emu_port, emu_color, emu_seconds, emu_hz, emu_strike);
    if (*vocab) {
      std::cout << Vocabulary::seed().to_json().dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
