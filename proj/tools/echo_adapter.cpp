// Reference adapter for the forecast bridge. In the default "echo" mode it
// repeats the last context value, so it forecasts exactly like Naive. The
// other modes misbehave on purpose for tests.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "tscp/bridge.hpp"

namespace {

using namespace tscp;

struct Settings {
  std::string mode = "echo";
  std::string name = "echo";
  int version = bridge::kProtocolVersion;
  int max_context = 512;
  std::string freqs = "H,D,W,M";
  int sleep_ms = 0;
  int fail_after = -1;  // exit without replying after this many forecasts
};

std::string reply(const Settings& s, const std::string& line, int& served) {
  if (line.find("\"hello\"") != std::string::npos) {
    bridge::AdapterInfo info;
    info.name = s.name;
    info.max_context = s.max_context;
    info.protocol_version = s.version;
    std::stringstream freqs(s.freqs);
    std::string code;
    while (std::getline(freqs, code, ',')) info.supported_frequencies.push_back(Frequency::parse(code));
    return bridge::encode_info(info);
  }

  bridge::ForecastRequest request;
  try {
    request = bridge::decode_request(line);
  } catch (const std::exception& e) {
    return bridge::encode_error("", e.what());
  }
  if (s.fail_after >= 0 && served >= s.fail_after) std::exit(3);
  ++served;

  const auto started = std::chrono::steady_clock::now();
  if (s.sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(s.sleep_ms));
  if (s.mode == "error") return bridge::encode_error(request.request_id, "model exploded");
  if (s.mode == "garbage") return "this is not json";
  if (request.context.empty()) return bridge::encode_error(request.request_id, "empty context");

  bridge::ForecastResponse response;
  response.request_id = s.mode == "wrongid" ? request.request_id + "-x" : request.request_id;
  std::size_t h = static_cast<std::size_t>(request.horizon);
  if (s.mode == "short" && h > 0) --h;
  response.point.assign(h, request.context.back());
  if (s.mode == "nan" && !response.point.empty()) response.point[0] = std::nan("");
  response.elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
  std::string out = bridge::encode_result(response);
  if (s.mode == "nan") {
    // The JSON library writes NaN as null; put the literal back.
    if (const auto at = out.find("null"); at != std::string::npos) out.replace(at, 4, "NaN");
  }
  return out;
}

void serve_stream(const Settings& s, std::istream& in, std::ostream& out) {
  int served = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out << reply(s, line, served) << '\n' << std::flush;
  }
}

void serve_socket(const Settings& s, int fd) {
  int served = 0;
  std::string buffer;
  char chunk[4096];
  for (;;) {
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    while ((nl = buffer.find('\n')) != std::string::npos) {
      const std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (line.empty()) continue;
      const std::string answer = reply(s, line, served) + "\n";
      std::size_t sent = 0;
      while (sent < answer.size()) {
        const ssize_t w = ::write(fd, answer.data() + sent, answer.size() - sent);
        if (w <= 0) {
          ::close(fd);
          return;
        }
        sent += static_cast<std::size_t>(w);
      }
    }
  }
  ::close(fd);
}

int listen_tcp(const Settings& s, int port, const std::string& port_file) {
  const int server = ::socket(AF_INET, SOCK_STREAM, 0);
  if (server < 0) {
    std::perror("socket");
    return 1;
  }
  const int yes = 1;
  ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(server, 16) != 0) {
    std::perror("bind");
    return 1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(server, reinterpret_cast<sockaddr*>(&addr), &len);
  const int bound = ntohs(addr.sin_port);
  if (!port_file.empty()) {
    const std::string tmp = port_file + ".tmp";
    std::ofstream(tmp) << bound << '\n';
    std::rename(tmp.c_str(), port_file.c_str());
  }
  std::cerr << "echo_adapter listening on 127.0.0.1:" << bound << '\n';
  for (;;) {
    const int client = ::accept(server, nullptr, nullptr);
    if (client < 0) continue;
    std::thread([s, client] { serve_socket(s, client); }).detach();
  }
}

}  // namespace

int main(int argc, char** argv) {
  Settings s;
  int port = -1;
  std::string port_file;
  CLI::App app{"Line-delimited JSON forecast adapter for testing the bridge"};
  app.add_option("--mode", s.mode, "echo | nan | short | error | garbage | wrongid")
      ->check(CLI::IsMember({"echo", "nan", "short", "error", "garbage", "wrongid"}));
  app.add_option("--name", s.name, "Advertised adapter name");
  app.add_option("--version", s.version, "Advertised protocol version");
  app.add_option("--max-context", s.max_context, "Advertised maximum context length");
  app.add_option("--freqs", s.freqs, "Comma-separated supported frequency codes");
  app.add_option("--sleep-ms", s.sleep_ms, "Delay before every forecast reply");
  app.add_option("--fail-after", s.fail_after, "Exit after serving this many forecasts");
  app.add_option("--port", port, "Listen on 127.0.0.1:PORT instead of stdin/stdout (0 picks one)");
  app.add_option("--port-file", port_file, "Write the bound port here once listening");
  CLI11_PARSE(app, argc, argv);

  if (port >= 0) return listen_tcp(s, port, port_file);
  std::ios::sync_with_stdio(false);
  serve_stream(s, std::cin, std::cout);
  return 0;
}
