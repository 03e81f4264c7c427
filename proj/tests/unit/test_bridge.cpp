#include <gtest/gtest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "tscp/bridge.hpp"

using namespace tscp;
using namespace tscp::bridge;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no tscp::Error thrown";
  return ErrorKind::IoError;
}

std::string adapter(const std::string& flags = {}) {
  return std::string(TSCP_ECHO_ADAPTER) + (flags.empty() ? "" : " " + flags);
}

ForecastRequest request(std::string id, std::vector<double> context, int h) {
  ForecastRequest r;
  r.request_id = std::move(id);
  r.series_id = "s1";
  r.context = std::move(context);
  r.horizon = h;
  r.frequency = Frequency(FrequencyKind::Hourly);
  r.season_length = 24;
  return r;
}

ClientOptions quick(int timeout_ms = 5000) {
  ClientOptions o;
  o.timeout_ms = timeout_ms;
  o.connect_attempts = 2;
  o.retry_backoff_ms = 10;
  return o;
}

// Runs the echo adapter as a TCP server for the lifetime of the object.
class TcpAdapter {
 public:
  explicit TcpAdapter(std::vector<std::string> extra = {}) {
    port_file_ = fs::temp_directory_path() / ("tscp_port_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove(port_file_);
    pid_ = ::fork();
    if (pid_ == 0) {
      std::vector<std::string> args{TSCP_ECHO_ADAPTER, "--port", "0", "--port-file", port_file_.string()};
      args.insert(args.end(), extra.begin(), extra.end());
      std::vector<char*> argv;
      for (auto& a : args) argv.push_back(a.data());
      argv.push_back(nullptr);
      ::execv(argv[0], argv.data());
      std::_Exit(127);
    }
    for (int i = 0; i < 500 && !fs::exists(port_file_); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));
    std::ifstream(port_file_) >> port_;
  }
  ~TcpAdapter() {
    ::kill(pid_, SIGTERM);
    ::waitpid(pid_, nullptr, 0);
    fs::remove(port_file_);
  }
  int port() const { return port_; }

 private:
  static inline int counter_ = 0;
  fs::path port_file_;
  pid_t pid_ = -1;
  int port_ = 0;
};

}  // namespace

TEST(Wire, ExactEncodings) {
  EXPECT_EQ(encode_hello(), R"({"v":1,"type":"hello"})");
  auto r = request("s1/0/1", {1.5, 2.0}, 3);
  EXPECT_EQ(encode_request(r),
            R"({"v":1,"type":"forecast","id":"s1/0/1","series":"s1","context":[1.5,2.0],"h":3,"freq":"H","m":24})");
  ForecastResponse resp{"s1/0/1", {2.0, 2.0, 2.0}, 4};
  EXPECT_EQ(encode_result(resp), R"({"v":1,"type":"result","id":"s1/0/1","point":[2.0,2.0,2.0],"ms":4})");
  EXPECT_EQ(encode_error("x", "bad"), R"({"v":1,"type":"error","id":"x","msg":"bad"})");
  AdapterInfo info{"echo", {Frequency(FrequencyKind::Hourly), Frequency(FrequencyKind::Monthly)}, 512, 1};
  EXPECT_EQ(encode_info(info), R"({"v":1,"type":"info","name":"echo","max_context":512,"freqs":["H","M"]})");
}

TEST(Wire, RoundTrips) {
  const auto r = request("a/1/2", {0.1, -3e-7, 123456789.25}, 2);
  const auto back = decode_request(encode_request(r));
  EXPECT_EQ(back.request_id, r.request_id);
  EXPECT_EQ(back.context, r.context);
  EXPECT_EQ(back.horizon, 2);
  EXPECT_EQ(back.season_length, 24);
  const AdapterInfo info{"m", {Frequency(FrequencyKind::Daily)}, 64, 1};
  const auto decoded = decode_info(encode_info(info));
  EXPECT_EQ(decoded.name, "m");
  EXPECT_EQ(decoded.max_context, 64);
  EXPECT_TRUE(decoded.supports(Frequency(FrequencyKind::Daily)));
  EXPECT_FALSE(decoded.supports(Frequency(FrequencyKind::Hourly)));
}

TEST(Wire, ResponseValidation) {
  const auto r = request("id1", {1.0}, 2);
  EXPECT_EQ(decode_response(R"({"v":1,"type":"result","id":"id1","point":[1,2],"ms":0})", r).point,
            (std::vector<double>{1, 2}));
  EXPECT_EQ(kind_of([&] { decode_response(R"({"v":1,"type":"result","id":"id1","point":[1],"ms":0})", r); }),
            ErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of([&] { decode_response(R"({"v":1,"type":"result","id":"id1","point":[1,NaN],"ms":0})", r); }),
            ErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of([&] { decode_response(R"({"v":1,"type":"result","id":"id1","point":[1,null],"ms":0})", r); }),
            ErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of([&] { decode_response(R"({"v":1,"type":"result","id":"other","point":[1,2],"ms":0})", r); }),
            ErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of([&] { decode_response("not json", r); }), ErrorKind::MalformedResponse);
  EXPECT_EQ(kind_of([&] { decode_response(R"({"v":1,"type":"error","id":"id1","msg":"oom"})", r); }),
            ErrorKind::AdapterError);
}

TEST(Wire, HandshakeValidation) {
  EXPECT_EQ(decode_info(R"({"v":1,"type":"info","name":"x","max_context":512,"freqs":["H"]})").max_context, 512);
  EXPECT_EQ(decode_info(R"({"v":1,"type":"info","name":"x","max_context":32,"freqs":["H"]})").max_context, 32);
  EXPECT_EQ(kind_of([] { decode_info(R"({"v":2,"type":"info","name":"x","max_context":512,"freqs":["H"]})"); }),
            ErrorKind::ProtocolMismatch);
  EXPECT_EQ(kind_of([] { decode_info(R"({"v":1,"type":"info","name":"x","max_context":31,"freqs":["H"]})"); }),
            ErrorKind::ProtocolMismatch);
}

TEST(Endpoint, Parsing) {
  const auto tcp = Endpoint::parse("127.0.0.1:9000");
  EXPECT_EQ(tcp.kind, Endpoint::Kind::Tcp);
  EXPECT_EQ(tcp.port, 9000);
  EXPECT_EQ(Endpoint::parse("tcp://localhost:81").host, "localhost");
  EXPECT_EQ(Endpoint::parse("python -m adapter serve").kind, Endpoint::Kind::Process);
}

TEST(Client, EchoOverProcess) {
  AdapterClient client(Endpoint::parse(adapter()), quick());
  const auto& info = client.handshake();
  EXPECT_EQ(info.name, "echo");
  EXPECT_EQ(info.max_context, 512);
  const auto id = client.next_request_id("s1", 3);
  EXPECT_EQ(id.rfind("s1/3/", 0), 0u);
  const auto resp = client.forecast_remote(request(id, {4, 5, 6.25}, 4));
  EXPECT_EQ(resp.point, (std::vector<double>{6.25, 6.25, 6.25, 6.25}));
  EXPECT_NE(client.next_request_id("s1", 3), id);
}

TEST(Client, EchoOverTcp) {
  TcpAdapter server;
  ASSERT_GT(server.port(), 0);
  AdapterClient client(Endpoint::parse("127.0.0.1:" + std::to_string(server.port())), quick());
  EXPECT_EQ(client.handshake().name, "echo");
  EXPECT_EQ(client.forecast_remote(request("x/0/1", {1, 9}, 2)).point, (std::vector<double>{9, 9}));
}

TEST(Client, ContractViolations) {
  {
    AdapterClient client(Endpoint::parse(adapter("--mode nan")), quick());
    EXPECT_EQ(kind_of([&] { client.forecast_remote(request("a", {1, 2}, 3)); }), ErrorKind::MalformedResponse);
  }
  {
    AdapterClient client(Endpoint::parse(adapter("--mode short")), quick());
    EXPECT_EQ(kind_of([&] { client.forecast_remote(request("a", {1, 2}, 3)); }), ErrorKind::MalformedResponse);
  }
  {
    AdapterClient client(Endpoint::parse(adapter("--mode wrongid")), quick());
    EXPECT_EQ(kind_of([&] { client.forecast_remote(request("a", {1, 2}, 3)); }), ErrorKind::MalformedResponse);
  }
  {
    AdapterClient client(Endpoint::parse(adapter("--mode garbage")), quick());
    EXPECT_EQ(kind_of([&] { client.forecast_remote(request("a", {1, 2}, 3)); }), ErrorKind::MalformedResponse);
  }
  {
    AdapterClient client(Endpoint::parse(adapter("--mode error")), quick());
    EXPECT_EQ(kind_of([&] { client.forecast_remote(request("a", {1, 2}, 3)); }), ErrorKind::AdapterError);
    // The connection survives an adapter-reported error.
    EXPECT_EQ(kind_of([&] { client.forecast_remote(request("b", {1, 2}, 3)); }), ErrorKind::AdapterError);
  }
}

TEST(Client, HandshakeFailures) {
  AdapterClient v2(Endpoint::parse(adapter("--version 2")), quick());
  EXPECT_EQ(kind_of([&] { v2.handshake(); }), ErrorKind::ProtocolMismatch);
  AdapterClient tiny(Endpoint::parse(adapter("--max-context 16")), quick());
  EXPECT_EQ(kind_of([&] { tiny.handshake(); }), ErrorKind::ProtocolMismatch);
}

TEST(Client, UnreachableReportsAttempts) {
  // Bind then release a port so nothing is listening on it.
  int port = 0;
  {
    TcpAdapter probe;
    port = probe.port();
  }
  AdapterClient client(Endpoint::parse("127.0.0.1:" + std::to_string(port)), quick());
  try {
    client.handshake();
    FAIL() << "expected Unreachable";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unreachable);
    EXPECT_NE(std::string(e.what()).find("2 attempts"), std::string::npos) << e.what();
  }
  AdapterClient missing(Endpoint::parse("/nonexistent/adapter-binary 2>/dev/null"), quick());
  EXPECT_EQ(kind_of([&] { missing.handshake(); }), ErrorKind::Unreachable);
}

TEST(Client, TimeoutThenReconnect) {
  AdapterClient client(Endpoint::parse(adapter("--sleep-ms 300")), quick(5000));
  client.handshake();
  const auto started = std::chrono::steady_clock::now();
  EXPECT_EQ(kind_of([&] { client.forecast_remote(request("late", {1, 2}, 2), 50); }), ErrorKind::Timeout);
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::milliseconds(250));
  // A fresh connection answers the next request; the late reply is never read.
  const auto resp = client.forecast_remote(request("next", {3, 4}, 2), 5000);
  EXPECT_EQ(resp.request_id, "next");
  EXPECT_EQ(resp.point, (std::vector<double>{4, 4}));
}

TEST(External, BehavesLikeNaive) {
  ExternalForecaster ext("echo", Endpoint::parse(adapter()), quick(), 2);
  forecasters::NaiveForecaster naive;
  std::vector<double> ctx(64);
  for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] = 0.1 * static_cast<double>(i * i % 17);
  forecasters::ForecastQuery q;
  q.series_id = "s";
  q.context = ctx;
  q.horizon = 7;
  q.frequency = Frequency(FrequencyKind::Daily);
  q.season_length = 7;
  EXPECT_EQ(ext.predict(q).point, naive.predict(q).point);
  EXPECT_EQ(ext.latency().requests, 1u);

  std::vector<double> too_long(600, 1.0);
  q.context = too_long;
  EXPECT_EQ(kind_of([&] { ext.predict(q); }), ErrorKind::ContextTooLong);
}

TEST(External, ConcurrentRequestsStayPaired) {
  ExternalForecaster ext("echo", Endpoint::parse(adapter()), quick(), 3);
  std::vector<std::thread> threads;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < 6; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) {
        std::vector<double> ctx{static_cast<double>(t), static_cast<double>(t * 100 + i)};
        forecasters::ForecastQuery q;
        q.series_id = "s";
        q.window_index = static_cast<std::size_t>(t);
        q.context = ctx;
        q.horizon = 3;
        if (ext.predict(q).point != std::vector<double>(3, ctx.back())) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_EQ(ext.latency().requests, 120u);
}
