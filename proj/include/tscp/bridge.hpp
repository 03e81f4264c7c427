#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tscp/domain.hpp"
#include "tscp/forecasters.hpp"

namespace tscp::bridge {

inline constexpr int kProtocolVersion = 1;
inline constexpr int kMinAdapterContext = 32;
inline constexpr int kDefaultTimeoutMs = 120000;

struct ForecastRequest {
  std::string request_id;
  std::string series_id;
  std::vector<double> context;
  int horizon = 1;
  Frequency frequency;
  int season_length = 1;
};

struct ForecastResponse {
  std::string request_id;
  std::vector<double> point;
  std::int64_t elapsed_ms = 0;
};

struct AdapterInfo {
  std::string name;
  std::vector<Frequency> supported_frequencies;
  int max_context = 0;
  int protocol_version = 0;

  bool supports(Frequency f) const;
};

// ---- wire format -------------------------------------------------------------
// One JSON object per line; key order is fixed.

std::string encode_hello();
std::string encode_request(const ForecastRequest& request);
std::string encode_info(const AdapterInfo& info);
std::string encode_result(const ForecastResponse& response);
std::string encode_error(std::string_view request_id, std::string_view message);

AdapterInfo decode_info(std::string_view line);
ForecastRequest decode_request(std::string_view line);

// Validates a forecast reply against its request. Throws AdapterError for an
// error message, MalformedResponse for anything that breaks the contract
// (bad JSON, wrong id, wrong length, non-finite values).
ForecastResponse decode_response(std::string_view line, const ForecastRequest& request);

// ---- transport ---------------------------------------------------------------

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  // Returns nullopt on end of stream; throws Timeout past the deadline.
  virtual std::optional<std::string> read_line(std::chrono::steady_clock::time_point deadline) = 0;
  // The peer is stuck or out of sync; tear down without waiting for a clean exit.
  virtual void abandon() {}
};

struct Endpoint {
  enum class Kind { Process, Tcp };
  Kind kind = Kind::Process;
  std::string command;  // Process: run through /bin/sh -c
  std::string host;     // Tcp
  int port = 0;

  // "host:port" or "tcp://host:port" selects TCP; anything else is a command.
  static Endpoint parse(std::string_view text);
  std::string describe() const;
};

std::unique_ptr<LineChannel> open_channel(const Endpoint& endpoint);

// ---- client ------------------------------------------------------------------

struct ClientOptions {
  int timeout_ms = kDefaultTimeoutMs;
  int connect_attempts = 3;
  int retry_backoff_ms = 100;
};

// One connection, one request in flight. A timeout or a malformed reply
// drops the connection so a late reply can never be read as the answer to
// a later request; the next call reconnects.
class AdapterClient {
 public:
  explicit AdapterClient(Endpoint endpoint, ClientOptions options = {});
  ~AdapterClient();

  AdapterClient(const AdapterClient&) = delete;
  AdapterClient& operator=(const AdapterClient&) = delete;

  const AdapterInfo& handshake();
  ForecastResponse forecast_remote(const ForecastRequest& request);
  ForecastResponse forecast_remote(const ForecastRequest& request, int timeout_ms);

  const std::optional<AdapterInfo>& info() const { return info_; }
  std::string next_request_id(std::string_view series_id, std::size_t window_index);

 private:
  void connect();
  void disconnect();

  Endpoint endpoint_;
  ClientOptions options_;
  std::unique_ptr<LineChannel> channel_;
  std::optional<AdapterInfo> info_;
  std::uint64_t sequence_ = 0;
};

struct LatencyStats {
  std::size_t requests = 0;
  std::size_t failures = 0;
  double total_ms = 0.0;
  double max_ms = 0.0;
  std::int64_t adapter_total_ms = 0;

  double mean_ms() const { return requests == 0 ? 0.0 : total_ms / static_cast<double>(requests); }
};

// Forecaster backed by a pool of adapter connections.
class ExternalForecaster final : public forecasters::Forecaster {
 public:
  ExternalForecaster(std::string name, Endpoint endpoint, ClientOptions options = {},
                     std::size_t connections = 1);

  std::string_view name() const override { return name_; }
  Forecast predict(const forecasters::ForecastQuery& query) override;

  // Connects one client and returns the adapter's advertised info.
  AdapterInfo check();
  LatencyStats latency() const;

 private:
  struct Slot {
    std::unique_ptr<AdapterClient> client;
    bool busy = false;
  };

  std::size_t acquire();
  void release(std::size_t index);

  std::string name_;
  Endpoint endpoint_;
  ClientOptions options_;
  std::vector<Slot> slots_;
  mutable std::mutex mutex_;
  std::condition_variable available_;
  LatencyStats latency_;
};

}  // namespace tscp::bridge
