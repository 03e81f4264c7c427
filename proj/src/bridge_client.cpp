#include <thread>

#include "tscp/bridge.hpp"

namespace tscp::bridge {

AdapterClient::AdapterClient(Endpoint endpoint, ClientOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {
  if (options_.timeout_ms <= 0) throw Error(ErrorKind::ConfigError, "timeout must be positive");
  if (options_.connect_attempts <= 0) options_.connect_attempts = 1;
}

AdapterClient::~AdapterClient() = default;

void AdapterClient::disconnect() {
  channel_.reset();
  info_.reset();
}

void AdapterClient::connect() {
  std::string last_error;
  for (int attempt = 1; attempt <= options_.connect_attempts; ++attempt) {
    try {
      channel_ = open_channel(endpoint_);
      channel_->write_line(encode_hello());
      const auto deadline =
          std::chrono::steady_clock::now() + std::chrono::milliseconds(options_.timeout_ms);
      const auto line = channel_->read_line(deadline);
      if (!line) throw Error(ErrorKind::Unreachable, "adapter closed the stream before replying");
      info_ = decode_info(*line);
      return;
    } catch (const Error& e) {
      channel_.reset();
      if (e.kind() == ErrorKind::ProtocolMismatch) throw;
      last_error = e.what();
    }
    if (attempt < options_.connect_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.retry_backoff_ms * attempt));
    }
  }
  throw Error(ErrorKind::Unreachable, endpoint_.describe() + " unreachable after " +
                                          std::to_string(options_.connect_attempts) +
                                          " attempts (" + last_error + ")");
}

const AdapterInfo& AdapterClient::handshake() {
  if (!channel_ || !info_) connect();
  return *info_;
}

std::string AdapterClient::next_request_id(std::string_view series_id, std::size_t window_index) {
  return std::string(series_id) + "/" + std::to_string(window_index) + "/" +
         std::to_string(++sequence_);
}

ForecastResponse AdapterClient::forecast_remote(const ForecastRequest& request) {
  return forecast_remote(request, options_.timeout_ms);
}

ForecastResponse AdapterClient::forecast_remote(const ForecastRequest& request, int timeout_ms) {
  handshake();
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  try {
    channel_->write_line(encode_request(request));
    const auto line = channel_->read_line(deadline);
    if (!line) throw Error(ErrorKind::Unreachable, "adapter closed the stream");
    return decode_response(*line, request);
  } catch (const Error& e) {
    // An adapter-reported error leaves the stream in sync; anything else may not.
    if (e.kind() != ErrorKind::AdapterError) {
      channel_->abandon();
      disconnect();
    }
    throw;
  }
}

ExternalForecaster::ExternalForecaster(std::string name, Endpoint endpoint, ClientOptions options,
                                       std::size_t connections)
    : name_(std::move(name)), endpoint_(std::move(endpoint)), options_(options) {
  slots_.resize(std::max<std::size_t>(connections, 1));
}

std::size_t ExternalForecaster::acquire() {
  std::unique_lock lock(mutex_);
  for (;;) {
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (!slots_[i].busy) {
        slots_[i].busy = true;
        if (!slots_[i].client) slots_[i].client = std::make_unique<AdapterClient>(endpoint_, options_);
        return i;
      }
    }
    available_.wait(lock);
  }
}

void ExternalForecaster::release(std::size_t index) {
  {
    std::lock_guard lock(mutex_);
    slots_[index].busy = false;
  }
  available_.notify_one();
}

AdapterInfo ExternalForecaster::check() {
  const std::size_t slot = acquire();
  try {
    AdapterInfo info = slots_[slot].client->handshake();
    release(slot);
    return info;
  } catch (...) {
    release(slot);
    throw;
  }
}

Forecast ExternalForecaster::predict(const forecasters::ForecastQuery& query) {
  const std::size_t slot = acquire();
  auto& client = *slots_[slot].client;
  const auto started = std::chrono::steady_clock::now();
  try {
    const AdapterInfo& info = client.handshake();
    if (query.context.size() > static_cast<std::size_t>(info.max_context)) {
      throw Error(ErrorKind::ContextTooLong,
                  "context of " + std::to_string(query.context.size()) + " exceeds adapter " +
                      info.name + " max_context " + std::to_string(info.max_context));
    }
    ForecastRequest request;
    request.request_id = client.next_request_id(query.series_id, query.window_index);
    request.series_id = std::string(query.series_id);
    request.context.assign(query.context.begin(), query.context.end());
    request.horizon = query.horizon;
    request.frequency = query.frequency;
    request.season_length = query.season_length;
    ForecastResponse response = client.forecast_remote(request);
    const double ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - started).count();
    {
      std::lock_guard lock(mutex_);
      ++latency_.requests;
      latency_.total_ms += ms;
      latency_.max_ms = std::max(latency_.max_ms, ms);
      latency_.adapter_total_ms += response.elapsed_ms;
    }
    release(slot);
    return Forecast(std::move(response.point));
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      ++latency_.failures;
    }
    release(slot);
    throw;
  }
}

LatencyStats ExternalForecaster::latency() const {
  std::lock_guard lock(mutex_);
  return latency_;
}

}  // namespace tscp::bridge
