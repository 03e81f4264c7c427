#include <cmath>

#include <nlohmann/json.hpp>

#include "tscp/bridge.hpp"

namespace tscp::bridge {

using ordered_json = nlohmann::ordered_json;

bool AdapterInfo::supports(Frequency f) const {
  for (const auto& s : supported_frequencies) {
    if (s == f) return true;
  }
  return false;
}

std::string encode_hello() {
  ordered_json j;
  j["v"] = kProtocolVersion;
  j["type"] = "hello";
  return j.dump();
}

std::string encode_request(const ForecastRequest& request) {
  ordered_json j;
  j["v"] = kProtocolVersion;
  j["type"] = "forecast";
  j["id"] = request.request_id;
  j["series"] = request.series_id;
  j["context"] = request.context;
  j["h"] = request.horizon;
  j["freq"] = std::string(1, request.frequency.code());
  j["m"] = request.season_length;
  return j.dump();
}

std::string encode_info(const AdapterInfo& info) {
  ordered_json j;
  j["v"] = info.protocol_version;
  j["type"] = "info";
  j["name"] = info.name;
  j["max_context"] = info.max_context;
  auto freqs = ordered_json::array();
  for (const auto& f : info.supported_frequencies) freqs.push_back(std::string(1, f.code()));
  j["freqs"] = std::move(freqs);
  return j.dump();
}

std::string encode_result(const ForecastResponse& response) {
  ordered_json j;
  j["v"] = kProtocolVersion;
  j["type"] = "result";
  j["id"] = response.request_id;
  j["point"] = response.point;
  j["ms"] = response.elapsed_ms;
  return j.dump();
}

std::string encode_error(std::string_view request_id, std::string_view message) {
  ordered_json j;
  j["v"] = kProtocolVersion;
  j["type"] = "error";
  j["id"] = std::string(request_id);
  j["msg"] = std::string(message);
  return j.dump();
}

namespace {

ordered_json parse_object(std::string_view line, ErrorKind on_failure) {
  ordered_json j = ordered_json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(on_failure, "not a JSON object: " + std::string(line.substr(0, 200)));
  }
  return j;
}

std::string string_field(const ordered_json& j, const char* key, ErrorKind on_failure) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(on_failure, std::string("missing string field '") + key + "'");
  }
  return it->get<std::string>();
}

std::int64_t int_field(const ordered_json& j, const char* key, ErrorKind on_failure) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    throw Error(on_failure, std::string("missing integer field '") + key + "'");
  }
  return it->get<std::int64_t>();
}

std::vector<double> number_array(const ordered_json& j, const char* key, ErrorKind on_failure) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw Error(on_failure, std::string("missing array field '") + key + "'");
  }
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_number()) throw Error(on_failure, std::string("non-numeric entry in '") + key + "'");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw Error(on_failure, std::string("non-finite entry in '") + key + "'");
    out.push_back(d);
  }
  return out;
}

}  // namespace

AdapterInfo decode_info(std::string_view line) {
  const auto j = parse_object(line, ErrorKind::ProtocolMismatch);
  AdapterInfo info;
  info.protocol_version = static_cast<int>(int_field(j, "v", ErrorKind::ProtocolMismatch));
  if (info.protocol_version != kProtocolVersion) {
    throw Error(ErrorKind::ProtocolMismatch,
                "adapter speaks protocol v" + std::to_string(info.protocol_version) +
                    ", client speaks v" + std::to_string(kProtocolVersion));
  }
  if (string_field(j, "type", ErrorKind::ProtocolMismatch) != "info") {
    throw Error(ErrorKind::ProtocolMismatch, "expected an info message");
  }
  info.name = string_field(j, "name", ErrorKind::ProtocolMismatch);
  info.max_context = static_cast<int>(int_field(j, "max_context", ErrorKind::ProtocolMismatch));
  if (info.max_context < kMinAdapterContext) {
    throw Error(ErrorKind::ProtocolMismatch,
                "adapter max_context " + std::to_string(info.max_context) + " is below " +
                    std::to_string(kMinAdapterContext));
  }
  const auto freqs = j.find("freqs");
  if (freqs == j.end() || !freqs->is_array()) {
    throw Error(ErrorKind::ProtocolMismatch, "missing array field 'freqs'");
  }
  for (const auto& f : *freqs) {
    if (!f.is_string()) throw Error(ErrorKind::ProtocolMismatch, "non-string frequency");
    try {
      info.supported_frequencies.push_back(Frequency::parse(f.get<std::string>()));
    } catch (const Error&) {
      throw Error(ErrorKind::ProtocolMismatch, "unknown frequency '" + f.get<std::string>() + "'");
    }
  }
  return info;
}

ForecastRequest decode_request(std::string_view line) {
  const auto j = parse_object(line, ErrorKind::MalformedResponse);
  if (int_field(j, "v", ErrorKind::ProtocolMismatch) != kProtocolVersion) {
    throw Error(ErrorKind::ProtocolMismatch, "unsupported protocol version");
  }
  if (string_field(j, "type", ErrorKind::MalformedResponse) != "forecast") {
    throw Error(ErrorKind::MalformedResponse, "expected a forecast message");
  }
  ForecastRequest request;
  request.request_id = string_field(j, "id", ErrorKind::MalformedResponse);
  request.series_id = string_field(j, "series", ErrorKind::MalformedResponse);
  request.context = number_array(j, "context", ErrorKind::MalformedResponse);
  request.horizon = static_cast<int>(int_field(j, "h", ErrorKind::MalformedResponse));
  request.frequency = Frequency::parse(string_field(j, "freq", ErrorKind::MalformedResponse));
  request.season_length = static_cast<int>(int_field(j, "m", ErrorKind::MalformedResponse));
  return request;
}

ForecastResponse decode_response(std::string_view line, const ForecastRequest& request) {
  const auto j = parse_object(line, ErrorKind::MalformedResponse);
  if (int_field(j, "v", ErrorKind::MalformedResponse) != kProtocolVersion) {
    throw Error(ErrorKind::MalformedResponse, "reply uses another protocol version");
  }
  const std::string type = string_field(j, "type", ErrorKind::MalformedResponse);
  const std::string id = string_field(j, "id", ErrorKind::MalformedResponse);
  if (id != request.request_id) {
    throw Error(ErrorKind::MalformedResponse,
                "reply id '" + id + "' does not match request '" + request.request_id + "'");
  }
  if (type == "error") {
    throw Error(ErrorKind::AdapterError, string_field(j, "msg", ErrorKind::MalformedResponse));
  }
  if (type != "result") {
    throw Error(ErrorKind::MalformedResponse, "unexpected message type '" + type + "'");
  }
  ForecastResponse response;
  response.request_id = id;
  response.point = number_array(j, "point", ErrorKind::MalformedResponse);
  if (response.point.size() != static_cast<std::size_t>(request.horizon)) {
    throw Error(ErrorKind::MalformedResponse,
                "reply has " + std::to_string(response.point.size()) + " points for horizon " +
                    std::to_string(request.horizon));
  }
  response.elapsed_ms = int_field(j, "ms", ErrorKind::MalformedResponse);
  if (response.elapsed_ms < 0) throw Error(ErrorKind::MalformedResponse, "negative elapsed ms");
  return response;
}

}  // namespace tscp::bridge
