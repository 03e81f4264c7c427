#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "tscp/datasets.hpp"

namespace tscp::datasets {

namespace {

std::uint32_t le32(const std::string& b, std::size_t at) {
  if (at + 4 > b.size()) throw Error(ErrorKind::ParseError, "truncated zip archive");
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(const std::string& b, std::size_t at) {
  if (at + 2 > b.size()) throw Error(ErrorKind::ParseError, "truncated zip archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

std::string inflate_raw(std::string_view compressed, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw Error(ErrorKind::ParseError, "zlib init failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) {
    throw Error(ErrorKind::ParseError, "corrupt deflate stream in zip archive");
  }
  return out;
}

// Monash "1996-03-18 00-00-00" -> RFC 3339.
Timestamp parse_tsf_timestamp(std::string text) {
  if (text.size() == 19 && text[10] == ' ' && text[13] == '-' && text[16] == '-') {
    text[10] = 'T';
    text[13] = ':';
    text[16] = ':';
  }
  return parse_timestamp(text);
}

std::optional<Frequency> tsf_frequency(std::string_view name) {
  if (name == "hourly") return Frequency(FrequencyKind::Hourly);
  if (name == "daily") return Frequency(FrequencyKind::Daily);
  if (name == "weekly") return Frequency(FrequencyKind::Weekly);
  if (name == "monthly") return Frequency(FrequencyKind::Monthly);
  return std::nullopt;
}

}  // namespace

std::string extract_zip_entry(const std::filesystem::path& archive, std::string_view suffix) {
  std::ifstream in(archive, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + archive.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 22) throw Error(ErrorKind::ParseError, archive.string() + " is not a zip archive");

  std::size_t eocd = std::string::npos;
  for (std::size_t i = bytes.size() - 22 + 1; i-- > 0;) {
    if (le32(bytes, i) == 0x06054b50) {
      eocd = i;
      break;
    }
    if (bytes.size() - i > 22 + 65535) break;
  }
  if (eocd == std::string::npos) throw Error(ErrorKind::ParseError, archive.string() + " has no zip directory");

  const std::uint16_t entries = le16(bytes, eocd + 10);
  std::size_t at = le32(bytes, eocd + 16);
  for (std::uint16_t e = 0; e < entries; ++e) {
    if (le32(bytes, at) != 0x02014b50) throw Error(ErrorKind::ParseError, "bad zip central directory");
    const std::uint16_t method = le16(bytes, at + 10);
    const std::uint32_t compressed = le32(bytes, at + 20);
    const std::uint32_t size = le32(bytes, at + 24);
    const std::uint16_t name_len = le16(bytes, at + 28);
    const std::uint16_t extra_len = le16(bytes, at + 30);
    const std::uint16_t comment_len = le16(bytes, at + 32);
    const std::uint32_t local = le32(bytes, at + 42);
    const std::string name = bytes.substr(at + 46, name_len);
    at += 46 + name_len + extra_len + comment_len;
    if (name.size() < suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    if (le32(bytes, local) != 0x04034b50) throw Error(ErrorKind::ParseError, "bad zip local header");
    const std::size_t data = local + 30 + le16(bytes, local + 26) + le16(bytes, local + 28);
    if (data + compressed > bytes.size()) throw Error(ErrorKind::ParseError, "truncated zip entry");
    const std::string_view payload(bytes.data() + data, compressed);
    if (method == 0) return std::string(payload);
    if (method == 8) return inflate_raw(payload, size);
    throw Error(ErrorKind::ParseError, "unsupported zip compression method " + std::to_string(method));
  }
  throw Error(ErrorKind::ParseError, archive.string() + " has no entry ending in '" + std::string(suffix) + "'");
}

std::vector<TimeSeries> read_tsf(std::istream& in, std::optional<Frequency> frequency) {
  std::vector<std::string> attributes;
  std::vector<TimeSeries> out;
  std::string line;
  std::size_t line_no = 0;
  bool in_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!in_data) {
      std::istringstream words(line);
      std::string tag;
      words >> tag;
      if (tag == "@attribute") {
        std::string name;
        words >> name;
        attributes.push_back(name);
      } else if (tag == "@frequency") {
        std::string name;
        words >> name;
        if (!frequency) frequency = tsf_frequency(name);
      } else if (tag == "@data") {
        if (!frequency) throw Error(ErrorKind::ParseError, "tsf file has no supported @frequency");
        in_data = true;
      }
      continue;
    }

    std::vector<std::string> fields;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      // Timestamps contain no ':' in this format, so a plain split is safe.
      const auto colon = line.find(':', pos);
      if (colon == std::string::npos) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": missing attributes");
      }
      fields.push_back(line.substr(pos, colon - pos));
      pos = colon + 1;
    }
    std::string id = "series_" + std::to_string(out.size());
    Timestamp start = std::chrono::sys_days{std::chrono::year{2000} / 1 / 1};
    for (std::size_t i = 0; i < attributes.size(); ++i) {
      if (attributes[i] == "series_name") id = fields[i];
      if (attributes[i] == "start_timestamp") start = parse_tsf_timestamp(fields[i]);
    }
    std::vector<double> values;
    std::stringstream stream(line.substr(pos));
    std::string cell;
    while (std::getline(stream, cell, ',')) {
      if (cell == "?" || cell.empty()) {
        throw Error(ErrorKind::MissingValue,
                    "series '" + id + "' index " + std::to_string(values.size()));
      }
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
    }
    out.emplace_back(std::move(id), start, *frequency, std::move(values));
  }
  if (!in_data) throw Error(ErrorKind::ParseError, "tsf file has no @data section");
  return out;
}

std::vector<TimeSeries> load_tsf(const std::filesystem::path& path, std::optional<Frequency> frequency) {
  if (path.extension() == ".zip") {
    std::istringstream in(extract_zip_entry(path, ".tsf"));
    return read_tsf(in, frequency);
  }
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  return read_tsf(in, frequency);
}

}  // namespace tscp::datasets
