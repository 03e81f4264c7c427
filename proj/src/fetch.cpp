#include <curl/curl.h>
#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tscp/datasets.hpp"

namespace tscp::datasets {

namespace fs = std::filesystem;

Manifest Manifest::parse(std::string_view json_text) {
  const auto j = nlohmann::json::parse(json_text.begin(), json_text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("datasets") || !j["datasets"].is_object()) {
    throw Error(ErrorKind::ConfigError, "manifest must be an object with a 'datasets' object");
  }
  Manifest manifest;
  for (const auto& [name, entry] : j["datasets"].items()) {
    if (!entry.is_object()) throw Error(ErrorKind::ConfigError, "manifest entry '" + name + "' is not an object");
    ManifestEntry e;
    e.name = name;
    const auto text = [&](const char* key) -> std::string {
      if (!entry.contains(key) || entry[key].is_null()) return {};
      if (!entry[key].is_string()) {
        throw Error(ErrorKind::ConfigError, "manifest '" + name + "." + key + "' must be a string");
      }
      return entry[key].get<std::string>();
    };
    e.url = text("url");
    e.sha256 = text("sha256");
    e.format = text("format");
    if (e.format.empty()) e.format = "long_csv";
    if (e.format != "long_csv" && e.format != "tsf") {
      throw Error(ErrorKind::ConfigError, "manifest '" + name + "': unknown format '" + e.format + "'");
    }
    e.note = text("note");
    const std::string freq = text("frequency");
    if (freq.empty()) throw Error(ErrorKind::ConfigError, "manifest '" + name + "' needs a frequency");
    try {
      e.frequency = Frequency::parse(freq);
    } catch (const Error& err) {
      throw Error(ErrorKind::ConfigError, err.what());
    }
    manifest.entries_.emplace(name, std::move(e));
  }
  return manifest;
}

Manifest Manifest::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ConfigError, "cannot open manifest " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const ManifestEntry* Manifest::find(std::string_view name) const {
  const auto it = entries_.find(name);
  return it == entries_.end() ? nullptr : &it->second;
}

const ManifestEntry& Manifest::at(std::string_view name) const {
  if (const auto* e = find(name)) return *e;
  throw Error(ErrorKind::ConfigError, "dataset '" + std::string(name) + "' is not in the manifest");
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

fs::path default_cache_dir() {
  if (const char* dir = std::getenv("TSCP_CACHE_DIR"); dir != nullptr && *dir != '\0') return dir;
  if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg != nullptr && *xdg != '\0') {
    return fs::path(xdg) / "tscp";
  }
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return fs::path(home) / ".cache" / "tscp";
  }
  return fs::temp_directory_path() / "tscp-cache";
}

namespace {

// Exclusive advisory lock on a file; held for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorKind::IoError, "cannot open lock " + path.string());
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) throw Error(ErrorKind::IoError, "cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

std::size_t write_to_file(char* data, std::size_t size, std::size_t count, void* user) {
  return std::fwrite(data, size, count, static_cast<std::FILE*>(user)) * size;
}

void download(std::string_view url, const fs::path& target) {
  static std::once_flag curl_init;
  std::call_once(curl_init, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });

  std::FILE* out = std::fopen(target.c_str(), "wb");
  if (out == nullptr) throw Error(ErrorKind::IoError, "cannot write " + target.string());
  CURL* curl = curl_easy_init();
  const std::string url_text(url);
  curl_easy_setopt(curl, CURLOPT_URL, url_text.c_str());
  curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_to_file);
  curl_easy_setopt(curl, CURLOPT_WRITEDATA, out);
  curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl, CURLOPT_CONNECTTIMEOUT, 30L);
  const CURLcode rc = curl_easy_perform(curl);
  curl_easy_cleanup(curl);
  const bool closed = std::fclose(out) == 0;
  if (rc != CURLE_OK || !closed) {
    std::error_code ec;
    fs::remove(target, ec);
    throw Error(ErrorKind::DownloadFailed, url_text + ": " + curl_easy_strerror(rc));
  }
}

std::string file_name_for(std::string_view url) {
  std::string_view path = url;
  if (const auto q = path.find_first_of("?#"); q != std::string_view::npos) path = path.substr(0, q);
  const auto slash = path.find_last_of('/');
  std::string name(slash == std::string_view::npos ? path : path.substr(slash + 1));
  return name.empty() ? "download" : name;
}

}  // namespace

FetchResult fetch_dataset(std::string_view name, std::string_view url, const fs::path& cache_dir,
                          std::string_view sha256) {
  if (name.empty()) throw Error(ErrorKind::ConfigError, "dataset name is empty");
  if (url.empty()) {
    throw Error(ErrorKind::ConfigError,
                "dataset '" + std::string(name) + "' has no source url; supply a long CSV path instead");
  }
  const fs::path dir = cache_dir / std::string(name);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());

  FileLock lock(dir / ".lock");
  const fs::path target = dir / file_name_for(url);
  FetchResult result{target, {}, false};

  if (fs::exists(target)) {
    result.sha256 = sha256_file(target);
    result.from_cache = true;
  } else {
    const fs::path partial = dir / (target.filename().string() + ".part");
    download(url, partial);
    result.sha256 = sha256_file(partial);
    if (!sha256.empty() && result.sha256 != sha256) {
      fs::remove(partial, ec);
      throw Error(ErrorKind::HashMismatch, std::string(name) + ": downloaded sha256 " + result.sha256 +
                                               " != configured " + std::string(sha256));
    }
    fs::rename(partial, target, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot move download into cache: " + ec.message());
  }
  if (!sha256.empty() && result.sha256 != sha256) {
    throw Error(ErrorKind::HashMismatch, std::string(name) + ": cached sha256 " + result.sha256 +
                                             " != configured " + std::string(sha256));
  }
  return result;
}

FetchResult fetch_dataset(const Manifest& manifest, std::string_view name, const fs::path& cache_dir) {
  const ManifestEntry* entry = manifest.find(name);
  if (entry == nullptr) {
    throw Error(ErrorKind::ConfigError, "unknown dataset '" + std::string(name) + "' and no url given");
  }
  return fetch_dataset(name, entry->url, cache_dir, entry->sha256);
}

}  // namespace tscp::datasets
