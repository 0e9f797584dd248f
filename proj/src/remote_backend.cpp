#include <chrono>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "autocurriculum/errors.hpp"
#include "autocurriculum/llm.hpp"

namespace autocurriculum {

namespace {

std::string base64(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    static const std::regex url(R"(^(http://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(config_.url, m, url))
      throw ConfigError("remote backend url must look like http://host:port/path, got '" +
                        config_.url + "'");
    origin_ = m[1];
    path_ = m[2].matched ? std::string(m[2]) : "/";
    if (config_.attempts < 1) throw ConfigError("remote backend needs at least one attempt");
  }

  std::string complete(const PromptBundle& bundle, const CallOptions& options) override {
    nlohmann::json body{{"prompt", bundle.render_text()},
                        {"kind", kind_name(bundle.kind)},
                        {"temperature", options.temperature},
                        {"images", nlohmann::json::array()}};
    for (const auto* png : bundle.images()) body["images"].push_back(base64(*png));
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    std::string last_error;
    for (int attempt = 0; attempt < config_.attempts; ++attempt) {
      if (attempt > 0)
        std::this_thread::sleep_for(std::chrono::duration<double>(
            config_.backoff_seconds * static_cast<double>(1 << (attempt - 1))));
      httplib::Client client(origin_);
      auto timeout = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::duration<double>(config_.timeout_seconds));
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      auto res = client.Post(path_, headers, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        if (res->status < 500 && res->status != 429) break;  // not worth retrying
        continue;
      }
      try {
        return nlohmann::json::parse(res->body).at("text").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        last_error = std::string("malformed response body: ") + e.what();
      }
    }
    throw TransportError("completion endpoint " + config_.url + " failed: " + last_error);
  }

  std::string_view kind() const override { return "remote"; }

 private:
  RemoteConfig config_;
  std::string origin_;
  std::string path_;
};

}  // namespace

std::unique_ptr<Backend> make_remote_backend(const RemoteConfig& config) {
  return std::make_unique<RemoteBackend>(config);
}

}  // namespace autocurriculum
