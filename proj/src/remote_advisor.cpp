#include "camsearch/advisors.hpp"

#include <httplib.h>

#include <stdexcept>

namespace camsearch {

RemoteAdvisor::RemoteAdvisor(std::string url, int timeout_seconds) : timeout_seconds_(timeout_seconds) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0) throw std::invalid_argument("advisor url must start with http://: " + url);
  std::string rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  path_ = slash == std::string::npos ? "/" : rest.substr(slash);
  std::string authority = rest.substr(0, slash);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos) {
    try {
      port_ = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad port in advisor url: " + url);
    }
    authority.resize(colon);
  }
  if (authority.empty()) throw std::invalid_argument("missing host in advisor url: " + url);
  host_ = std::move(authority);
}

json RemoteAdvisor::wire_request(AdvisorRole role, const json& payload) {
  return {{"role", to_string(role)}, {"payload", payload}, {"schema_version", kAdvisorSchemaVersion}};
}

std::optional<std::string> RemoteAdvisor::request(AdvisorRole role, const json& payload) {
  const std::string body = wire_request(role, payload).dump();
  httplib::Client client(host_, port_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  client.set_write_timeout(timeout_seconds_, 0);
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto res = client.Post(path_, body, "application/json");
    if (res && res->status == 200) return res->body;
  }
  return std::nullopt;
}

}  // namespace camsearch
