#include "orbitforge/sigv4.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <ctime>

#include "orbitforge/error.hpp"

namespace orbitforge::sigv4 {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Trim and collapse interior runs of spaces.
std::string trim_value(std::string_view v) {
  std::string out;
  bool pending_space = false;
  for (char c : v) {
    if (c == ' ' || c == '\t') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> normalized_headers(
    const std::vector<std::pair<std::string, std::string>>& headers) {
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(headers.size());
  for (const auto& [k, v] : headers) out.emplace_back(lower(k), trim_value(v));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

std::vector<std::uint8_t> sha256(std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::internal, "sha256 failed");
  }
  out.resize(len);
  return out;
}

std::string sha256_hex(std::span<const std::uint8_t> data) { return hex(sha256(data)); }
std::string sha256_hex(std::string_view data) { return sha256_hex(as_bytes(data)); }

std::vector<std::uint8_t> hmac_sha256(std::span<const std::uint8_t> key, std::string_view data) {
  std::vector<std::uint8_t> out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), reinterpret_cast<const unsigned char*>(data.data()),
            data.size(), out.data(), &len)) {
    throw Error(ErrorKind::internal, "hmac-sha256 failed");
  }
  out.resize(len);
  return out;
}

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

std::string uri_encode(std::string_view in, bool encode_slash) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : in) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || (c == '/' && !encode_slash)) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(digits[c >> 4]);
      out.push_back(digits[c & 0xF]);
    }
  }
  return out;
}

std::string canonical_query(const std::vector<std::pair<std::string, std::string>>& query) {
  std::vector<std::pair<std::string, std::string>> enc;
  for (const auto& [k, v] : query) enc.emplace_back(uri_encode(k, true), uri_encode(v, true));
  std::sort(enc.begin(), enc.end());
  std::string out;
  for (const auto& [k, v] : enc) {
    if (!out.empty()) out.push_back('&');
    out += k + "=" + v;
  }
  return out;
}

std::string canonical_headers(const std::vector<std::pair<std::string, std::string>>& headers) {
  std::string out;
  for (const auto& [k, v] : normalized_headers(headers)) out += k + ":" + v + "\n";
  return out;
}

std::string signed_headers(const std::vector<std::pair<std::string, std::string>>& headers) {
  std::string out;
  for (const auto& [k, v] : normalized_headers(headers)) {
    if (!out.empty()) out.push_back(';');
    out += k;
  }
  return out;
}

std::string canonical_request(const Request& req) {
  return req.method + "\n" + req.canonical_uri + "\n" + canonical_query(req.query) + "\n" +
         canonical_headers(req.headers) + "\n" + signed_headers(req.headers) + "\n" + req.payload_hash;
}

std::string string_to_sign(std::string_view amz_date, const Scope& scope, std::string_view canonical_request) {
  return "AWS4-HMAC-SHA256\n" + std::string(amz_date) + "\n" + scope.str() + "\n" + sha256_hex(canonical_request);
}

std::vector<std::uint8_t> signing_key(std::string_view secret_key, const Scope& scope) {
  const std::string k_secret = "AWS4" + std::string(secret_key);
  auto k = hmac_sha256(as_bytes(k_secret), scope.date);
  k = hmac_sha256(k, scope.region);
  k = hmac_sha256(k, scope.service);
  return hmac_sha256(k, "aws4_request");
}

std::string signature(const Credentials& creds, const Scope& scope, std::string_view amz_date, const Request& req) {
  const auto key = signing_key(creds.secret_key, scope);
  return hex(hmac_sha256(key, string_to_sign(amz_date, scope, canonical_request(req))));
}

std::string authorization_header(const Credentials& creds, const Scope& scope, std::string_view amz_date,
                                 const Request& req) {
  return "AWS4-HMAC-SHA256 Credential=" + creds.access_key_id + "/" + scope.str() +
         ", SignedHeaders=" + signed_headers(req.headers) + ", Signature=" + signature(creds, scope, amz_date, req);
}

std::string amz_date_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[17];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace orbitforge::sigv4
