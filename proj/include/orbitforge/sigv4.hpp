#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// AWS Signature Version 4 request signing.
namespace orbitforge::sigv4 {

std::vector<std::uint8_t> sha256(std::span<const std::uint8_t> data);
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);
std::vector<std::uint8_t> hmac_sha256(std::span<const std::uint8_t> key, std::string_view data);
std::string hex(std::span<const std::uint8_t> bytes);

// RFC 3986 unreserved characters pass through; everything else is %XX
// (upper-case hex). '/' is kept when encode_slash is false (object paths).
std::string uri_encode(std::string_view in, bool encode_slash);

struct Request {
  std::string method;
  std::string canonical_uri;  // already URI-encoded path, e.g. "/bucket/a%20b"
  std::vector<std::pair<std::string, std::string>> query;    // raw names and values
  std::vector<std::pair<std::string, std::string>> headers;  // every header to be signed
  std::string payload_hash;                                  // hex sha256 or UNSIGNED-PAYLOAD
};

struct Credentials {
  std::string access_key_id;
  std::string secret_key;
};

struct Scope {
  std::string date;  // YYYYMMDD
  std::string region;
  std::string service = "s3";

  std::string str() const { return date + "/" + region + "/" + service + "/aws4_request"; }
};

std::string canonical_query(const std::vector<std::pair<std::string, std::string>>& query);
// Lower-cased, value-trimmed, name-sorted "name:value\n" lines.
std::string canonical_headers(const std::vector<std::pair<std::string, std::string>>& headers);
std::string signed_headers(const std::vector<std::pair<std::string, std::string>>& headers);
std::string canonical_request(const Request& req);
std::string string_to_sign(std::string_view amz_date, const Scope& scope, std::string_view canonical_request);
std::vector<std::uint8_t> signing_key(std::string_view secret_key, const Scope& scope);
std::string signature(const Credentials& creds, const Scope& scope, std::string_view amz_date, const Request& req);
std::string authorization_header(const Credentials& creds, const Scope& scope, std::string_view amz_date,
                                 const Request& req);

// "20130524T000000Z" for the given UTC time.
std::string amz_date_now();

}  // namespace orbitforge::sigv4
