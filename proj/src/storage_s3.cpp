#include <httplib.h>

#include <thread>

#include "orbitforge/error.hpp"
#include "orbitforge/sigv4.hpp"
#include "orbitforge/storage.hpp"

namespace orbitforge {

namespace {

std::string xml_unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    const auto semi = s.find(';', i);
    if (semi == std::string_view::npos) {
      out.push_back('&');
      continue;
    }
    const auto ent = s.substr(i + 1, semi - i - 1);
    if (ent == "amp") out.push_back('&');
    else if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else if (!ent.empty() && ent[0] == '#') {
      const bool hexnum = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      const long code = std::strtol(std::string(ent.substr(hexnum ? 2 : 1)).c_str(), nullptr, hexnum ? 16 : 10);
      if (code < 0x80) out.push_back(static_cast<char>(code));
      else if (code < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (code >> 6)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
      } else {
        out.push_back(static_cast<char>(0xE0 | (code >> 12)));
        out.push_back(static_cast<char>(0x80 | ((code >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (code & 0x3F)));
      }
    } else {
      out.append(s.substr(i, semi - i + 1));
    }
    i = semi;
  }
  return out;
}

std::vector<std::string> elements(std::string_view xml, std::string_view tag) {
  std::vector<std::string> out;
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  std::size_t pos = 0;
  while ((pos = xml.find(open, pos)) != std::string_view::npos) {
    pos += open.size();
    const auto end = xml.find(close, pos);
    if (end == std::string_view::npos) break;
    out.push_back(xml_unescape(xml.substr(pos, end - pos)));
    pos = end + close.size();
  }
  return out;
}

std::string status_message(const std::string& what, int status, const std::string& body) {
  std::string msg = what + " failed with HTTP " + std::to_string(status);
  if (const auto code = elements(body, "Code"); !code.empty()) msg += " (" + code.front() + ")";
  return msg;
}

}  // namespace

ListPage parse_list_objects_v2(std::string_view xml) {
  ListPage page;
  page.keys = elements(xml, "Key");
  const auto truncated = elements(xml, "IsTruncated");
  page.truncated = !truncated.empty() && truncated.front() == "true";
  if (const auto tok = elements(xml, "NextContinuationToken"); !tok.empty()) page.continuation_token = tok.front();
  return page;
}

S3Store::S3Store(S3Backend backend, BucketNames buckets, RetryPolicy retry)
    : backend_(std::move(backend)), buckets_(std::move(buckets)), retry_(retry) {
  buckets_.validate();
  std::string ep = backend_.endpoint;
  while (ep.ends_with('/')) ep.pop_back();
  const auto scheme_end = ep.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::config, "S3 endpoint needs a scheme: " + ep);
  scheme_host_port_ = ep;
  host_ = ep.substr(scheme_end + 3);
  if (host_.empty() || host_.find('/') != std::string::npos) {
    throw Error(ErrorKind::config, "S3 endpoint must be scheme://host[:port]: " + ep);
  }
}

S3Store::Response S3Store::send(const std::string& method, BucketRole role, const std::string& key,
                                const std::vector<std::pair<std::string, std::string>>& query,
                                std::span<const std::uint8_t> body) const {
  const std::string& bucket = buckets_.name(role);
  std::string host = host_;
  std::string base = scheme_host_port_;
  std::string path;
  if (backend_.path_style) {
    path = "/" + sigv4::uri_encode(bucket, true) + (key.empty() ? "" : "/" + sigv4::uri_encode(key, false));
  } else {
    host = bucket + "." + host_;
    base = scheme_host_port_.substr(0, scheme_host_port_.find("://") + 3) + host;
    path = "/" + sigv4::uri_encode(key, false);
  }
  const std::string qs = sigv4::canonical_query(query);
  const std::string payload_hash = sigv4::sha256_hex(body);

  std::string last_error;
  int last_status = 0;
  for (int attempt = 0; attempt <= retry_.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(retry_.base_delay * (1 << (attempt - 1)));

    const std::string amz_date = sigv4::amz_date_now();
    sigv4::Request sreq{method, path, query,
                        {{"host", host}, {"x-amz-content-sha256", payload_hash}, {"x-amz-date", amz_date}},
                        payload_hash};
    const sigv4::Scope scope{amz_date.substr(0, 8), backend_.region, "s3"};
    const sigv4::Credentials creds{backend_.access_key_id, backend_.secret_key};

    httplib::Request req;
    req.method = method;
    req.path = qs.empty() ? path : path + "?" + qs;
    req.headers = {{"Host", host},
                   {"x-amz-content-sha256", payload_hash},
                   {"x-amz-date", amz_date},
                   {"Authorization", sigv4::authorization_header(creds, scope, amz_date, sreq)}};
    if (method == "PUT") {
      req.body.assign(reinterpret_cast<const char*>(body.data()), body.size());
      req.headers.emplace("Content-Type", "application/octet-stream");
    }

    httplib::Client client(base);
    client.set_url_encode(false);
    client.set_connection_timeout(std::chrono::seconds(5));
    client.set_read_timeout(std::chrono::seconds(60));
    client.set_write_timeout(std::chrono::seconds(60));
    httplib::Result res = client.send(req);
    if (!res) {
      last_error = httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status >= 500) {
      last_status = res->status;
      last_error = status_message(method + " " + path, res->status, res->body);
      continue;
    }
    return {res->status, std::move(res->body)};
  }
  throw Error(ErrorKind::transfer,
              method + " " + path + " on " + scheme_host_port_ + " failed after " + std::to_string(retry_.retries + 1) +
                  " attempts: " + last_error,
              last_status);
}

void S3Store::put(const ObjectKey& key, std::span<const std::uint8_t> bytes) {
  const auto r = send("PUT", key.role(), key.key(), {}, bytes);
  if (r.status >= 300) throw Error(ErrorKind::transfer, status_message("PUT " + key.key(), r.status, r.body), r.status);
}

std::vector<std::uint8_t> S3Store::get(const ObjectKey& key) const {
  const auto r = send("GET", key.role(), key.key(), {}, {});
  if (r.status == 404) {
    throw Error(ErrorKind::not_found, std::string(to_string(key.role())) + "/" + key.key() + " not found", 404);
  }
  if (r.status >= 300) throw Error(ErrorKind::transfer, status_message("GET " + key.key(), r.status, r.body), r.status);
  return {r.body.begin(), r.body.end()};
}

std::vector<std::string> S3Store::list(BucketRole role, std::string_view prefix) const {
  std::vector<std::string> keys;
  std::string token;
  for (;;) {
    std::vector<std::pair<std::string, std::string>> query{{"list-type", "2"}, {"prefix", std::string(prefix)}};
    if (!token.empty()) query.emplace_back("continuation-token", token);
    const auto r = send("GET", role, "", query, {});
    if (r.status >= 300) throw Error(ErrorKind::transfer, status_message("LIST", r.status, r.body), r.status);
    ListPage page = parse_list_objects_v2(r.body);
    keys.insert(keys.end(), page.keys.begin(), page.keys.end());
    if (!page.truncated) break;
    if (page.continuation_token.empty()) throw Error(ErrorKind::transfer, "truncated listing without continuation token");
    token = page.continuation_token;
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

bool S3Store::exists(const ObjectKey& key) const {
  const auto r = send("HEAD", key.role(), key.key(), {}, {});
  if (r.status == 404) return false;
  if (r.status >= 300) throw Error(ErrorKind::transfer, status_message("HEAD " + key.key(), r.status, r.body), r.status);
  return true;
}

void S3Store::remove(const ObjectKey& key) {
  const auto r = send("DELETE", key.role(), key.key(), {}, {});
  if (r.status >= 300 && r.status != 404) {
    throw Error(ErrorKind::transfer, status_message("DELETE " + key.key(), r.status, r.body), r.status);
  }
}

std::string S3Store::describe() const { return "s3:" + scheme_host_port_; }

}  // namespace orbitforge
