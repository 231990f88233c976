#include <httplib.h>

#include <thread>

#include "orbitforge/sigv4.hpp"
#include "support.hpp"

namespace testsupport {

namespace sigv4 = orbitforge::sigv4;

struct MockS3::Impl {
  Options opt;
  httplib::Server server;
  std::thread thread;
  int port = 0;

  mutable std::mutex mu;
  std::map<std::string, std::map<std::string, std::string>> buckets;
  int fail_remaining = 0;
  int fail_status = 503;
  int requests = 0;
  int sig_failures = 0;

  static std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        default: out.push_back(c);
      }
    }
    return out;
  }

  static void error(httplib::Response& res, int status, const std::string& code) {
    res.status = status;
    res.set_content("<?xml version=\"1.0\" encoding=\"UTF-8\"?><Error><Code>" + code + "</Code></Error>",
                    "application/xml");
  }

  // Recomputes the signature from what arrived on the wire.
  bool verify(const httplib::Request& req, const std::string& raw_path) {
    const std::string auth = req.get_header_value("Authorization");
    const std::string prefix = "AWS4-HMAC-SHA256 Credential=";
    if (auth.rfind(prefix, 0) != 0) return false;
    const auto cred_end = auth.find(',', prefix.size());
    const auto sh_pos = auth.find("SignedHeaders=");
    const auto sig_pos = auth.find("Signature=");
    if (cred_end == std::string::npos || sh_pos == std::string::npos || sig_pos == std::string::npos) return false;
    const std::string credential = auth.substr(prefix.size(), cred_end - prefix.size());
    const std::string signed_list = auth.substr(sh_pos + 14, auth.find(',', sh_pos) - sh_pos - 14);
    const std::string given = auth.substr(sig_pos + 10);

    std::vector<std::string> parts;
    for (std::size_t start = 0;;) {
      const auto slash = credential.find('/', start);
      parts.push_back(credential.substr(start, slash - start));
      if (slash == std::string::npos) break;
      start = slash + 1;
    }
    if (parts.size() != 5 || parts[0] != opt.access_key_id || parts[2] != opt.region || parts[3] != "s3") return false;

    sigv4::Request sreq;
    sreq.method = req.method;
    sreq.canonical_uri = raw_path;
    for (const auto& [k, v] : req.params) sreq.query.emplace_back(k, v);
    for (std::size_t start = 0;;) {
      const auto semi = signed_list.find(';', start);
      const std::string name = signed_list.substr(start, semi - start);
      sreq.headers.emplace_back(name, req.get_header_value(name.c_str()));
      if (semi == std::string::npos) break;
      start = semi + 1;
    }
    sreq.payload_hash = req.get_header_value("x-amz-content-sha256");
    const std::string amz_date = req.get_header_value("x-amz-date");
    if (amz_date.substr(0, 8) != parts[1]) return false;
    const sigv4::Scope scope{parts[1], parts[2], parts[3]};
    return sigv4::signature({opt.access_key_id, opt.secret_key}, scope, amz_date, sreq) == given;
  }

  void handle(const httplib::Request& req, httplib::Response& res) {
    const std::string raw_path = req.target.substr(0, req.target.find('?'));
    std::lock_guard lock(mu);
    ++requests;
    if (fail_remaining > 0) {
      --fail_remaining;
      error(res, fail_status, "InjectedFailure");
      return;
    }
    if (!verify(req, raw_path)) {
      ++sig_failures;
      error(res, 403, "SignatureDoesNotMatch");
      return;
    }
    if (req.method == "PUT" && sigv4::sha256_hex(req.body) != req.get_header_value("x-amz-content-sha256")) {
      error(res, 400, "XAmzContentSHA256Mismatch");
      return;
    }

    const std::string path = httplib::detail::decode_url(raw_path, false);
    const auto slash = path.find('/', 1);
    const std::string bucket = path.substr(1, slash == std::string::npos ? std::string::npos : slash - 1);
    const std::string key = slash == std::string::npos ? "" : path.substr(slash + 1);
    if (bucket.empty()) {
      error(res, 400, "InvalidBucketName");
      return;
    }

    auto& objects = buckets[bucket];
    if (key.empty()) {
      if (req.method != "GET" || req.get_param_value("list-type") != "2") {
        error(res, 400, "UnsupportedOperation");
        return;
      }
      list(objects, bucket, req, res);
      return;
    }
    if (req.method == "PUT") {
      objects[key] = req.body;
      res.status = 200;
    } else if (req.method == "GET" || req.method == "HEAD") {
      const auto it = objects.find(key);
      if (it == objects.end()) {
        error(res, 404, "NoSuchKey");
        return;
      }
      res.status = 200;
      res.set_content(it->second, "application/octet-stream");
    } else if (req.method == "DELETE") {
      objects.erase(key);
      res.status = 204;
    } else {
      error(res, 405, "MethodNotAllowed");
    }
  }

  void list(const std::map<std::string, std::string>& objects, const std::string& bucket, const httplib::Request& req,
            httplib::Response& res) const {
    const std::string prefix = req.get_param_value("prefix");
    const std::string token = req.get_param_value("continuation-token");
    // Tokens are "t:" + last key returned, hex encoded.
    std::string after;
    if (!token.empty()) {
      if (token.size() % 2 != 0 || token.rfind("74", 0) != 0) return error(res, 400, "InvalidArgument");
      for (std::size_t i = 0; i < token.size(); i += 2) after.push_back(static_cast<char>(std::stoi(token.substr(i, 2), nullptr, 16)));
      after = after.substr(2);
    }
    std::string body = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<ListBucketResult><Name>" + xml_escape(bucket) +
                       "</Name><Prefix>" + xml_escape(prefix) + "</Prefix>";
    std::size_t n = 0;
    std::string last;
    bool truncated = false;
    for (auto it = after.empty() ? objects.lower_bound(prefix) : objects.upper_bound(after); it != objects.end();
         ++it) {
      if (it->first.rfind(prefix, 0) != 0) break;
      if (n == opt.page_size) {
        truncated = true;
        break;
      }
      body += "<Contents><Key>" + xml_escape(it->first) + "</Key><Size>" + std::to_string(it->second.size()) +
              "</Size></Contents>";
      last = it->first;
      ++n;
    }
    body += "<KeyCount>" + std::to_string(n) + "</KeyCount><MaxKeys>" + std::to_string(opt.page_size) +
            "</MaxKeys><IsTruncated>" + (truncated ? "true" : "false") + "</IsTruncated>";
    if (truncated) {
      static constexpr char digits[] = "0123456789abcdef";
      std::string tok;
      for (unsigned char c : "t:" + last) {
        tok.push_back(digits[c >> 4]);
        tok.push_back(digits[c & 15]);
      }
      body += "<NextContinuationToken>" + tok + "</NextContinuationToken>";
    }
    body += "</ListBucketResult>";
    res.status = 200;
    res.set_content(body, "application/xml");
  }
};

MockS3::MockS3() : MockS3(Options{}) {}

MockS3::MockS3(Options options) : impl_(std::make_unique<Impl>()) {
  impl_->opt = std::move(options);
  auto h = [this](const httplib::Request& req, httplib::Response& res) { impl_->handle(req, res); };
  impl_->server.Get(".*", h);
  impl_->server.Put(".*", h);
  impl_->server.Delete(".*", h);
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port <= 0) throw std::runtime_error("mock S3: cannot bind");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

MockS3::~MockS3() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockS3::endpoint() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

orbitforge::S3Backend MockS3::backend() const {
  orbitforge::S3Backend b;
  b.endpoint = endpoint();
  b.region = impl_->opt.region;
  b.access_key_id = impl_->opt.access_key_id;
  b.secret_key = impl_->opt.secret_key;
  b.path_style = true;
  return b;
}

orbitforge::S3Backend MockS3::backend_with_bad_secret() const {
  auto b = backend();
  b.secret_key += "x";
  return b;
}

void MockS3::fail_next(int n, int status) {
  std::lock_guard lock(impl_->mu);
  impl_->fail_remaining = n;
  impl_->fail_status = status;
}

std::map<std::string, std::map<std::string, std::string>> MockS3::snapshot() const {
  std::lock_guard lock(impl_->mu);
  return impl_->buckets;
}

int MockS3::requests() const {
  std::lock_guard lock(impl_->mu);
  return impl_->requests;
}

int MockS3::signature_failures() const {
  std::lock_guard lock(impl_->mu);
  return impl_->sig_failures;
}

}  // namespace testsupport
