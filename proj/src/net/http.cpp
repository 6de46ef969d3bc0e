#include "tmlab/net/http.hpp"

#include <algorithm>
#include <cctype>

namespace tmlab::net {
namespace {

bool is_ws(std::uint8_t c) { return c == ' ' || c == '\t'; }
bool is_eol(std::uint8_t c) { return c == '\r' || c == '\n'; }

Bytes slice(ByteView raw, std::size_t from, std::size_t to) {
  return Bytes(raw.begin() + static_cast<std::ptrdiff_t>(from), raw.begin() + static_cast<std::ptrdiff_t>(to));
}

void append(Bytes& out, const Bytes& b) { out.insert(out.end(), b.begin(), b.end()); }

HttpHeaderTokens tokenize_header_line(ByteView raw, std::size_t begin, std::size_t lf) {
  // content = [begin, content_end), then optional CR, then LF at `lf`
  std::size_t content_end = lf;
  if (content_end > begin && raw[content_end - 1] == '\r') --content_end;
  std::size_t trimmed_end = content_end;
  while (trimmed_end > begin && is_ws(raw[trimmed_end - 1])) --trimmed_end;

  HttpHeaderTokens h;
  std::size_t colon = begin;
  while (colon < trimmed_end && raw[colon] != ':') ++colon;
  if (colon == trimmed_end) {
    h.name = slice(raw, begin, trimmed_end);
    h.line_end = slice(raw, trimmed_end, lf + 1);
    return h;
  }
  h.name = slice(raw, begin, colon);
  std::size_t value_begin = colon + 1;
  if (value_begin < trimmed_end) {
    while (value_begin < trimmed_end && is_ws(raw[value_begin])) ++value_begin;
  }
  if (value_begin > trimmed_end) value_begin = trimmed_end;
  h.separator = slice(raw, colon, value_begin);
  h.value = slice(raw, value_begin, trimmed_end);
  h.line_end = slice(raw, trimmed_end, lf + 1);
  return h;
}

std::size_t find_lf(ByteView raw, std::size_t from) {
  for (std::size_t i = from; i < raw.size(); ++i) {
    if (raw[i] == '\n') return i;
  }
  return raw.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

}  // namespace

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_host_name(std::string_view name) {
  if (name.empty() || name.size() > 255) return false;
  std::size_t label = 0;
  for (char c : name) {
    if (c == '.') {
      if (label == 0) return false;
      label = 0;
      continue;
    }
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
    if (++label > 63) return false;
  }
  return label > 0;
}

bool is_visible_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c > 0x20 && c < 0x7f; });
}

Bytes HttpRequestView::serialize() const {
  Bytes out;
  for (const Bytes* b : {&leading, &method, &gap1, &target, &gap2, &version, &line_end}) append(out, *b);
  for (const auto& h : headers) {
    append(out, h.name);
    append(out, h.separator);
    append(out, h.value);
    append(out, h.line_end);
  }
  append(out, tail);
  return out;
}

HttpRequestView tokenize_http_request(ByteView raw) {
  HttpRequestView v;
  std::size_t i = 0;
  auto run = [&](auto pred) {
    std::size_t start = i;
    while (i < raw.size() && pred(raw[i])) ++i;
    return slice(raw, start, i);
  };
  v.leading = run([](std::uint8_t c) { return is_ws(c) || is_eol(c); });
  v.method = run([](std::uint8_t c) { return !is_ws(c) && !is_eol(c); });
  v.gap1 = run(is_ws);
  v.target = run([](std::uint8_t c) { return !is_ws(c) && !is_eol(c); });
  v.gap2 = run(is_ws);
  v.version = run([](std::uint8_t c) { return !is_ws(c) && !is_eol(c); });
  std::size_t lf = find_lf(raw, i);
  if (lf == raw.size()) {
    v.line_end = slice(raw, i, raw.size());
    return v;
  }
  v.line_end = slice(raw, i, lf + 1);
  i = lf + 1;
  while (i < raw.size()) {
    bool blank = raw[i] == '\n' || (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n');
    std::size_t next_lf = find_lf(raw, i);
    if (blank || next_lf == raw.size()) break;
    v.headers.push_back(tokenize_header_line(raw, i, next_lf));
    i = next_lf + 1;
  }
  v.tail = slice(raw, i, raw.size());
  return v;
}

HttpRequestBytes::HttpRequestBytes(Bytes raw) : raw_(std::move(raw)) { reparse(); }

std::optional<std::size_t> HttpRequestBytes::find_header(std::string_view name) const {
  for (std::size_t i = 0; i < view_.headers.size(); ++i) {
    if (iequals(to_string(view_.headers[i].name), name)) return i;
  }
  return std::nullopt;
}

std::optional<std::string> HttpRequestBytes::header_value(std::string_view name) const {
  auto idx = find_header(name);
  if (!idx) return std::nullopt;
  return view_.headers[*idx].value_string();
}

std::optional<std::size_t> HttpRequestBytes::anchor_offset(HttpAnchor anchor, std::string_view header) const {
  const auto& v = view_;
  std::size_t request_line = v.leading.size() + v.method.size() + v.gap1.size() + v.target.size() +
                             v.gap2.size() + v.version.size() + v.line_end.size();
  switch (anchor) {
    case HttpAnchor::BeforeMethod:
      return v.leading.size();
    case HttpAnchor::AfterVersion:
      return request_line - v.line_end.size();
    default:
      break;
  }
  auto idx = find_header(header);
  if (!idx) return std::nullopt;
  std::size_t off = request_line;
  for (std::size_t i = 0; i < *idx; ++i) {
    const auto& h = v.headers[i];
    off += h.name.size() + h.separator.size() + h.value.size() + h.line_end.size();
  }
  const auto& h = v.headers[*idx];
  switch (anchor) {
    case HttpAnchor::BeforeHeader:
      return off;
    case HttpAnchor::BeforeHostValue:
      return off + h.name.size() + h.separator.size();
    case HttpAnchor::AfterHostValue:
      return off + h.name.size() + h.separator.size() + h.value.size();
    case HttpAnchor::AfterHeader:
      return off + h.name.size() + h.separator.size() + h.value.size() + h.line_end.size();
    default:
      return std::nullopt;
  }
}

bool HttpRequestBytes::insert(HttpAnchor anchor, ByteView bytes, std::string_view header) {
  auto off = anchor_offset(anchor, header);
  if (!off) return false;
  raw_.insert(raw_.begin() + static_cast<std::ptrdiff_t>(*off), bytes.begin(), bytes.end());
  reparse();
  return true;
}

void HttpRequestBytes::replace_header(std::size_t index, const std::vector<HttpHeaderTokens>& replacement) {
  HttpRequestView v = view_;
  v.headers.erase(v.headers.begin() + static_cast<std::ptrdiff_t>(index));
  v.headers.insert(v.headers.begin() + static_cast<std::ptrdiff_t>(index), replacement.begin(), replacement.end());
  raw_ = v.serialize();
  reparse();
}

HttpRequestBytes build_http_get(std::string_view host, std::string_view path, std::string_view version,
                                const std::vector<std::pair<std::string, std::string>>& extra_headers) {
  std::string s;
  s.append("GET ").append(path).append(" ").append(version).append("\r\n");
  s.append("Host: ").append(host).append("\r\n");
  for (const auto& [name, value] : extra_headers) s.append(name).append(": ").append(value).append("\r\n");
  s.append("\r\n");
  return HttpRequestBytes(to_bytes(s));
}

std::optional<std::size_t> http_head_length(ByteView bytes) {
  std::size_t i = 0;
  while (i < bytes.size() && is_eol(bytes[i])) ++i;
  std::size_t lf = find_lf(bytes, i);
  if (lf == bytes.size()) return std::nullopt;
  i = lf + 1;
  while (i < bytes.size()) {
    if (bytes[i] == '\n') return i + 1;
    if (bytes[i] == '\r' && i + 1 < bytes.size() && bytes[i + 1] == '\n') return i + 2;
    lf = find_lf(bytes, i);
    if (lf == bytes.size()) return std::nullopt;
    i = lf + 1;
  }
  return std::nullopt;
}

std::optional<std::string> strict_http_host(ByteView bytes) {
  auto head_len = http_head_length(bytes);
  if (!head_len) return std::nullopt;
  std::string head = to_string(bytes.first(*head_len));

  std::vector<std::string_view> lines;
  std::string_view rest(head);
  while (!rest.empty() && (rest.front() == '\r' || rest.front() == '\n')) rest.remove_prefix(1);
  while (!rest.empty()) {
    auto lf = rest.find('\n');
    auto line = rest.substr(0, lf);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    rest.remove_prefix(lf + 1);
  }
  if (lines.empty()) return std::nullopt;

  // request line: METHOD SP target SP HTTP/1.x
  auto request_line = trim(lines.front());
  auto sp1 = request_line.find(' ');
  auto sp2 = request_line.rfind(' ');
  if (sp1 == std::string_view::npos || sp1 == sp2) return std::nullopt;
  auto method = request_line.substr(0, sp1);
  auto target = trim(request_line.substr(sp1 + 1, sp2 - sp1 - 1));
  auto version = request_line.substr(sp2 + 1);
  if (method.empty() || !std::all_of(method.begin(), method.end(), [](char c) { return c >= 'A' && c <= 'Z'; })) {
    return std::nullopt;
  }
  if (target.empty() || (version != "HTTP/1.1" && version != "HTTP/1.0")) return std::nullopt;

  std::vector<std::pair<std::string, std::string>> headers;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto line = lines[i];
    if (line.empty()) break;
    if (line.front() == ' ' || line.front() == '\t') {
      if (!headers.empty()) {
        auto& value = headers.back().second;
        value.append(" ").append(trim(line));
      }
      continue;
    }
    auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) return std::nullopt;
    auto name = line.substr(0, colon);
    if (name.find_first_of(" \t") != std::string_view::npos) return std::nullopt;
    headers.emplace_back(std::string(name), std::string(trim(line.substr(colon + 1))));
  }

  std::optional<std::string> host;
  for (const auto& [name, value] : headers) {
    if (!iequals(name, "host")) continue;
    if (host) return std::nullopt;
    host = std::string(trim(value));
  }
  if (!host) return std::nullopt;
  if (auto colon = host->rfind(':'); colon != std::string::npos && colon + 1 < host->size() &&
      std::all_of(host->begin() + static_cast<std::ptrdiff_t>(colon) + 1, host->end(),
                  [](char c) { return c >= '0' && c <= '9'; })) {
    host->resize(colon);
  }
  if (host->empty() || host->size() > 255 || !is_visible_ascii(*host)) return std::nullopt;
  return host;
}

}  // namespace tmlab::net
