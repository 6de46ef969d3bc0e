#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tmlab/net/bytes.hpp"

namespace tmlab::net {

// Verbatim tokenization of an HTTP/1.x request head. Every byte of the
// raw request belongs to exactly one token, so concatenating the tokens
// reproduces it; no whitespace is ever normalized away.
struct HttpHeaderTokens {
  Bytes name;       // up to the colon (may carry leading whitespace)
  Bytes separator;  // ':' plus following spaces/tabs, empty if no colon
  Bytes value;      // up to trailing whitespace before the line end
  Bytes line_end;   // trailing whitespace, optional CR, LF

  std::string name_string() const { return to_string(name); }
  std::string value_string() const { return to_string(value); }
  bool operator==(const HttpHeaderTokens&) const = default;
};

struct HttpRequestView {
  Bytes leading;      // CR/LF/SP/HT before the method
  Bytes method;
  Bytes gap1;
  Bytes target;
  Bytes gap2;
  Bytes version;
  Bytes line_end;     // rest of the request line through LF
  std::vector<HttpHeaderTokens> headers;
  Bytes tail;         // blank line, body, or anything unparsed

  Bytes serialize() const;
  bool operator==(const HttpRequestView&) const = default;
};

HttpRequestView tokenize_http_request(ByteView raw);

enum class HttpAnchor {
  BeforeMethod,
  AfterVersion,
  BeforeHostValue,
  AfterHostValue,
  BeforeHeader,
  AfterHeader,
};

class HttpRequestBytes {
 public:
  HttpRequestBytes() = default;
  explicit HttpRequestBytes(Bytes raw);

  const Bytes& raw() const { return raw_; }
  const HttpRequestView& view() const { return view_; }

  std::string method() const { return to_string(view_.method); }
  std::string target() const { return to_string(view_.target); }
  std::string version() const { return to_string(view_.version); }
  // Index of the first header whose name matches case-insensitively.
  std::optional<std::size_t> find_header(std::string_view name) const;
  std::optional<std::string> header_value(std::string_view name) const;

  // Byte offset of an anchor point in raw(); `header` names the header for
  // the header-relative anchors ("Host" for the host anchors).
  std::optional<std::size_t> anchor_offset(HttpAnchor anchor, std::string_view header = "Host") const;
  // Inserts bytes at the anchor; returns false if the anchor is absent.
  bool insert(HttpAnchor anchor, ByteView bytes, std::string_view header = "Host");

  // Replaces the header at `index` with `replacement` header lines.
  void replace_header(std::size_t index, const std::vector<HttpHeaderTokens>& replacement);

  bool operator==(const HttpRequestBytes& o) const { return raw_ == o.raw_; }

 private:
  void reparse() { view_ = tokenize_http_request(raw_); }

  Bytes raw_;
  HttpRequestView view_;
};

// Canonical "GET <path> <version>\r\nHost: <host>\r\n<extra>\r\n".
HttpRequestBytes build_http_get(std::string_view host, std::string_view path = "/",
                                std::string_view version = "HTTP/1.1",
                                const std::vector<std::pair<std::string, std::string>>& extra_headers = {});

// Server-grade parse. Accepts leading empty lines, trailing whitespace on
// the request line, LF-only line ends and obs-fold continuation lines;
// requires a complete header block and exactly one Host header whose value
// is 1..255 visible ASCII bytes. Returns that value with surrounding
// whitespace and any ":<digits>" port suffix removed.
std::optional<std::string> strict_http_host(ByteView bytes);

// Offset one past the blank line ending the header block, if present.
std::optional<std::size_t> http_head_length(ByteView bytes);

bool iequals(std::string_view a, std::string_view b);
std::string to_lower(std::string_view s);
// Host name syntax: LDH labels plus '_' separated by dots, <= 255 bytes.
bool is_host_name(std::string_view name);
// Every byte in 0x21..0x7E.
bool is_visible_ascii(std::string_view s);

}  // namespace tmlab::net
