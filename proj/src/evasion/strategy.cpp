#include "tmlab/evasion/strategy.hpp"

#include <cctype>
#include <charconv>

namespace tmlab::evasion {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Strategy parse() {
    Strategy out;
    out.outbound = forest();
    expect("\\/");
    out.inbound = forest();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected text after inbound forest");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw StrategyParseError(what, pos_); }
  [[noreturn]] void fail_at(const std::string& what, std::size_t at) const { throw StrategyParseError(what, at); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool peek(std::string_view tok) {
    skip_ws();
    return s_.substr(pos_).starts_with(tok);
  }
  bool accept(std::string_view tok) {
    if (!peek(tok)) return false;
    pos_ += tok.size();
    return true;
  }
  void expect(std::string_view tok) {
    if (!accept(tok)) fail("expected \"" + std::string(tok) + "\"");
  }

  std::vector<Tree> forest() {
    std::vector<Tree> trees;
    while (peek("[")) trees.push_back(tree());
    return trees;
  }

  Tree tree() {
    Tree t;
    t.trigger = trigger();
    expect("-");
    const std::size_t action_at = pos_;
    if (peek("|")) {
      t.action = {};
    } else {
      t.action = action();
      expect("-");
    }
    expect("|");
    check_layers(t.trigger, t.action, action_at);
    return t;
  }

  Trigger trigger() {
    expect("[");
    const std::size_t start = pos_;
    auto close = s_.find(']', pos_);
    if (close == std::string_view::npos) fail("unterminated trigger");
    auto parts = split(s_.substr(start, close - start));
    if (parts.size() != 3) fail_at("trigger needs PROTO:field:value", start);
    Trigger t{parts[0], parts[1], parts[2]};
    if (t.protocol != "TCP" && t.protocol != "DNS" && t.protocol != "HTTP") {
      fail_at("unknown trigger protocol " + t.protocol, start);
    }
    if (t.protocol == "TCP" && t.field != "flags" && t.field != "*") fail_at("TCP triggers match on flags", start);
    if (t.protocol == "HTTP" && t.field != "host" && t.field != "method" && t.field != "version") {
      fail_at("HTTP triggers match host, method or version", start);
    }
    pos_ = close + 1;
    return t;
  }

  static std::vector<std::string> split(std::string_view body) {
    std::vector<std::string> parts;
    std::size_t from = 0;
    while (true) {
      auto colon = body.find(':', from);
      auto part = body.substr(from, colon == std::string_view::npos ? std::string_view::npos : colon - from);
      while (!part.empty() && std::isspace(static_cast<unsigned char>(part.front()))) part.remove_prefix(1);
      while (!part.empty() && std::isspace(static_cast<unsigned char>(part.back()))) part.remove_suffix(1);
      parts.emplace_back(part);
      if (colon == std::string_view::npos) break;
      from = colon + 1;
    }
    return parts;
  }

  std::size_t number(const std::string& text, std::size_t at) const {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) fail_at("expected a number, got \"" + text + "\"", at);
    return v;
  }

  // An empty action (before ',' or ')' or "-|") is a Send leaf.
  Action action() {
    skip_ws();
    const std::size_t start = pos_;
    std::size_t end = pos_;
    while (end < s_.size() && std::isalpha(static_cast<unsigned char>(s_[end]))) ++end;
    const std::string name(s_.substr(start, end - start));
    if (name.empty()) return {};
    pos_ = end;

    Action a;
    std::vector<std::string> params;
    std::size_t params_at = pos_;
    if (accept("{")) {
      params_at = pos_;
      auto close = s_.find('}', pos_);
      if (close == std::string_view::npos) fail("unterminated parameter list");
      params = split(s_.substr(pos_, close - pos_));
      pos_ = close + 1;
    }
    auto need = [&](std::size_t lo, std::size_t hi) {
      if (params.size() < lo || params.size() > hi) fail_at(name + " takes " + std::to_string(lo) + " parameters", params_at);
    };

    std::size_t arity = 0;
    if (name == "send" || name == "drop") {
      a.kind = name == "send" ? Action::Kind::Send : Action::Kind::Drop;
      need(0, 0);
    } else if (name == "duplicate") {
      a.kind = Action::Kind::Duplicate;
      need(0, 0);
      arity = 2;
    } else if (name == "fragment") {
      a.kind = Action::Kind::Fragment;
      need(3, 3);
      a.layer = params[0];
      if (a.layer != "tcp") fail_at("only tcp fragmentation is supported", params_at);
      a.index = number(params[1], params_at);
      if (params[2] != "True" && params[2] != "False") fail_at("fragment order must be True or False", params_at);
      a.in_order = params[2] == "True";
      arity = 2;
    } else if (name == "tamper") {
      a.kind = Action::Kind::Tamper;
      need(3, 4);
      a.protocol = params[0];
      a.field = params[1];
      a.op = params[2];
      if (a.op == "replace") {
        if (params.size() != 4) fail_at("tamper replace needs a value", params_at);
        a.value = params[3];
      } else if (a.op == "corrupt" || a.op == "duplicate") {
        if (params.size() != 3) fail_at("tamper " + a.op + " takes no value", params_at);
      } else {
        fail_at("unknown tamper op " + a.op, params_at);
      }
      if (a.protocol != "TCP" && a.protocol != "IP" && a.protocol != "DNS") {
        fail_at("unknown tamper protocol " + a.protocol, params_at);
      }
      if (a.op == "duplicate" && !(a.protocol == "DNS" && a.field == "question")) {
        fail_at("duplicate applies only to DNS:question", params_at);
      }
      arity = 1;
    } else if (name == "insert" || name == "replace") {
      const bool insert = name == "insert";
      a.kind = insert ? Action::Kind::Insert : Action::Kind::Replace;
      need(insert ? 4 : 3, insert ? 4 : 3);
      a.bytes = decode_bytes(params[0]);
      std::size_t i = 1;
      if (insert) {
        a.position = params[i++];
        if (a.position != "start" && a.position != "end") fail_at("insert position must be start or end", params_at);
      }
      a.component = params[i++];
      if (a.component != "name" && a.component != "value") fail_at("component must be name or value", params_at);
      a.count = number(params[i], params_at);
      if (a.count == 0) fail_at("count must be positive", params_at);
      arity = 1;
    } else {
      fail_at("unknown action \"" + name + "\"", start);
    }

    if (arity == 0) return a;
    a.children.resize(2);
    if (accept("(")) {
      a.children[0] = action();
      expect(",");
      a.children[1] = action();
      expect(")");
      if (arity == 1 && a.children[1].kind != Action::Kind::Send) fail_at(name + " has a single branch", start);
    }
    if (arity == 1) a.children.resize(1);
    return a;
  }

  void check_layers(const Trigger& t, const Action& a, std::size_t at) const {
    using K = Action::Kind;
    const bool http = t.protocol == "HTTP";
    if (http && (a.kind == K::Fragment || a.kind == K::Tamper)) fail_at("packet action under an HTTP trigger", at);
    if (!http && (a.kind == K::Insert || a.kind == K::Replace)) fail_at("HTTP action under a packet trigger", at);
    for (const auto& c : a.children) check_layers(t, c, at);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string tree_text(const Tree& t) {
  std::string out = "[" + t.trigger.protocol + ":" + t.trigger.field + ":" + t.trigger.value + "]-";
  std::string a = action_text(t.action);
  if (!a.empty()) out += a + "-";
  return out + "|";
}

}  // namespace

Strategy parse_strategy(std::string_view text) { return Parser(text).parse(); }

std::string action_text(const Action& a) {
  using K = Action::Kind;
  std::string out;
  switch (a.kind) {
    case K::Send:
      return "";
    case K::Drop:
      return "drop";
    case K::Duplicate:
      out = "duplicate";
      break;
    case K::Fragment:
      out = "fragment{" + a.layer + ":" + std::to_string(a.index) + ":" + (a.in_order ? "True" : "False") + "}";
      break;
    case K::Tamper:
      out = "tamper{" + a.protocol + ":" + a.field + ":" + a.op + (a.op == "replace" ? ":" + a.value : "") + "}";
      break;
    case K::Insert:
      out = "insert{" + encode_bytes(a.bytes) + ":" + a.position + ":" + a.component + ":" + std::to_string(a.count) + "}";
      break;
    case K::Replace:
      out = "replace{" + encode_bytes(a.bytes) + ":" + a.component + ":" + std::to_string(a.count) + "}";
      break;
  }
  bool all_send = true;
  for (const auto& c : a.children) all_send = all_send && c.kind == K::Send;
  if (all_send) return out;
  out += "(" + action_text(a.children[0]) + ",";
  if (a.children.size() > 1) out += action_text(a.children[1]);
  return out + ")";
}

std::string strategy_text(const Strategy& s) {
  std::string out;
  for (const auto& t : s.outbound) out += (out.empty() ? "" : " ") + tree_text(t);
  out += out.empty() ? "\\/" : " \\/";
  for (const auto& t : s.inbound) out += " " + tree_text(t);
  return out;
}

std::size_t leaf_count(const Action& a) {
  if (a.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : a.children) n += leaf_count(c);
  return n;
}

std::string encode_bytes(net::ByteView b) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (auto c : b) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

net::Bytes decode_bytes(std::string_view text) {
  net::Bytes out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size() && std::isxdigit(static_cast<unsigned char>(text[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(text[i + 2]))) {
      unsigned v = 0;
      std::from_chars(text.data() + i + 1, text.data() + i + 3, v, 16);
      out.push_back(static_cast<std::uint8_t>(v));
      i += 2;
    } else {
      out.push_back(static_cast<std::uint8_t>(text[i]));
    }
  }
  return out;
}

}  // namespace tmlab::evasion
