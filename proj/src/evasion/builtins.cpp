#include "tmlab/evasion/builtins.hpp"

#include <algorithm>

namespace tmlab::evasion {
namespace {

using blocklist::Protocol;

const std::vector<Protocol> kTcp = {Protocol::Http, Protocol::Https};

std::string teardown(const std::string& flags) {
  return "[TCP:flags:S]-duplicate(,duplicate(tamper{TCP:flags:replace:" + flags +
         "}(tamper{TCP:chksum:corrupt},),))-| \\/";
}

std::string sandwich(bool v2, std::size_t padding) {
  const std::string pad = "insert{%20:end:value:" + std::to_string(padding) + "}";
  return v2 ? "[HTTP:host:*]-" + pad + "(duplicate(duplicate(insert{%09:start:name:1},),replace{a:name:1}),)-| \\/"
            : "[HTTP:host:*]-" + pad + "(duplicate(duplicate(,replace{a:name:1}),insert{%09:start:name:1}),)-| \\/";
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_catalog() {
  static const std::vector<BuiltinInfo> catalog = {
      {"segmentation-http", kTcp, "split the request so the HTTP version token straddles two segments"},
      {"segmentation-tls-record", {Protocol::Https}, "split the ClientHello inside its record header"},
      {"segmentation-tls-sni", {Protocol::Https}, "split the ClientHello inside the server name"},
      {"tcb-teardown-rst", kTcp, "RST with a bad checksum right after the SYN"},
      {"tcb-teardown-fin", kTcp, "FIN with a bad checksum right after the SYN"},
      {"tcb-teardown-nonsense-flags", kTcp, "FIN+SYN+RST+PSH with a bad checksum right after the SYN"},
      {"free-pass-client", kTcp, "RST before the SYN, SYN delayed"},
      {"free-pass-server-elicited", kTcp, "PSH+ACK before the SYN so the server answers RST, SYN delayed"},
      {"dns-elevated-count-qdcount", {Protocol::Dns}, "declared qdcount above the inspection threshold"},
      {"dns-elevated-count-ancount", {Protocol::Dns}, "declared ancount above the inspection threshold"},
      {"dns-elevated-count-nscount", {Protocol::Dns}, "declared nscount above the inspection threshold"},
      {"dns-elevated-count-arcount", {Protocol::Dns}, "declared arcount above the inspection threshold"},
      {"dns-duplicate-question", {Protocol::Dns}, "second question without raising qdcount (legacy censor only)"},
      {"http-host-whitespace", {Protocol::Http}, "LF and tab before the Host value"},
      {"http-ws-after-version", {Protocol::Http}, "space, LF, tab after the HTTP version"},
      {"http-nl-before-method", {Protocol::Http}, "LF before the method"},
      {"sandwich-v1", {Protocol::Http}, "padded Host value between a renamed copy and a tab-prefixed copy"},
      {"sandwich-v2", {Protocol::Http}, "padded Host value after a tab-prefixed copy, before a renamed copy"},
  };
  return catalog;
}

const BuiltinInfo& builtin_info(const std::string& name) {
  const auto& c = builtin_catalog();
  auto it = std::find_if(c.begin(), c.end(), [&](const BuiltinInfo& b) { return b.name == name; });
  if (it == c.end()) {
    std::string names;
    for (const auto& b : c) names += (names.empty() ? "" : ", ") + b.name;
    throw UnknownBuiltin("unknown strategy \"" + name + "\"; known: " + names);
  }
  return *it;
}

Strategy builtin(const std::string& name, const BuiltinParams& params) {
  builtin_info(name);
  auto fragment = [&](std::size_t dflt) {
    return "[TCP:flags:PA]-fragment{tcp:" + std::to_string(params.split_index.value_or(dflt)) + ":True}-| \\/";
  };
  const std::string count = std::to_string(params.count_value.value_or(32));

  std::string text;
  bool delayed = false;
  if (name == "segmentation-http") text = fragment(8);
  else if (name == "segmentation-tls-record") text = fragment(5);
  else if (name == "segmentation-tls-sni") text = fragment(70);
  else if (name == "tcb-teardown-rst") text = teardown("R");
  else if (name == "tcb-teardown-fin") text = teardown("F");
  else if (name == "tcb-teardown-nonsense-flags") text = teardown("FSRP");
  else if (name == "free-pass-client") {
    text = "[TCP:flags:S]-duplicate(tamper{TCP:flags:replace:R},)-| \\/";
    delayed = true;
  } else if (name == "free-pass-server-elicited") {
    text = "[TCP:flags:S]-duplicate(tamper{TCP:flags:replace:PA},)-| \\/";
    delayed = true;
  } else if (name.starts_with("dns-elevated-count-")) {
    text = "[DNS:*:*]-tamper{DNS:" + name.substr(19) + ":replace:" + count + "}-| \\/";
  } else if (name == "dns-duplicate-question") text = "[DNS:*:*]-tamper{DNS:question:duplicate}-| \\/";
  else if (name == "http-host-whitespace") text = "[HTTP:host:*]-insert{%0A%09:start:value:1}-| \\/";
  else if (name == "http-ws-after-version") text = "[HTTP:version:*]-insert{%20%0A%09:end:value:1}-| \\/";
  else if (name == "http-nl-before-method") text = "[HTTP:method:*]-insert{%0A:start:value:1}-| \\/";
  else if (name == "sandwich-v1") text = sandwich(false, params.padding.value_or(3391));
  else text = sandwich(true, params.padding.value_or(3391));

  Strategy s = parse_strategy(text);
  // Leaf 1 is the untouched SYN on the right branch.
  if (delayed) s.outbound.front().leaf_delays[1] = params.delay.value_or(sim::secs(1));
  return s;
}

}  // namespace tmlab::evasion
