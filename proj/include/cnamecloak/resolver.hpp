// resolver.hpp
//
// CNAME resolution.  The offline resolver reads an fdns_index; the live
// resolver speaks plain DNS (RFC 1035) to one upstream server over UDP,
// retrying over TCP when the answer is truncated.

#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cnamecloak/domain.hpp"
#include "cnamecloak/error.hpp"
#include "cnamecloak/ingest.hpp"

namespace cnamecloak {

class cname_resolver {
public:
  virtual ~cname_resolver() = default;
  /// Empty chain when the name has no CNAME; throws resolve_error when
  /// the answer could not be obtained.
  virtual cname_chain resolve(std::string_view fqdn) const = 0;
};

class offline_resolver final : public cname_resolver {
public:
  explicit offline_resolver(const fdns_index& index) : index_{&index} {}
  cname_chain resolve(std::string_view fqdn) const override { return index_->chain(fqdn); }

private:
  const fdns_index* index_;
};

namespace dns {

inline constexpr std::uint16_t type_cname = 5;
inline constexpr std::uint16_t class_in = 1;

enum rcode : std::uint8_t { noerror = 0, formerr = 1, servfail = 2, nxdomain = 3, notimp = 4, refused = 5 };

inline void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

inline std::uint16_t get16(const std::vector<std::uint8_t>& msg, std::size_t pos) {
  if (pos + 2 > msg.size()) throw resolve_error("truncated dns message");
  return static_cast<std::uint16_t>((msg[pos] << 8) | msg[pos + 1]);
}

inline void encode_name(std::vector<std::uint8_t>& out, std::string_view name) {
  for (const auto& label : split_labels(normalize_host(name))) {
    if (label.empty()) continue;
    if (label.size() > 63) throw resolve_error("label too long in " + std::string(name));
    out.push_back(static_cast<std::uint8_t>(label.size()));
    out.insert(out.end(), label.begin(), label.end());
  }
  out.push_back(0);
}

/// Decodes a possibly compressed name starting at pos; pos is advanced
/// past the name as it appears in place.
inline std::string decode_name(const std::vector<std::uint8_t>& msg, std::size_t& pos) {
  std::string name;
  std::size_t cursor = pos;
  bool jumped = false;
  int jumps = 0;
  while (true) {
    if (cursor >= msg.size()) throw resolve_error("truncated name");
    std::uint8_t len = msg[cursor];
    if ((len & 0xc0) == 0xc0) {
      if (cursor + 1 >= msg.size()) throw resolve_error("truncated pointer");
      std::size_t target = static_cast<std::size_t>(((len & 0x3f) << 8) | msg[cursor + 1]);
      if (!jumped) pos = cursor + 2;
      jumped = true;
      if (++jumps > 64) throw resolve_error("compression loop");
      cursor = target;
      continue;
    }
    if (len == 0) {
      if (!jumped) pos = cursor + 1;
      break;
    }
    if (cursor + 1 + len > msg.size()) throw resolve_error("truncated label");
    if (!name.empty()) name += '.';
    name.append(reinterpret_cast<const char*>(&msg[cursor + 1]), len);
    cursor += 1 + len;
  }
  return normalize_host(name);
}

inline std::vector<std::uint8_t> build_query(std::uint16_t id, std::string_view name, std::uint16_t qtype) {
  std::vector<std::uint8_t> q;
  put16(q, id);
  put16(q, 0x0100);  // RD
  put16(q, 1);
  put16(q, 0);
  put16(q, 0);
  put16(q, 0);
  encode_name(q, name);
  put16(q, qtype);
  put16(q, class_in);
  return q;
}

struct parsed_response {
  std::uint16_t id = 0;
  bool truncated = false;
  std::uint8_t rcode = 0;
  std::optional<std::string> cname;  // target of qname's CNAME, if any
};

inline parsed_response parse_response(const std::vector<std::uint8_t>& msg, std::string_view qname) {
  parsed_response r;
  r.id = get16(msg, 0);
  const std::uint16_t flags = get16(msg, 2);
  if (!(flags & 0x8000)) throw resolve_error("not a response");
  r.truncated = (flags & 0x0200) != 0;
  r.rcode = static_cast<std::uint8_t>(flags & 0x000f);
  const std::uint16_t qd = get16(msg, 4), an = get16(msg, 6);
  std::size_t pos = 12;
  for (std::uint16_t i = 0; i < qd; ++i) {
    decode_name(msg, pos);
    pos += 4;
  }
  const std::string owner = normalize_host(qname);
  for (std::uint16_t i = 0; i < an; ++i) {
    std::string name = decode_name(msg, pos);
    const std::uint16_t type = get16(msg, pos);
    const std::uint16_t rdlen = get16(msg, pos + 8);
    std::size_t rdata = pos + 10;
    if (rdata + rdlen > msg.size()) throw resolve_error("truncated rdata");
    if (type == type_cname && name == owner && !r.cname) {
      std::size_t p = rdata;
      r.cname = decode_name(msg, p);
    }
    pos = rdata + rdlen;
  }
  return r;
}

/// An upstream "host:port" (ipv4) address.
struct endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 53;

  static endpoint parse(std::string_view text) {
    endpoint ep;
    auto colon = text.rfind(':');
    ep.host = std::string(text.substr(0, colon));
    if (colon != std::string_view::npos) {
      int port = 0;
      try {
        port = std::stoi(std::string(text.substr(colon + 1)));
      } catch (const std::exception&) {
        throw config_error("bad upstream port in '" + std::string(text) + "'");
      }
      if (port <= 0 || port > 65535) throw config_error("bad upstream port in '" + std::string(text) + "'");
      ep.port = static_cast<std::uint16_t>(port);
    }
    in_addr probe{};
    if (inet_pton(AF_INET, ep.host.c_str(), &probe) != 1)
      throw config_error("upstream must be an ipv4 address, got '" + ep.host + "'");
    return ep;
  }

  sockaddr_in sockaddr() const {
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(port);
    inet_pton(AF_INET, host.c_str(), &sa.sin_addr);
    return sa;
  }
};

/// Owns one socket descriptor.
class socket_handle {
public:
  explicit socket_handle(int fd) : fd_{fd} {}
  socket_handle(const socket_handle&) = delete;
  socket_handle& operator=(const socket_handle&) = delete;
  ~socket_handle() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }

private:
  int fd_;
};

inline bool wait_readable(int fd, int timeout_ms) {
  pollfd p{fd, POLLIN, 0};
  int rc = ::poll(&p, 1, timeout_ms);
  return rc > 0 && (p.revents & POLLIN);
}

}  // namespace dns

class live_resolver final : public cname_resolver {
public:
  explicit live_resolver(dns::endpoint upstream, int timeout_ms = 2000, int attempts = 2)
      : upstream_{std::move(upstream)}, timeout_ms_{timeout_ms}, attempts_{attempts} {}

  /// Follows CNAMEs hop by hop, up to max_cname_hops.
  cname_chain resolve(std::string_view fqdn) const override {
    cname_chain c;
    c.owner = normalize_host(fqdn);
    std::unordered_set<std::string> seen{c.owner};
    std::string current = c.owner;
    while (auto target = query_cname(current)) {
      if (seen.count(*target)) break;
      if (c.targets.size() == max_cname_hops) {
        c.truncated = true;
        break;
      }
      c.targets.push_back(*target);
      seen.insert(*target);
      current = *target;
    }
    return c;
  }

  /// One CNAME query.  NXDOMAIN and empty answers yield nullopt.
  std::optional<std::string> query_cname(std::string_view name) const {
    const auto id = static_cast<std::uint16_t>(next_id_.fetch_add(1) & 0xffff);
    auto query = dns::build_query(id, name, dns::type_cname);
    for (int attempt = 0; attempt < attempts_; ++attempt) {
      auto reply = exchange_udp(query, id);
      if (!reply) continue;
      auto parsed = dns::parse_response(*reply, name);
      if (parsed.truncated) parsed = dns::parse_response(exchange_tcp(query), name);
      return interpret(parsed, name);
    }
    throw resolve_error("timeout querying " + std::string(name));
  }

private:
  static std::optional<std::string> interpret(const dns::parsed_response& r, std::string_view name) {
    if (r.rcode == dns::nxdomain) return std::nullopt;
    if (r.rcode != dns::noerror)
      throw resolve_error("rcode " + std::to_string(r.rcode) + " for " + std::string(name));
    return r.cname;
  }

  std::optional<std::vector<std::uint8_t>> exchange_udp(const std::vector<std::uint8_t>& query, std::uint16_t id) const {
    dns::socket_handle sock(::socket(AF_INET, SOCK_DGRAM, 0));
    if (sock.get() < 0) throw resolve_error(std::string("socket: ") + std::strerror(errno));
    auto sa = upstream_.sockaddr();
    if (::sendto(sock.get(), query.data(), query.size(), 0, reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0)
      throw resolve_error(std::string("sendto: ") + std::strerror(errno));
    auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    std::vector<std::uint8_t> buf(4096);
    while (true) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now()).count();
      if (left <= 0 || !dns::wait_readable(sock.get(), static_cast<int>(left))) return std::nullopt;
      auto n = ::recv(sock.get(), buf.data(), buf.size(), 0);
      if (n < 12) continue;
      std::vector<std::uint8_t> msg(buf.begin(), buf.begin() + n);
      if (dns::get16(msg, 0) == id) return msg;  // ignore stray datagrams
    }
  }

  std::vector<std::uint8_t> exchange_tcp(const std::vector<std::uint8_t>& query) const {
    dns::socket_handle sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (sock.get() < 0) throw resolve_error(std::string("socket: ") + std::strerror(errno));
    auto sa = upstream_.sockaddr();
    if (::connect(sock.get(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) < 0)
      throw resolve_error(std::string("tcp connect: ") + std::strerror(errno));
    std::vector<std::uint8_t> framed;
    dns::put16(framed, static_cast<std::uint16_t>(query.size()));
    framed.insert(framed.end(), query.begin(), query.end());
    if (::send(sock.get(), framed.data(), framed.size(), 0) != static_cast<ssize_t>(framed.size()))
      throw resolve_error("tcp send failed");
    auto read_exact = [&](std::size_t n) {
      std::vector<std::uint8_t> out(n);
      std::size_t got = 0;
      while (got < n) {
        if (!dns::wait_readable(sock.get(), timeout_ms_)) throw resolve_error("tcp timeout");
        auto r = ::recv(sock.get(), out.data() + got, n - got, 0);
        if (r <= 0) throw resolve_error("tcp connection closed");
        got += static_cast<std::size_t>(r);
      }
      return out;
    };
    auto len = read_exact(2);
    return read_exact(static_cast<std::size_t>((len[0] << 8) | len[1]));
  }

  dns::endpoint upstream_;
  int timeout_ms_;
  int attempts_;
  mutable std::atomic<std::uint32_t> next_id_{0x2a2a};
};

}  // namespace cnamecloak
