#include "pfad/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "pfad/errors.hpp"
#include "pfad/rng.hpp"

namespace pfad {

namespace {

FeatureDescriptor cat(std::string name, Protocol p, std::vector<std::string> labels) {
  FeatureDescriptor f;
  f.name = std::move(name);
  f.kind = FeatureKind::categorical;
  f.protocol = p;
  f.labels = std::move(labels);
  return f;
}

FeatureDescriptor num(std::string name, Protocol p, double lo, double hi, bool integral = true) {
  FeatureDescriptor f;
  f.name = std::move(name);
  f.kind = FeatureKind::numerical;
  f.protocol = p;
  f.integral = integral;
  f.range = Interval{lo, hi};
  return f;
}

FeatureDescriptor unbounded(std::string name, Protocol p) {
  FeatureDescriptor f;
  f.name = std::move(name);
  f.kind = FeatureKind::numerical;
  f.protocol = p;
  return f;
}

std::vector<std::string> range_labels(int lo, int hi) {
  std::vector<std::string> out;
  for (int v = lo; v <= hi; ++v) out.push_back(std::to_string(v));
  return out;
}

const std::vector<std::string> kBit = {"0", "1"};
constexpr double kU32 = 4294967295.0;
constexpr double kU24 = 16777215.0;

}  // namespace

FeatureSchema pfcp_schema() {
  using P = Protocol;
  std::vector<std::string> msg_types = range_labels(1, 15);
  for (int v = 50; v <= 57; ++v) msg_types.push_back(std::to_string(v));

  std::vector<FeatureDescriptor> f = {
      unbounded("frame.number", P::meta),
      unbounded("frame.time_epoch", P::meta),

      num("ip.version", P::ip, 0, 15),
      num("ip.hdr_len", P::ip, 20, 60),
      num("ip.dsfield", P::ip, 0, 255),
      num("ip.len", P::ip, 20, 65535),
      num("ip.id", P::ip, 0, 65535),
      cat("ip.flags.rb", P::ip, kBit),
      cat("ip.flags.df", P::ip, kBit),
      cat("ip.flags.mf", P::ip, kBit),
      num("ip.frag_offset", P::ip, 0, 8191),
      num("ip.ttl", P::ip, 0, 255),
      cat("ip.proto", P::ip, {"1", "6", "17"}),
      cat("ip.checksum.status", P::ip, {"0", "1", "2"}),
      cat("ip.src", P::ip, {}),
      cat("ip.dst", P::ip, {}),
      cat("ip.src_host", P::ip, {}),
      cat("ip.dst_host", P::ip, {}),

      num("udp.srcport", P::udp, 0, 65535),
      num("udp.dstport", P::udp, 0, 65535),
      num("udp.length", P::udp, 8, 65535),
      num("udp.checksum", P::udp, 0, 65535),
      cat("udp.checksum.status", P::udp, {"0", "1", "2"}),
      unbounded("udp.stream", P::udp),

      num("tcp.srcport", P::tcp, 0, 65535),
      num("tcp.dstport", P::tcp, 0, 65535),
      cat("tcp.flags", P::tcp, {"0x0002", "0x0004", "0x0010", "0x0011", "0x0012", "0x0018"}),
      num("tcp.len", P::tcp, 0, 65535),
      cat("icmp.type", P::icmp, {"0", "3", "8", "11"}),
      cat("icmp.code", P::icmp, {"0", "1", "3"}),

      num("pfcp.version", P::pfcp, 0, 7),
      cat("pfcp.mp", P::pfcp, kBit),
      cat("pfcp.s", P::pfcp, kBit),
      cat("pfcp.flags", P::pfcp, {"0x20", "0x21", "0x22", "0x23"}),
      cat("pfcp.msg_type", P::pfcp, msg_types),
      num("pfcp.length", P::pfcp, 0, 65535),
      num("pfcp.seid", P::pfcp, 0, kU32),
      num("pfcp.seqno", P::pfcp, 0, kU24),
      cat("pfcp.ie_type", P::pfcp,
          {"1", "2", "3", "4", "5", "9", "10", "19", "39", "56", "57", "60", "96"}),
      num("pfcp.ie_len", P::pfcp, 0, 65535),
      unbounded("pfcp.recovery_time_stamp", P::pfcp),
      cat("pfcp.node_id_type", P::pfcp, {"0", "1", "2"}),
      cat("pfcp.node_id_ipv4", P::pfcp, {}),
      cat("pfcp.cause", P::pfcp, {"1", "64", "65", "66", "67", "68", "69", "72"}),
      cat("pfcp.f_seid.ipv4", P::pfcp, {}),
      num("pfcp.pdr_id", P::pfcp, 0, 65535),
      num("pfcp.precedence", P::pfcp, 0, kU32),
      num("pfcp.far_id", P::pfcp, 0, kU32),
      num("pfcp.qer_id", P::pfcp, 0, kU32),
      cat("pfcp.source_interface", P::pfcp, {"0", "1", "2", "3"}),
      cat("pfcp.dst_interface", P::pfcp, {"0", "1", "2", "3", "4"}),
      cat("pfcp.apply_action.forw", P::pfcp, kBit),
      cat("pfcp.apply_action.buff", P::pfcp, kBit),
      cat("pfcp.apply_action.nocp", P::pfcp, kBit),
      cat("pfcp.apply_action.drop", P::pfcp, kBit),
      cat("pfcp.f_teid_flags.v4", P::pfcp, kBit),
      cat("pfcp.f_teid_flags.v6", P::pfcp, kBit),
      cat("pfcp.f_teid_flags.ch", P::pfcp, kBit),
      cat("pfcp.f_teid_flags.ch_id", P::pfcp, kBit),
      num("pfcp.f_teid.teid", P::pfcp, 0, kU32),
      cat("pfcp.f_teid.ipv4_addr", P::pfcp, {}),
      cat("pfcp.pdn_type", P::pfcp, range_labels(0, 5)),
      cat("pfcp.ue_ip_addr_ipv4", P::pfcp, {}),
      cat("pfcp.outer_hdr_creation.desc", P::pfcp, {"256", "512", "1024", "2048"}),
      num("pfcp.outer_hdr_creation.teid", P::pfcp, 0, kU32),
      cat("pfcp.outer_hdr_creation.ipv4", P::pfcp, {}),
      cat("pfcp.network_instance", P::pfcp, {"ims", "internet"}),
      num("pfcp.user_plane_inactivity_timer", P::pfcp, 0, kU32),
  };
  return FeatureSchema(std::move(f), 1);
}

namespace {

std::string I(long long v) { return std::to_string(v); }

std::string D(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string ipv4(int a, int b, int c, int d) {
  return I(a) + "." + I(b) + "." + I(c) + "." + I(d);
}

// Normal draw clipped to [lo, hi] and rounded to an integer.
long long rounded_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  double v = rng.normal(mean, sd);
  for (int tries = 0; tries < 16 && (v < lo || v > hi); ++tries) v = rng.normal(mean, sd);
  return std::llround(std::clamp(v, lo, hi));
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& values) {
  return values[rng.below(values.size())];
}

const std::string kSmf = "10.100.200.2";
const std::string kUpf = "10.100.200.3";
const std::string kGnb = "10.100.50.240";

struct Message {
  RawRecord& r;
  void set(const std::string& k, std::string v) { r[k] = std::move(v); }
};

void blank(const FeatureSchema& schema, RawRecord& r) {
  r.clear();
  for (const auto& f : schema.features()) r[f.name] = "";
}

void frame_fields(Message m, std::uint64_t frame) {
  m.set("frame.number", I(static_cast<long long>(frame + 1)));
  m.set("frame.time_epoch", D(1.7e9 + 0.004 * static_cast<double>(frame)));
}

void ip_header(Message m, Rng& rng, int proto, const std::string& src, const std::string& dst) {
  m.set("ip.version", "4");
  m.set("ip.hdr_len", "20");
  m.set("ip.dsfield", "0");
  m.set("ip.id", I(rng.integer(0, 65535)));
  m.set("ip.flags.rb", "0");
  m.set("ip.flags.df", rng.bernoulli(0.985) ? "1" : "0");
  m.set("ip.flags.mf", "0");
  m.set("ip.frag_offset", "0");
  m.set("ip.ttl", rng.bernoulli(0.95) ? "64" : "63");
  m.set("ip.proto", I(proto));
  m.set("ip.checksum.status", "2");
  m.set("ip.src", src);
  m.set("ip.dst", dst);
  m.set("ip.src_host", src);
  m.set("ip.dst_host", dst);
}

void set_lengths(Message m, long long pfcp_length) {
  m.set("pfcp.length", I(pfcp_length));
  m.set("udp.length", I(pfcp_length + 12));
  m.set("ip.len", I(pfcp_length + 32));
}

std::string cause(Rng& rng) {
  const double u = rng.uniform();
  return u < 0.97 ? "1" : u < 0.99 ? "64" : "65";
}

std::string ue_address(Rng& rng) {
  return ipv4(10, 45, static_cast<int>(rng.integer(0, 255)), static_cast<int>(rng.integer(1, 254)));
}

// A benign PFCP message of the given type, written into m. Session state
// (SEIDs, TEIDs) is drawn from the pools a single SMF/UPF pair would use.
void pfcp_message(Message m, Rng& rng, int type, std::uint64_t frame, double noise) {
  const bool session = type >= 50;
  const bool request = type % 2 == (type >= 50 ? 0 : 1);
  frame_fields(m, frame);
  const std::string& src = request ? kSmf : kUpf;
  const std::string& dst = request ? kUpf : kSmf;
  ip_header(m, rng, 17, src, dst);
  const std::string ephemeral = I(rng.integer(32768, 60999));
  m.set("udp.srcport", request ? ephemeral : "8805");
  m.set("udp.dstport", request ? "8805" : ephemeral);
  m.set("udp.checksum", "0");
  m.set("udp.checksum.status", "2");
  m.set("udp.stream", I(static_cast<long long>(frame % 11)));

  m.set("pfcp.version", "1");
  m.set("pfcp.mp", "0");
  m.set("pfcp.s", session ? "1" : "0");
  m.set("pfcp.flags", session ? "0x21" : "0x20");
  m.set("pfcp.msg_type", I(type));
  m.set("pfcp.seqno", I(rng.integer(1, 20000)));
  if (session) m.set("pfcp.seid", type == 50 ? "0" : I(rng.integer(1, 50000)));

  auto node_id = [&] {
    m.set("pfcp.ie_type", "60");
    m.set("pfcp.ie_len", "5");
    m.set("pfcp.node_id_type", "0");
    m.set("pfcp.node_id_ipv4", src);
  };

  long long length = 12;
  switch (type) {
    case 1:
    case 2:
      m.set("pfcp.ie_type", "96");
      m.set("pfcp.ie_len", "4");
      m.set("pfcp.recovery_time_stamp", I(3900000000LL + rng.integer(0, 86400)));
      length = 12;
      break;
    case 5:
    case 6:
      node_id();
      m.set("pfcp.recovery_time_stamp", I(3900000000LL + rng.integer(0, 86400)));
      if (type == 6) m.set("pfcp.cause", cause(rng));
      length = rounded_normal(rng, 40, 4 * noise, 24, 80);
      break;
    case 50: {
      node_id();
      m.set("pfcp.f_seid.ipv4", kSmf);
      const bool uplink = rng.bernoulli(0.5);
      m.set("pfcp.pdr_id", I(rng.integer(1, 2)));
      m.set("pfcp.precedence", rng.bernoulli(0.5) ? "32" : "255");
      m.set("pfcp.far_id", I(rng.integer(1, 2)));
      m.set("pfcp.qer_id", "1");
      m.set("pfcp.source_interface", uplink ? "0" : "1");
      m.set("pfcp.dst_interface", uplink ? "1" : "0");
      m.set("pfcp.apply_action.forw", "1");
      m.set("pfcp.apply_action.buff", "0");
      m.set("pfcp.apply_action.nocp", "0");
      m.set("pfcp.apply_action.drop", "0");
      const double u = rng.uniform();
      const std::string pdn = u < 0.6 ? "1" : u < 0.9 ? "3" : "2";
      m.set("pfcp.pdn_type", pdn);
      const bool choose = rng.bernoulli(0.7);
      m.set("pfcp.f_teid_flags.v4", "1");
      m.set("pfcp.f_teid_flags.v6", pdn == "1" ? "0" : "1");
      m.set("pfcp.f_teid_flags.ch", choose ? "1" : "0");
      m.set("pfcp.f_teid_flags.ch_id", choose && rng.bernoulli(0.3) ? "1" : "0");
      if (!choose) {
        m.set("pfcp.f_teid.teid", I(rng.integer(1, static_cast<long long>(kTeidPoolSize))));
        m.set("pfcp.f_teid.ipv4_addr", kUpf);
      }
      m.set("pfcp.ue_ip_addr_ipv4", ue_address(rng));
      m.set("pfcp.network_instance", rng.bernoulli(0.9) ? "internet" : "ims");
      length = rounded_normal(rng, 220, 25 * noise, 120, 400);
      break;
    }
    case 51:
      node_id();
      m.set("pfcp.cause", cause(rng));
      m.set("pfcp.f_seid.ipv4", kUpf);
      m.set("pfcp.pdr_id", I(rng.integer(1, 2)));
      m.set("pfcp.f_teid_flags.v4", "1");
      m.set("pfcp.f_teid_flags.v6", rng.bernoulli(0.15) ? "1" : "0");
      m.set("pfcp.f_teid_flags.ch", "0");
      m.set("pfcp.f_teid_flags.ch_id", "0");
      m.set("pfcp.f_teid.teid", I(rng.integer(1, static_cast<long long>(kTeidPoolSize))));
      m.set("pfcp.f_teid.ipv4_addr", kUpf);
      length = rounded_normal(rng, 60, 6 * noise, 40, 100);
      break;
    case 52:
      if (rng.bernoulli(0.7)) {
        // Update FAR: handover / paging transitions.
        m.set("pfcp.ie_type", "10");
        m.set("pfcp.ie_len", I(rounded_normal(rng, 24, 3 * noise, 12, 40)));
        m.set("pfcp.far_id", I(rng.integer(1, 2)));
        m.set("pfcp.dst_interface", rng.bernoulli(0.9) ? "0" : "1");
        const bool forward = rng.bernoulli(0.8);
        m.set("pfcp.apply_action.forw", forward ? "1" : "0");
        m.set("pfcp.apply_action.buff", forward ? "0" : "1");
        m.set("pfcp.apply_action.nocp", !forward && rng.bernoulli(0.9) ? "1" : "0");
        m.set("pfcp.apply_action.drop", "0");
        if (forward) {
          m.set("pfcp.outer_hdr_creation.desc", "256");
          m.set("pfcp.outer_hdr_creation.teid", I(rng.integer(1, static_cast<long long>(kTeidPoolSize))));
          m.set("pfcp.outer_hdr_creation.ipv4", kGnb);
        }
        length = rounded_normal(rng, 50, 6 * noise, 30, 90);
      } else {
        // Create PDR.
        m.set("pfcp.ie_type", "1");
        m.set("pfcp.ie_len", I(rounded_normal(rng, 48, 6 * noise, 24, 80)));
        m.set("pfcp.pdr_id", I(rng.integer(1, 4)));
        m.set("pfcp.precedence", pick(rng, std::vector<std::string>{"32", "64", "255"}));
        m.set("pfcp.source_interface", "0");
        m.set("pfcp.far_id", I(rng.integer(1, 2)));
        length = rounded_normal(rng, 90, 10 * noise, 60, 140);
      }
      break;
    case 53:
      m.set("pfcp.ie_type", "19");
      m.set("pfcp.ie_len", "1");
      m.set("pfcp.cause", cause(rng));
      length = 17;
      break;
    case 54:
      length = 12;
      break;
    case 55:
      m.set("pfcp.ie_type", "19");
      m.set("pfcp.ie_len", "1");
      m.set("pfcp.cause", cause(rng));
      length = rng.bernoulli(0.3) ? rounded_normal(rng, 60, 8 * noise, 30, 120) : 17;
      break;
    default:
      throw ConfigError("no benign template for PFCP message type " + I(type));
  }
  set_lengths(m, length);
}

// TCP/ICMP side traffic captured on the same interface (SBI, probes).
void side_traffic(Message m, Rng& rng, std::uint64_t frame) {
  frame_fields(m, frame);
  if (rng.bernoulli(0.8)) {
    ip_header(m, rng, 6, "10.100.200.10", kSmf);
    m.set("tcp.srcport", I(rng.integer(32768, 60999)));
    m.set("tcp.dstport", "7777");
    m.set("tcp.flags", pick(rng, std::vector<std::string>{"0x0002", "0x0010", "0x0012", "0x0018", "0x0011"}));
    const long long len = rng.integer(0, 1400);
    m.set("tcp.len", I(len));
    m.set("ip.len", I(len + 40));
  } else {
    ip_header(m, rng, 1, "10.100.200.10", kUpf);
    m.set("icmp.type", rng.bernoulli(0.5) ? "8" : "0");
    m.set("icmp.code", "0");
    m.set("ip.len", "84");
  }
}

int benign_type(Rng& rng) {
  static const std::vector<int> types = {1, 2, 5, 6, 50, 51, 52, 53, 54, 55};
  static const std::vector<double> weights = {0.20, 0.20, 0.01, 0.01, 0.10, 0.10, 0.12, 0.12, 0.07, 0.07};
  return types[rng.weighted(weights)];
}

const std::vector<std::string> kDropoutFields = {"ip.ttl", "ip.id", "pfcp.seqno", "pfcp.ie_len", "udp.length"};

// Artefacts of the packet-crafting tool shared by every attack class. Each
// field keeps the benign-looking value with probability kKeep, otherwise it
// takes a value the legitimate SMF/UPF never emits.
constexpr double kKeep = 0.33;

void crafted_headers(Message m, Rng& rng) {
  m.set("ip.src", "10.100.200.66");
  m.set("ip.src_host", "10.100.200.66");
  m.set("udp.srcport", I(rng.integer(1024, 65535)));
  m.set("ip.ttl", rng.bernoulli(kKeep) ? "64" : pick(rng, std::vector<std::string>{"1", "16", "32"}));
  m.set("ip.flags.df", rng.bernoulli(kKeep) ? "1" : "0");
  m.set("ip.id", rng.bernoulli(0.5) ? "1" : I(rng.integer(0, 65535)));
}

void crafted_ie(Message m, Rng& rng, const std::string& benign_value) {
  if (rng.bernoulli(kKeep))
    m.set("pfcp.ie_type", benign_value);
  else
    m.set("pfcp.ie_type", pick(rng, std::vector<std::string>{"2", "3", "4", "5", "39", "56", "57"}));
}

void crafted_small_id(Message m, Rng& rng, const std::string& field, long long lo, long long hi) {
  // The tool leaves rule identifiers at zero unless the template sets them.
  m.set(field, I(rng.bernoulli(kKeep) ? rng.integer(lo, hi) : 0));
}

void random_session_header(Message m, Rng& rng) {
  m.set("pfcp.seqno", I(rng.integer(0, static_cast<long long>(kU24))));
  m.set("pfcp.seid", I(rng.integer(1, static_cast<long long>(kU32))));
}

void attack_message(Message m, Rng& rng, ClassLabel kind, std::uint64_t frame, double noise) {
  switch (kind) {
    case ClassLabel::Flood: {
      pfcp_message(m, rng, 50, frame, noise);
      random_session_header(m, rng);
      const bool s = rng.bernoulli(0.5);
      m.set("pfcp.s", s ? "1" : "0");
      m.set("pfcp.flags", s ? "0x21" : "0x20");
      m.set("pfcp.ue_ip_addr_ipv4", ue_address(rng));
      crafted_ie(m, rng, "60");
      crafted_small_id(m, rng, "pfcp.pdr_id", 1, 2);
      crafted_small_id(m, rng, "pfcp.far_id", 1, 2);
      crafted_small_id(m, rng, "pfcp.qer_id", 1, 1);
      {
        const bool keep = rng.bernoulli(kKeep);
        const bool uplink = rng.bernoulli(0.5);
        m.set("pfcp.source_interface", keep ? (uplink ? "0" : "1") : (uplink ? "2" : "3"));
      }
      // The tool pads its requests to a template larger than any request the
      // legitimate SMF sends.
      set_lengths(m, rng.integer(330, 420));
      break;
    }
    case ClassLabel::RestorationTEID: {
      pfcp_message(m, rng, 50, frame, noise);
      // Explicit F-TEID outside the UPF's pool.
      m.set("pfcp.f_teid_flags.ch", "0");
      m.set("pfcp.f_teid_flags.ch_id", "0");
      m.set("pfcp.f_teid.teid", I(rng.integer(static_cast<long long>(kTeidPoolSize) + 1, static_cast<long long>(kU32))));
      m.set("pfcp.f_teid.ipv4_addr", ipv4(10, 100, 200, static_cast<int>(rng.integer(100, 200))));
      m.set("pfcp.node_id_ipv4", "10.100.200.66");
      m.set("pfcp.f_seid.ipv4", "10.100.200.66");
      random_session_header(m, rng);
      crafted_ie(m, rng, "60");
      crafted_small_id(m, rng, "pfcp.pdr_id", 1, 2);
      m.set("pfcp.ie_len", rng.bernoulli(kKeep) ? "5" : I(rng.integer(16, 255)));
      break;
    }
    case ClassLabel::Deletion: {
      pfcp_message(m, rng, 54, frame, noise);
      m.set("pfcp.s", "1");
      m.set("pfcp.flags", rng.bernoulli(0.5) ? "0x21" : "0x23");
      m.set("pfcp.seid", I(rng.integer(1, 50000)));
      m.set("pfcp.seqno", I(rng.integer(0, static_cast<long long>(kU24))));
      if (!rng.bernoulli(kKeep)) {
        crafted_ie(m, rng, "");
        m.set("pfcp.ie_len", I(rng.integer(1, 64)));
      }
      set_lengths(m, rng.bernoulli(kKeep) ? 12 : rng.integer(13, 200));
      break;
    }
    case ClassLabel::Modification: {
      pfcp_message(m, rng, 52, frame, noise);
      m.set("pfcp.seid", I(rng.integer(1, 50000)));
      m.set("pfcp.seqno", I(rng.integer(0, static_cast<long long>(kU24))));
      m.set("pfcp.ie_type", "10");
      m.set("pfcp.ie_len", I(rounded_normal(rng, 24, 3 * noise, 12, 40)));
      m.set("pfcp.far_id", I(rng.integer(1, 2)));
      m.set("pfcp.pdr_id", "");
      m.set("pfcp.precedence", "");
      m.set("pfcp.source_interface", "");
      // FAR turned into a drop rule with a broken tunnel towards the wrong side.
      m.set("pfcp.apply_action.forw", "0");
      m.set("pfcp.apply_action.buff", rng.bernoulli(0.5) ? "1" : "0");
      m.set("pfcp.apply_action.nocp", rng.bernoulli(0.5) ? "1" : "0");
      m.set("pfcp.apply_action.drop", "0");
      m.set("pfcp.dst_interface", "1");
      m.set("pfcp.outer_hdr_creation.desc", "256");
      m.set("pfcp.outer_hdr_creation.teid",
            rng.bernoulli(0.5) ? "0" : I(rng.integer(static_cast<long long>(kTeidPoolSize) + 1, static_cast<long long>(kU32))));
      m.set("pfcp.outer_hdr_creation.ipv4", ipv4(10, 100, 99, static_cast<int>(rng.integer(1, 254))));
      const bool s = rng.bernoulli(0.7);
      m.set("pfcp.flags", s ? "0x21" : "0x23");
      set_lengths(m, rng.bernoulli(kKeep) ? rounded_normal(rng, 50, 6 * noise, 30, 90) : rng.integer(100, 400));
      break;
    }
    case ClassLabel::PDN0Fault: {
      pfcp_message(m, rng, 50, frame, noise);
      m.set("pfcp.pdn_type", "0");
      m.set("pfcp.node_id_ipv4", "10.100.200.66");
      m.set("pfcp.f_seid.ipv4", "10.100.200.66");
      m.set("pfcp.ue_ip_addr_ipv4", ue_address(rng));
      m.set("pfcp.seqno", I(rng.integer(0, static_cast<long long>(kU24))));
      crafted_small_id(m, rng, "pfcp.pdr_id", 1, 2);
      // Invalid F-TEID flag combinations.
      m.set("pfcp.f_teid_flags.ch", rng.bernoulli(kKeep) ? "1" : "0");
      m.set("pfcp.f_teid_flags.ch_id", rng.bernoulli(kKeep) ? "0" : "1");
      m.set("pfcp.f_teid_flags.v6", rng.bernoulli(kKeep) ? "0" : "1");
      m.set("pfcp.f_teid_flags.v4", rng.bernoulli(0.5) ? "1" : "0");
      break;
    }
    case ClassLabel::Normal:
      throw ConfigError("synth_attack needs an attack class");
  }
  crafted_headers(m, rng);
}

}  // namespace

LabeledDataset synth_benign(const SynthConfig& cfg, const FeatureSchema& schema) {
  if (!(cfg.noise_scale > 0)) throw ConfigError("noise_scale must be > 0");
  LabeledDataset ds;
  ds.schema = schema;
  ds.rows.reserve(cfg.n_benign);
  RawRecord rec;
  for (std::size_t i = 0; i < cfg.n_benign; ++i) {
    Rng rng(derive_seed(cfg.seed, "synth/benign", i));
    blank(schema, rec);
    const std::uint64_t frame = cfg.frame_offset + i;
    if (cfg.tcp_fraction > 0 && rng.bernoulli(cfg.tcp_fraction)) {
      side_traffic(Message{rec}, rng, frame);
    } else {
      pfcp_message(Message{rec}, rng, benign_type(rng), frame, cfg.noise_scale);
      for (const auto& name : kDropoutFields)
        if (cfg.missing_rate > 0 && rng.bernoulli(cfg.missing_rate)) rec[name] = "";
    }
    FeatureVector x = encode_categorical(schema, rec);
    const auto id = row_identity(row_line(schema, x, ClassLabel::Normal));
    ds.add(std::move(x), ClassLabel::Normal, id);
  }
  return ds;
}

LabeledDataset synth_attack(ClassLabel kind, std::size_t n, std::uint64_t seed, const FeatureSchema& schema,
                            double noise_scale, std::uint64_t frame_offset) {
  if (!is_attack(kind)) throw ConfigError("synth_attack needs an attack class, got Normal");
  LabeledDataset ds;
  ds.schema = schema;
  ds.rows.reserve(n);
  RawRecord rec;
  const std::string stream = "synth/" + std::string(class_name(kind));
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, stream, i));
    blank(schema, rec);
    attack_message(Message{rec}, rng, kind, frame_offset + i, noise_scale);
    FeatureVector x = encode_categorical(schema, rec);
    const auto id = row_identity(row_line(schema, x, kind));
    ds.add(std::move(x), kind, id);
  }
  return ds;
}

LabeledDataset synth_dataset(const SynthConfig& cfg, const FeatureSchema& schema) {
  LabeledDataset ds = synth_benign(cfg, schema);
  std::uint64_t frame = cfg.frame_offset + cfg.n_benign;
  for (ClassLabel c : kAttackClasses) {
    auto it = cfg.attack_counts.find(c);
    if (it == cfg.attack_counts.end() || it->second == 0) continue;
    const auto part = synth_attack(c, it->second, derive_seed(cfg.seed, "synth/attacks"), schema, cfg.noise_scale, frame);
    frame += it->second;
    for (std::size_t r = 0; r < part.size(); ++r) ds.add(part.rows[r], part.labels[r], part.row_ids[r]);
  }
  return ds;
}

SplitCounts reference_counts() {
  using C = ClassLabel;
  SplitCounts s;
  s.train = {{C::Normal, 21341}};
  s.validation = {{C::Normal, 4731}, {C::RestorationTEID, 13}, {C::Flood, 1039},
                  {C::Deletion, 7},  {C::Modification, 16},   {C::PDN0Fault, 10}};
  s.test = {{C::Normal, 4732}, {C::RestorationTEID, 22}, {C::Flood, 1026},
            {C::Deletion, 13}, {C::Modification, 12},    {C::PDN0Fault, 12}};
  return s;
}

SplitCounts scaled_counts(const SplitCounts& base, double scale) {
  if (!(scale > 0)) throw ConfigError("count scale must be > 0");
  auto apply = [&](const std::map<ClassLabel, std::size_t>& m) {
    std::map<ClassLabel, std::size_t> out;
    for (const auto& [c, n] : m) {
      auto v = static_cast<std::size_t>(std::llround(static_cast<double>(n) * scale));
      if (n > 0 && v == 0) v = 1;
      out[c] = v;
    }
    return out;
  };
  return {apply(base.train), apply(base.validation), apply(base.test)};
}

Splits synth_splits(const SynthBenchmark& bench, const FeatureSchema& schema) {
  std::uint64_t frame = 0;
  auto make = [&](const std::map<ClassLabel, std::size_t>& counts, const char* name) {
    SynthConfig cfg;
    cfg.seed = derive_seed(bench.seed, std::string("synth/split/") + name);
    cfg.noise_scale = bench.noise_scale;
    cfg.missing_rate = bench.missing_rate;
    cfg.tcp_fraction = bench.tcp_fraction;
    cfg.frame_offset = frame;
    for (const auto& [c, n] : counts) {
      if (c == ClassLabel::Normal)
        cfg.n_benign = n;
      else
        cfg.attack_counts[c] = n;
      frame += n;
    }
    SourceSpec src;
    src.path = std::string("synth:") + name;
    src.filter = std::string(name) == "train" ? LabelFilter::normal : LabelFilter::all;
    return SplitInput{synth_dataset(cfg, schema), src};
  };
  const auto train = make(bench.counts.train, "train");
  const auto validation = make(bench.counts.validation, "validation");
  const auto test = make(bench.counts.test, "test");
  return assemble_splits({train}, {validation}, {test});
}

}  // namespace pfad
