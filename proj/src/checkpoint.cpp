#include "uql/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uql {

namespace {

constexpr const char* kMagic = "uql-checkpoint-v1";

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

void write_table(std::ostream& out, const QTable& q) {
  for (double v : q.values) out << ' ' << hex_double(v);
  out << '\n';
}

void read_table(std::istream& in, QTable& q) {
  for (double& v : q.values) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated table");
    v = std::strtod(tok.c_str(), nullptr);
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const UqlAgent& agent,
                     const Rng& rng) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << kMagic << '\n';
  out << agent.members_.size() << ' ' << agent.num_states_ << ' '
      << agent.num_actions_ << '\n';
  for (const QTable& q : agent.members_) write_table(out, q);
  for (const QTable& q : agent.targets_) write_table(out, q);
  for (std::size_t i = 0; i < agent.visits_.size(); ++i)
    out << (i ? " " : "") << agent.visits_[i];
  out << '\n';
  out << agent.update_rounds_ << '\n';
  auto s = rng.state();
  char buf[80];
  std::snprintf(buf, sizeof(buf),
                "%" PRIx64 " %" PRIx64 " %" PRIx64 " %" PRIx64, s[0], s[1],
                s[2], s[3]);
  out << buf << '\n';
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void load_checkpoint(const std::string& path, UqlAgent& agent, Rng& rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::string magic;
  in >> magic;
  if (magic != kMagic) throw std::runtime_error("checkpoint: bad header");
  std::size_t k;
  int s, a;
  in >> k >> s >> a;
  if (k != agent.members_.size() || s != agent.num_states_ ||
      a != agent.num_actions_)
    throw std::runtime_error("checkpoint: shape mismatch");
  for (QTable& q : agent.members_) read_table(in, q);
  for (QTable& q : agent.targets_) read_table(in, q);
  for (long& v : agent.visits_)
    if (!(in >> v)) throw std::runtime_error("checkpoint: truncated visits");
  if (!(in >> agent.update_rounds_))
    throw std::runtime_error("checkpoint: truncated counter");
  std::array<std::uint64_t, 4> st{};
  for (auto& w : st) {
    std::string tok;
    if (!(in >> tok)) throw std::runtime_error("checkpoint: truncated rng state");
    w = std::strtoull(tok.c_str(), nullptr, 16);
  }
  rng.set_state(st);
}

}  // namespace uql
