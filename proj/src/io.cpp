#include "dualturn/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dualturn {

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for write: " + tmp);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("rename failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

static std::string bits_to_string(const std::vector<uint8_t>& v) {
  std::string s(v.size(), '0');
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i]) s[i] = '1';
  return s;
}

static std::vector<uint8_t> string_to_bits(const std::string& s) {
  std::vector<uint8_t> v(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1')
      throw std::invalid_argument("activity string must be 0/1");
    v[i] = s[i] == '1';
  }
  return v;
}

std::string timelines_to_jsonl(const std::vector<ActivityTimeline>& ts) {
  std::string out;
  for (const auto& t : ts) {
    nlohmann::json j;
    j["session_id"] = t.session_id;
    j["rate_fps"] = t.rate.fps;
    j["a"] = bits_to_string(t.a);
    j["b"] = bits_to_string(t.b);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ActivityTimeline> timelines_from_jsonl(const std::string& text) {
  std::vector<ActivityTimeline> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line);
    ActivityTimeline t;
    t.session_id = j.at("session_id");
    t.rate.fps = j.at("rate_fps");
    t.a = string_to_bits(j.at("a"));
    t.b = string_to_bits(j.at("b"));
    t.validate();
    out.push_back(std::move(t));
  }
  return out;
}

std::string events_to_csv(
    const std::vector<std::pair<std::string, std::vector<ActionEvent>>>& by_session) {
  std::string out = "session_id,frame,kind,agent_channel\n";
  for (const auto& [sid, events] : by_session)
    for (const ActionEvent& e : events) {
      out += sid;
      out += ',';
      out += std::to_string(e.frame);
      out += ',';
      out += action_name(e.kind);
      out += ',';
      out += channel_name(e.agent_channel);
      out += '\n';
    }
  return out;
}

static std::vector<std::string> split_csv_line(const std::string& line, size_t want) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  f.push_back(cur);
  if (f.size() != want)
    throw std::invalid_argument("bad CSV field count in: " + line);
  return f;
}

std::vector<std::pair<std::string, std::vector<ActionEvent>>> events_from_csv(
    const std::string& text) {
  std::vector<std::pair<std::string, std::vector<ActionEvent>>> out;
  std::istringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = split_csv_line(line, 4);
    ActionEvent e;
    e.frame = std::stoi(f[1]);
    e.kind = parse_action(f[2]);
    e.agent_channel = parse_channel(f[3]);
    if (out.empty() || out.back().first != f[0]) out.push_back({f[0], {}});
    out.back().second.push_back(e);
  }
  return out;
}

std::string words_to_csv(
    const std::vector<std::pair<std::string, std::vector<WordBoundary>>>& by_session) {
  std::string out = "session_id,channel,frame\n";
  for (const auto& [sid, words] : by_session)
    for (const WordBoundary& w : words) {
      out += sid;
      out += ',';
      out += channel_name(w.channel);
      out += ',';
      out += std::to_string(w.frame);
      out += '\n';
    }
  return out;
}

std::vector<std::pair<std::string, std::vector<WordBoundary>>> words_from_csv(
    const std::string& text) {
  std::vector<std::pair<std::string, std::vector<WordBoundary>>> out;
  std::istringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    auto f = split_csv_line(line, 3);
    WordBoundary w;
    w.channel = parse_channel(f[1]);
    w.frame = std::stoi(f[2]);
    if (out.empty() || out.back().first != f[0]) out.push_back({f[0], {}});
    out.back().second.push_back(w);
  }
  return out;
}

std::string segments_to_csv(const std::vector<ActivityTimeline>& ts) {
  std::string out = "session_id,channel,onset,offset\n";
  for (const auto& t : ts)
    for (Channel c : {Channel::A, Channel::B})
      for (const SpeechSegment& s : extract_segments(t, c)) {
        out += t.session_id;
        out += ',';
        out += channel_name(c);
        out += ',';
        out += std::to_string(s.onset);
        out += ',';
        out += std::to_string(s.offset);
        out += '\n';
      }
  return out;
}

std::string labels_to_csv(const std::string& session_id, const SignalLabels& labels) {
  std::string out =
      "session_id,frame,channel,eot,hold,bot,bc,vad,fvad0,fvad1,fvad2,fvad3\n";
  char buf[64];
  for (size_t t = 0; t < labels.frames(); ++t)
    for (Channel c : {Channel::A, Channel::B}) {
      const ChannelSignals& s = labels.channel(c);
      out += session_id;
      out += ',';
      out += std::to_string(t);
      out += ',';
      out += channel_name(c);
      double vals[9] = {s.eot[t], s.hold[t], s.bot[t], s.bc[t], s.vad[t],
                        s.fvad[0][t], s.fvad[1][t], s.fvad[2][t], s.fvad[3][t]};
      for (double v : vals) {
        std::snprintf(buf, sizeof buf, ",%.6f", v);
        out += buf;
      }
      out += '\n';
    }
  return out;
}

std::string decisions_to_jsonl(const std::string& session_id,
                               const std::vector<Decision>& ds) {
  std::string out;
  for (const Decision& d : ds) {
    nlohmann::json j;
    j["session_id"] = session_id;
    j["action"] = action_name(d.action);
    j["stride"] = d.stride;
    j["frame"] = d.frame;
    j["anchor"] = anchor_kind_name(d.anchor);
    j["snapshot"] = d.snapshot;
    j["policy_id"] = d.policy_id;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string timing_to_json(const TimingReport& r) {
  nlohmann::json j;
  j["p50_ms"] = r.p50_ms;
  j["p95_ms"] = r.p95_ms;
  j["realtime_factor"] = r.realtime_factor;
  j["strides"] = r.strides;
  return j.dump(2);
}

std::string config_hash(const std::string& canonical_json) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_json) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dualturn
