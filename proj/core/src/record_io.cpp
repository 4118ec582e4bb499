#include "iqlphase/record_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "iqlphase/errors.hpp"

namespace iqlphase {

namespace {

constexpr std::string_view kVersionLine = "#iqlphase-run 1";
constexpr std::string_view kEpisodeHeader =
    "episode:i64,return:f64,done_reason:str,steps:i64,updates:i64,epsilon:f64,td_count:i64,"
    "td_mean:f64,td_var:f64,grad_count:i64,grad_mean:f64,grad_var:f64,spread:f64,co_reach:f64";
constexpr std::string_view kEvalHeader = "episode:i64,k:i64,all_reached:bool,steps:i64,arrival_steps:list";

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <class Int>
Int parse_int(std::string_view text) {
  Int value{};
  const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw FormatError("bad integer field '" + std::string(text) + "'");
  }
  return value;
}

std::string format_arrivals(const std::vector<std::optional<int>>& arrivals) {
  std::string out;
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    if (i) out += ';';
    out += arrivals[i] ? std::to_string(*arrivals[i]) : "-";
  }
  return out;
}

std::vector<std::optional<int>> parse_arrivals(std::string_view text) {
  std::vector<std::optional<int>> out;
  if (text.empty()) return out;
  for (std::string_view tok : split(text, ';')) {
    if (tok == "-") {
      out.emplace_back(std::nullopt);
    } else {
      out.emplace_back(parse_int<int>(tok));
    }
  }
  return out;
}

nlohmann::ordered_json meta_to_json(const RunMeta& m) {
  nlohmann::ordered_json j;
  j["side"] = m.side;
  j["density"] = m.density.to_string();
  j["agent_count"] = m.agent_count;
  j["seed"] = m.seed;
  j["id_enabled"] = m.id_enabled;
  j["obs_dim"] = m.obs_dim;
  j["horizon"] = m.horizon;
  j["master_seed"] = std::to_string(m.master_seed);
  j["episodes_planned"] = m.episodes_planned;
  j["checkpoint"] = m.checkpoint;
  return j;
}

RunMeta meta_from_json(const nlohmann::json& j) {
  RunMeta m;
  m.side = j.at("side").get<int>();
  m.density = Density::parse(j.at("density").get<std::string>());
  m.agent_count = j.at("agent_count").get<int>();
  m.seed = j.at("seed").get<int>();
  m.id_enabled = j.at("id_enabled").get<bool>();
  m.obs_dim = j.at("obs_dim").get<int>();
  m.horizon = j.at("horizon").get<int>();
  m.master_seed = std::stoull(j.at("master_seed").get<std::string>());
  m.episodes_planned = j.at("episodes_planned").get<int>();
  m.checkpoint = j.at("checkpoint").get<std::string>();
  return m;
}

void append_eval_rows(std::string& out, std::span<const EvalRecord> evals) {
  for (const EvalRecord& e : evals) {
    out += std::to_string(e.episode_index) + ',' + std::to_string(e.k) + ',' + (e.all_reached ? "1" : "0") +
           ',' + std::to_string(e.steps) + ',' + format_arrivals(e.arrival_steps) + '\n';
  }
}

EvalRecord parse_eval_row(std::string_view line) {
  const auto f = split(line, ',');
  if (f.size() != 5) throw FormatError("eval row has " + std::to_string(f.size()) + " fields, expected 5");
  EvalRecord e;
  e.episode_index = parse_int<int>(f[0]);
  e.k = parse_int<int>(f[1]);
  if (f[2] != "0" && f[2] != "1") throw FormatError("bad boolean field");
  e.all_reached = f[2] == "1";
  e.steps = parse_int<int>(f[3]);
  e.arrival_steps = parse_arrivals(f[4]);
  return e;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), r.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), value);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size()) {
    throw FormatError("bad real field '" + std::string(text) + "'");
  }
  return value;
}

std::string format_eval_table(std::span<const EvalRecord> evals) {
  std::string out(kEvalHeader);
  out += '\n';
  append_eval_rows(out, evals);
  return out;
}

std::string format_run_record(const RunRecord& record) {
  std::string out(kVersionLine);
  out += "\n#meta " + meta_to_json(record.meta).dump() + "\n#table episodes\n";
  out += kEpisodeHeader;
  out += '\n';
  for (const EpisodeRow& r : record.episodes) {
    out += std::to_string(r.episode) + ',' + format_double(r.episode_return) + ',' +
           std::string(to_string(r.done_reason)) + ',' + std::to_string(r.steps) + ',' +
           std::to_string(r.updates) + ',' + format_double(r.epsilon) + ',' + std::to_string(r.td_count) + ',' +
           format_double(r.td_mean) + ',' + format_double(r.td_var) + ',' + std::to_string(r.grad_count) + ',' +
           format_double(r.grad_mean) + ',' + format_double(r.grad_var) + ',' + format_double(r.spread) + ',' +
           format_double(r.co_reach) + '\n';
  }
  out += "#table evals\n";
  out += format_eval_table(record.evals);
  return out;
}

RunRecord parse_run_record(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  std::size_t i = 0;
  auto expect = [&](std::string_view want) {
    if (i >= lines.size() || lines[i] != want) {
      throw FormatError("run record: expected '" + std::string(want) + "' at line " + std::to_string(i + 1));
    }
    ++i;
  };

  expect(kVersionLine);
  RunRecord rec;
  if (i >= lines.size() || !lines[i].starts_with("#meta ")) throw FormatError("run record: missing meta line");
  try {
    rec.meta = meta_from_json(nlohmann::json::parse(lines[i].substr(6)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("run record: bad meta block: ") + e.what());
  }
  ++i;
  expect("#table episodes");
  expect(kEpisodeHeader);
  for (; i < lines.size() && !lines[i].starts_with('#'); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 14) throw FormatError("episode row has wrong field count at line " + std::to_string(i + 1));
    EpisodeRow r;
    r.episode = parse_int<int>(f[0]);
    r.episode_return = parse_double(f[1]);
    r.done_reason = done_reason_from_string(f[2]);
    r.steps = parse_int<int>(f[3]);
    r.updates = parse_int<int>(f[4]);
    r.epsilon = parse_double(f[5]);
    r.td_count = parse_int<std::int64_t>(f[6]);
    r.td_mean = parse_double(f[7]);
    r.td_var = parse_double(f[8]);
    r.grad_count = parse_int<std::int64_t>(f[9]);
    r.grad_mean = parse_double(f[10]);
    r.grad_var = parse_double(f[11]);
    r.spread = parse_double(f[12]);
    r.co_reach = parse_double(f[13]);
    rec.episodes.push_back(r);
  }
  expect("#table evals");
  expect(kEvalHeader);
  for (; i < lines.size(); ++i) rec.evals.push_back(parse_eval_row(lines[i]));
  return rec;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_run_record(const std::filesystem::path& path, const RunRecord& record) {
  write_file_atomic(path, format_run_record(record));
}

RunRecord read_run_record(const std::filesystem::path& path) {
  try {
    return parse_run_record(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out += kHex[digest[k] >> 4];
    out += kHex[digest[k] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace iqlphase
