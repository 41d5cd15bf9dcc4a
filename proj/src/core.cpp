#include "mia/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kInsufficientShots: return "InsufficientShots";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kMissingTrace: return "MissingTrace";
    case ErrorCode::kDegenerateTokenization: return "DegenerateTokenization";
    case ErrorCode::kCapability: return "CapabilityError";
    case ErrorCode::kEmptyTokenScores: return "EmptyTokenScores";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kDegenerateLL: return "DegenerateLL";
    case ErrorCode::kTextMismatch: return "TextMismatch";
    case ErrorCode::kUnknownSampleId: return "UnknownSampleId";
    case ErrorCode::kMissingMemberShots: return "MissingMemberShots";
    case ErrorCode::kTransport: return "TransportError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Error";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kMember: return "member";
    case Label::kNonmember: return "nonmember";
    case Label::kUnknown: return "unknown";
  }
  return "unknown";
}

std::size_t Dataset::count(Label label) const {
  std::size_t n = 0;
  for (const auto& s : samples) n += s.label == label ? 1 : 0;
  return n;
}

const Sample* Dataset::find(std::string_view id) const {
  for (const auto& s : samples) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void TokenScores::validate() const {
  const std::size_t n = logprobs.size();
  if (tokens.size() != n || char_offsets.size() != n) {
    throw Error(ErrorCode::kValidation, "token, logprob and offset lists differ in length");
  }
  if (dist_mean && dist_mean->size() != n) throw Error(ErrorCode::kValidation, "dist_mean length mismatch");
  if (dist_std && dist_std->size() != n) throw Error(ErrorCode::kValidation, "dist_std length mismatch");
  for (double lp : logprobs) {
    if (!std::isfinite(lp)) throw Error(ErrorCode::kNonFiniteInput, "non-finite logprob");
    if (lp > 0.0) throw Error(ErrorCode::kValidation, "logprob > 0");
  }
  if (dist_std) {
    for (double s : *dist_std) {
      if (!(s >= 0.0)) throw Error(ErrorCode::kValidation, "dist_std < 0");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto [start, end] = char_offsets[i];
    if (end <= start) throw Error(ErrorCode::kValidation, "empty or inverted token span");
    if (i > 0 && start < char_offsets[i - 1].second) {
      throw Error(ErrorCode::kValidation, "token spans overlap or are out of order");
    }
  }
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kLoss: return "loss";
    case Method::kRef: return "ref";
    case Method::kZlib: return "zlib";
    case Method::kNeighbor: return "neighbor";
    case Method::kMinK: return "mink";
    case Method::kMinKPP: return "minkpp";
    case Method::kReCall: return "recall";
    case Method::kConReCall: return "conrecall";
  }
  return "?";
}

std::vector<Method> all_methods() {
  return {Method::kLoss, Method::kRef,    Method::kZlib,   Method::kNeighbor,
          Method::kMinK, Method::kMinKPP, Method::kReCall, Method::kConReCall};
}

Method parse_method(std::string_view name) {
  for (Method m : all_methods()) {
    if (to_string(m) == name) return m;
  }
  throw Error(ErrorCode::kValidation, "unknown method '" + std::string(name) + "'");
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(text[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return false;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += len;
  }
  return true;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<WordSpan> word_spans(std::string_view text) {
  std::vector<WordSpan> spans;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    spans.push_back({start, i});
  }
  return spans;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  for (const auto& s : word_spans(text)) words.emplace_back(text.substr(s.start, s.end - s.start));
  return words;
}

std::string join(const std::vector<std::string>& parts, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(separator);
    out.append(parts[i]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

namespace {

Label parse_label(const json& value, std::size_t line_no) {
  if (value.is_number_integer()) {
    const auto v = value.get<long long>();
    if (v == 1) return Label::kMember;
    if (v == 0) return Label::kNonmember;
  } else if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "member") return Label::kMember;
    if (s == "nonmember") return Label::kNonmember;
    if (s == "unknown") return Label::kUnknown;
  }
  throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": invalid label " + value.dump());
}

}  // namespace

Dataset parse_dataset_jsonl(std::string_view content, std::string name) {
  Dataset ds;
  ds.name = std::move(name);
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string() || !obj.contains("label")) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected object with text and label");
    }
    Sample s;
    if (obj.contains("id") && !obj["id"].is_null()) {
      if (obj["id"].is_string()) {
        s.id = obj["id"].get<std::string>();
      } else if (obj["id"].is_number_integer()) {
        s.id = std::to_string(obj["id"].get<long long>());
      } else {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": id must be a string");
      }
    } else {
      // Auto-assigned ids are zero-based line numbers.
      s.id = std::to_string(line_no - 1);
    }
    if (s.id.empty()) throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": empty id");
    s.text = obj["text"].get<std::string>();
    if (s.text.empty() || !is_valid_utf8(s.text)) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": text empty or not valid UTF-8");
    }
    s.label = parse_label(obj["label"], line_no);
    if (!seen.insert(s.id).second) throw Error(ErrorCode::kDuplicateId, s.id);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw Error(ErrorCode::kParse, "dataset '" + ds.name + "' is empty");
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::kIo, "no such file: " + path.string());
  Dataset ds = parse_dataset_jsonl(read_file(path), path.stem().string());
  ds.metadata["source"] = path.string();
  return ds;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  std::string out;
  for (const auto& s : dataset.samples) {
    json obj = {{"id", s.id}, {"text", s.text}};
    switch (s.label) {
      case Label::kMember: obj["label"] = 1; break;
      case Label::kNonmember: obj["label"] = 0; break;
      case Label::kUnknown: obj["label"] = "unknown"; break;
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, dataset_to_jsonl(dataset));
}

std::string build_prefix(const PrefixPool& pool, PrefixKind kind, std::size_t n_shots) {
  if (n_shots == 0) throw Error(ErrorCode::kValidation, "n_shots must be positive");
  const auto& shots = kind == PrefixKind::kMember ? pool.member_shots : pool.nonmember_shots;
  if (n_shots > shots.size()) {
    throw Error(ErrorCode::kInsufficientShots,
                "have " + std::to_string(shots.size()) + ", want " + std::to_string(n_shots));
  }
  std::string out;
  for (std::size_t i = 0; i < n_shots; ++i) {
    if (shots[i].empty()) throw Error(ErrorCode::kValidation, "empty shot text");
    if (i > 0) out += pool.separator;
    out += shots[i];
  }
  return out;
}

PoolSplit split_prefix_pool(const Dataset& dataset, std::size_t n_member, std::size_t n_nonmember,
                            std::uint64_t seed) {
  std::vector<std::size_t> members, nonmembers;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (dataset.samples[i].label == Label::kMember) members.push_back(i);
    if (dataset.samples[i].label == Label::kNonmember) nonmembers.push_back(i);
  }
  if (members.size() < n_member) {
    throw Error(ErrorCode::kInsufficientSamples, "need " + std::to_string(n_member) + " members, have " +
                                                     std::to_string(members.size()));
  }
  if (nonmembers.size() < n_nonmember) {
    throw Error(ErrorCode::kInsufficientSamples, "need " + std::to_string(n_nonmember) +
                                                     " non-members, have " + std::to_string(nonmembers.size()));
  }

  PoolSplit out;
  std::vector<bool> taken(dataset.samples.size(), false);
  Rng member_rng(derive_seed(seed, "pool/member"));
  for (std::size_t pick : member_rng.sample_without_replacement(members.size(), n_member)) {
    const Sample& s = dataset.samples[members[pick]];
    out.pool.member_shots.push_back(s.text);
    out.pool.member_ids.push_back(s.id);
    taken[members[pick]] = true;
  }
  Rng nonmember_rng(derive_seed(seed, "pool/nonmember"));
  for (std::size_t pick : nonmember_rng.sample_without_replacement(nonmembers.size(), n_nonmember)) {
    const Sample& s = dataset.samples[nonmembers[pick]];
    out.pool.nonmember_shots.push_back(s.text);
    out.pool.nonmember_ids.push_back(s.id);
    taken[nonmembers[pick]] = true;
  }

  out.eval.name = dataset.name;
  out.eval.metadata = dataset.metadata;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    if (!taken[i]) out.eval.samples.push_back(dataset.samples[i]);
  }
  return out;
}

}  // namespace mia
