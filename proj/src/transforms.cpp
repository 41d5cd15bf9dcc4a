#include "mia/transforms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <json.hpp>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;

namespace {

std::string fold(std::string_view word) {
  std::string out(word);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_rate(double rate) {
  if (!(rate > 0.0 && rate < 1.0)) throw Error(ErrorCode::kValidation, "rate must be in (0, 1)");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void SynonymLexicon::validate() const {
  for (const auto& [word, syns] : entries) {
    if (syns.empty()) throw Error(ErrorCode::kValidation, "lexicon entry '" + word + "' has no synonyms");
    for (const auto& s : syns) {
      if (s.empty()) throw Error(ErrorCode::kValidation, "lexicon entry '" + word + "' has an empty synonym");
      const bool same = case_sensitive ? s == word : fold(s) == fold(word);
      if (same) throw Error(ErrorCode::kValidation, "lexicon entry '" + word + "' lists itself as a synonym");
    }
  }
}

const std::vector<std::string>* SynonymLexicon::lookup(std::string_view word) const {
  auto it = entries.find(case_sensitive ? std::string(word) : fold(word));
  return it == entries.end() ? nullptr : &it->second;
}

SynonymLexicon parse_lexicon_tsv(std::string_view content, bool case_sensitive) {
  SynonymLexicon lex;
  lex.case_sensitive = case_sensitive;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    const std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "lexicon line " + std::to_string(line_no) + ": expected word<TAB>synonyms");
    }
    std::string head = trim(line.substr(0, tab));
    if (!case_sensitive) head = fold(head);
    auto& syns = lex.entries[head];
    std::string_view rest = line.substr(tab + 1);
    std::size_t p = 0;
    while (p <= rest.size()) {
      std::size_t comma = rest.find(',', p);
      if (comma == std::string_view::npos) comma = rest.size();
      std::string syn = trim(rest.substr(p, comma - p));
      if (!syn.empty() && std::find(syns.begin(), syns.end(), syn) == syns.end()) syns.push_back(std::move(syn));
      p = comma + 1;
    }
  }
  lex.validate();
  return lex;
}

SynonymLexicon load_lexicon(const std::filesystem::path& path, bool case_sensitive) {
  return parse_lexicon_tsv(read_file(path), case_sensitive);
}

std::size_t rounded_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::round(rate * static_cast<double>(n)));
}

TransformResult random_deletion(std::string_view text, double rate, std::uint64_t seed) {
  check_rate(rate);
  auto words = split_words(text);
  if (words.empty()) throw Error(ErrorCode::kValidation, "random_deletion: text has no words");
  TransformResult r;
  r.requested = rounded_count(rate, words.size());
  r.applied = std::min(r.requested, words.size() - 1);
  Rng rng(seed);
  std::vector<bool> drop(words.size(), false);
  for (std::size_t i : rng.sample_without_replacement(words.size(), r.applied)) drop[i] = true;
  std::vector<std::string> kept;
  kept.reserve(words.size() - r.applied);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (!drop[i]) kept.push_back(std::move(words[i]));
  }
  r.text = join(kept, " ");
  return r;
}

TransformResult synonym_substitution(std::string_view text, double rate, const SynonymLexicon& lexicon,
                                     std::uint64_t seed) {
  check_rate(rate);
  if (lexicon.entries.empty()) throw Error(ErrorCode::kValidation, "synonym_substitution: empty lexicon");
  auto words = split_words(text);
  if (words.empty()) throw Error(ErrorCode::kValidation, "synonym_substitution: text has no words");
  TransformResult r;
  r.requested = rounded_count(rate, words.size());

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (lexicon.lookup(words[i])) candidates.push_back(i);
  }
  Rng rng(seed);
  const auto picks = rng.sample_without_replacement(candidates.size(), std::min(r.requested, candidates.size()));
  for (std::size_t pick : picks) {
    std::string& word = words[candidates[pick]];
    const auto& syns = *lexicon.lookup(word);
    std::string replacement = syns[rng.uniform_index(syns.size())];
    if (std::isupper(static_cast<unsigned char>(word.front())) && !replacement.empty()) {
      replacement.front() = static_cast<char>(std::toupper(static_cast<unsigned char>(replacement.front())));
    }
    word = std::move(replacement);
  }
  r.applied = picks.size();
  r.text = join(words, " ");
  return r;
}

std::map<std::string, std::string> parse_paraphrase_pairs(std::string_view content) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    const std::string_view line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto obj = json::parse(line);
      const auto& id = obj.at("id");
      std::string key = id.is_string() ? id.get<std::string>() : std::to_string(id.get<long long>());
      std::string text = obj.at("text").get<std::string>();
      if (text.empty() || !is_valid_utf8(text)) throw Error(ErrorCode::kParse, "empty or invalid text");
      if (!out.emplace(key, std::move(text)).second) throw Error(ErrorCode::kDuplicateId, key);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, "paraphrase line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::map<std::string, std::string> load_paraphrase_pairs(const std::filesystem::path& path) {
  return parse_paraphrase_pairs(read_file(path));
}

Dataset apply_paraphrases(const Dataset& base, const std::map<std::string, std::string>& pairs) {
  for (const auto& [id, text] : pairs) {
    if (!base.find(id)) throw Error(ErrorCode::kUnknownSampleId, id);
  }
  Dataset out = base;
  for (auto& s : out.samples) {
    if (auto it = pairs.find(s.id); it != pairs.end()) s.text = it->second;
  }
  return out;
}

std::string_view to_string(TransformSpec::Op op) {
  switch (op) {
    case TransformSpec::Op::kNone: return "none";
    case TransformSpec::Op::kDeletion: return "deletion";
    case TransformSpec::Op::kSynonym: return "synonym";
    case TransformSpec::Op::kParaphrase: return "paraphrase";
  }
  return "?";
}

TransformSpec::Op parse_transform_op(std::string_view name) {
  for (auto op : {TransformSpec::Op::kNone, TransformSpec::Op::kDeletion, TransformSpec::Op::kSynonym,
                  TransformSpec::Op::kParaphrase}) {
    if (to_string(op) == name) return op;
  }
  throw Error(ErrorCode::kValidation, "unknown transform '" + std::string(name) + "'");
}

Dataset transform_dataset(const Dataset& dataset, const TransformSpec& spec, std::vector<TransformReportEntry>* report) {
  using Op = TransformSpec::Op;
  if (spec.op == Op::kNone) return dataset;
  if (spec.op == Op::kParaphrase) {
    Dataset out = apply_paraphrases(dataset, load_paraphrase_pairs(spec.paraphrase_path));
    if (report) {
      for (const auto& s : dataset.samples) {
        const bool changed = out.find(s.id)->text != s.text;
        report->push_back({s.id, "paraphrase", 0.0, spec.seed, 1, changed ? 1u : 0u});
      }
    }
    return out;
  }
  SynonymLexicon lexicon;
  if (spec.op == Op::kSynonym) lexicon = load_lexicon(spec.lexicon_path);
  Dataset out = dataset;
  for (auto& s : out.samples) {
    const std::uint64_t seed = derive_seed(spec.seed, "transform/" + s.id);
    const TransformResult r = spec.op == Op::kDeletion ? random_deletion(s.text, spec.rate, seed)
                                                       : synonym_substitution(s.text, spec.rate, lexicon, seed);
    if (report) report->push_back({s.id, std::string(to_string(spec.op)), spec.rate, spec.seed, r.requested, r.applied});
    s.text = r.text;
  }
  return out;
}

std::string transform_report_jsonl(const std::vector<TransformReportEntry>& report) {
  std::string out;
  for (const auto& e : report) {
    json obj = {{"sample_id", e.sample_id}, {"op", e.op},           {"rate", e.rate},
                {"seed", e.seed},           {"requested", e.requested}, {"applied", e.applied}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace mia
