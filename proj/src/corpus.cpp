#include "capvar/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "capvar/error.hpp"

namespace capvar {

namespace {

using nlohmann::json;

constexpr std::string_view kPunctuation = ".,;:!?'\"()-/&%$#@";
// Characters split off the edges of a whitespace chunk.
constexpr std::string_view kEdgePunctuation = ".,;:!?\"()";
constexpr std::string_view kClitics[] = {"'s", "'re", "'ve", "'ll", "'d", "'m"};

bool is_ascii_alnum(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool in_set(std::string_view set, char c) { return set.find(c) != std::string_view::npos; }

bool is_pure_punctuation(std::string_view tok) {
  return std::all_of(tok.begin(), tok.end(), [](char c) { return in_set(kPunctuation, c); });
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  std::size_t b = 0, e = chunk.size();
  while (b < e && in_set(kEdgePunctuation, chunk[b])) ++b;
  while (e > b && in_set(kEdgePunctuation, chunk[e - 1])) --e;
  std::string_view core = chunk.substr(b, e - b);
  if (core.empty()) return;

  auto emit = [&out](std::string_view t) {
    if (!t.empty() && !is_pure_punctuation(t)) out.emplace_back(t);
  };

  if (core.size() > 3 && core.ends_with("n't")) {
    emit(core.substr(0, core.size() - 3));
    emit("n't");
    return;
  }
  for (std::string_view clitic : kClitics) {
    if (core.size() > clitic.size() && core.ends_with(clitic)) {
      emit(core.substr(0, core.size() - clitic.size()));
      emit(clitic);
      return;
    }
  }
  // plural possessive: "dogs'" -> dogs + '
  if (core.size() > 1 && core.back() == '\'') {
    emit(core.substr(0, core.size() - 1));
    return;
  }
  emit(core);
}

std::string require_string(const json& obj, const char* field, std::size_t line) {
  auto it = obj.find(field);
  if (it == obj.end() || !it->is_string()) {
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": missing or non-string field '" + field + "'");
  }
  return it->get<std::string>();
}

struct PendingRecord {
  std::size_t line = 0;
  std::string image_id;
  std::string describer_id;
  Group group = Group::Human;
  std::optional<std::string> caption;
  std::optional<std::vector<std::string>> tokens;
};

LoadedDataset assemble(std::vector<PendingRecord> records, bool strict) {
  LoadReport report;
  report.records_read = records.size();

  std::set<std::pair<std::string, std::string>> seen;
  std::vector<TokenizedCaption> captions;
  captions.reserve(records.size());

  for (auto& r : records) {
    if (!seen.emplace(r.image_id, r.describer_id).second) {
      throw Error(ErrorCode::DuplicateKey, "line " + std::to_string(r.line) + ": duplicate (" +
                                               r.image_id + ", " + r.describer_id + ")");
    }
    TokenizedCaption tc{r.image_id, r.describer_id, r.group, {}};
    try {
      if (r.tokens) {
        tc.tokens = normalize_pretokenized(*r.tokens);
        if (tc.tokens.empty()) throw Error(ErrorCode::EmptyAfterTokenization, "no tokens");
      } else {
        tc.tokens = tokenize(clean_text(*r.caption));
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyAfterTokenization) throw;
      report.dropped.push_back({r.line, r.image_id, r.describer_id,
                                std::string(error_code_name(e.code()))});
      continue;
    }
    captions.push_back(std::move(tc));
  }
  report.records_dropped = report.dropped.size();
  return {Dataset::from_captions(std::move(captions), strict), std::move(report)};
}

// RFC 4180 reader. Returns rows with the 1-based line each row starts on.
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_csv(std::string_view text) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t line = 1;
  std::size_t row_line = 1;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.emplace_back(row_line, std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          throw Error(ErrorCode::ParseError,
                      "line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        [[fallthrough]];
      case '\n':
        end_row();
        ++line;
        row_line = line;
        break;
      default:
        if (field_was_quoted) {
          throw Error(ErrorCode::ParseError,
                      "line " + std::to_string(line) + ": text after closing quote");
        }
        field.push_back(c);
    }
  }
  if (in_quotes) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(row_line) + ": unterminated quote");
  }
  if (!field.empty() || !row.empty() || field_was_quoted) end_row();
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string_view group_name(Group g) { return g == Group::Human ? "human" : "model"; }

std::optional<Group> parse_group(std::string_view s) {
  if (s == "human") return Group::Human;
  if (s == "model") return Group::Model;
  return std::nullopt;
}

std::string clean_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (unsigned char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (c >= 0x80) continue;
    if (!is_ascii_alnum(c) && !in_set(kPunctuation, static_cast<char>(c))) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(c));
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view cleaned) {
  std::string lower(cleaned);
  std::transform(lower.begin(), lower.end(), lower.begin(), ascii_lower);

  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && is_space(static_cast<unsigned char>(lower[i]))) ++i;
    std::size_t j = i;
    while (j < lower.size() && !is_space(static_cast<unsigned char>(lower[j]))) ++j;
    if (j > i) split_chunk(std::string_view(lower).substr(i, j - i), tokens);
    i = j;
  }
  if (tokens.empty()) throw Error(ErrorCode::EmptyAfterTokenization, "no tokens remain");
  return tokens;
}

bool is_valid_token(std::string_view token) {
  // <s> and </s> are the n-gram padding symbols
  if (token.empty() || token == "<s>" || token == "</s>") return false;
  return std::none_of(token.begin(), token.end(), [](char ch) {
    auto c = static_cast<unsigned char>(ch);
    return c >= 0x80 || is_space(c) || c < 0x20 || c == 0x7f;
  });
}

std::vector<std::string> normalize_pretokenized(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (!is_valid_token(t)) {
      throw Error(ErrorCode::ParseError, "invalid pre-tokenized token '" + t + "'");
    }
    std::string lower(t);
    std::transform(lower.begin(), lower.end(), lower.begin(), ascii_lower);
    out.push_back(std::move(lower));
  }
  return out;
}

Dataset Dataset::from_captions(std::vector<TokenizedCaption> captions, bool strict) {
  Dataset ds;
  bool any_human = false, any_model = false;
  for (auto& c : captions) {
    if (c.image_id.empty() || c.describer_id.empty()) {
      throw Error(ErrorCode::ParseError, "empty image_id or describer_id");
    }
    if (c.tokens.empty()) {
      throw Error(ErrorCode::EmptyAfterTokenization,
                  "caption (" + c.image_id + ", " + c.describer_id + ") has no tokens");
    }
    for (const auto& t : c.tokens) {
      if (!is_valid_token(t)) throw Error(ErrorCode::ParseError, "invalid token '" + t + "'");
    }
    auto& img = ds.images_[c.image_id];
    if (c.group == Group::Human) {
      any_human = true;
      ++ds.meta_.n_human;
      img.human.push_back(std::move(c));
    } else {
      any_model = true;
      ++ds.meta_.n_model;
      img.model.push_back(std::move(c));
    }
  }

  auto by_describer = [](const TokenizedCaption& a, const TokenizedCaption& b) {
    return a.describer_id < b.describer_id;
  };
  for (auto& [id, img] : ds.images_) {
    std::sort(img.human.begin(), img.human.end(), by_describer);
    std::sort(img.model.begin(), img.model.end(), by_describer);
    for (std::size_t i = 1; i < img.human.size(); ++i)
      if (img.human[i].describer_id == img.human[i - 1].describer_id)
        throw Error(ErrorCode::DuplicateKey, "duplicate (" + id + ", " + img.human[i].describer_id + ")");
    for (std::size_t i = 1; i < img.model.size(); ++i)
      if (img.model[i].describer_id == img.model[i - 1].describer_id)
        throw Error(ErrorCode::DuplicateKey, "duplicate (" + id + ", " + img.model[i].describer_id + ")");

    if (strict) {
      if (img.human.size() != kProtocolCaptionsPerGroup || img.model.size() != kProtocolCaptionsPerGroup) {
        throw Error(ErrorCode::ProtocolViolation,
                    "image " + id + " has " + std::to_string(img.human.size()) + " human and " +
                        std::to_string(img.model.size()) + " model captions (expected 5 + 5)");
      }
    } else if ((any_human && img.human.empty()) || (any_model && img.model.empty())) {
      throw Error(ErrorCode::ProtocolViolation,
                  "image " + id + " is missing captions for a group present in the dataset");
    }
  }
  ds.meta_.n_images = ds.images_.size();
  return ds;
}

std::vector<TokenizedCaption> Dataset::all_captions() const {
  std::vector<TokenizedCaption> out;
  out.reserve(n_captions());
  for (const auto& [id, img] : images_) {
    auto start = out.size();
    out.insert(out.end(), img.human.begin(), img.human.end());
    out.insert(out.end(), img.model.begin(), img.model.end());
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(start), out.end(),
              [](const auto& a, const auto& b) { return a.describer_id < b.describer_id; });
  }
  return out;
}

const TokenizedCaption* Dataset::find(std::string_view image_id, std::string_view describer_id) const {
  auto it = images_.find(std::string(image_id));
  if (it == images_.end()) return nullptr;
  for (const auto* group : {&it->second.human, &it->second.model}) {
    for (const auto& c : *group)
      if (c.describer_id == describer_id) return &c;
  }
  return nullptr;
}

std::string LoadReport::summary() const {
  return std::to_string(records_read) + " read, " + std::to_string(records_dropped) + " dropped";
}

LoadedDataset load_dataset_jsonl(std::string_view content, bool strict) {
  std::vector<PendingRecord> records;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": record is not an object");
    }
    PendingRecord r;
    r.line = line_no;
    r.image_id = require_string(obj, "image_id", line_no);
    r.describer_id = require_string(obj, "describer_id", line_no);
    auto group = parse_group(require_string(obj, "group", line_no));
    if (!group) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": group must be \"human\" or \"model\"");
    }
    r.group = *group;
    if (r.image_id.empty() || r.describer_id.empty()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": empty id");
    }
    if (auto it = obj.find("tokens"); it != obj.end()) {
      if (!it->is_array()) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": tokens must be an array");
      }
      std::vector<std::string> toks;
      for (const auto& t : *it) {
        if (!t.is_string()) {
          throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": non-string token");
        }
        toks.push_back(t.get<std::string>());
      }
      try {
        r.tokens = normalize_pretokenized(toks);
      } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + e.detail());
      }
    } else {
      r.caption = require_string(obj, "caption", line_no);
    }
    records.push_back(std::move(r));
  }
  return assemble(std::move(records), strict);
}

LoadedDataset load_dataset_csv(std::string_view content, bool strict) {
  auto rows = parse_csv(content);
  if (rows.empty()) throw Error(ErrorCode::ParseError, "line 1: missing header");
  const auto& header = rows.front().second;
  const std::vector<std::string> expected{"image_id", "describer_id", "group", "caption"};
  if (header != expected) {
    throw Error(ErrorCode::ParseError, "line 1: header must be image_id,describer_id,group,caption");
  }
  std::vector<PendingRecord> records;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& [line, fields] = rows[i];
    if (fields.size() != 4) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": expected 4 fields, got " +
                                             std::to_string(fields.size()));
    }
    auto group = parse_group(fields[2]);
    if (!group) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line) + ": group must be \"human\" or \"model\"");
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": empty id");
    }
    PendingRecord r;
    r.line = line;
    r.image_id = fields[0];
    r.describer_id = fields[1];
    r.group = *group;
    r.caption = fields[3];
    records.push_back(std::move(r));
  }
  return assemble(std::move(records), strict);
}

LoadedDataset load_dataset(const std::filesystem::path& path, InputFormat format, bool strict) {
  std::string content = read_file(path);
  return format == InputFormat::Jsonl ? load_dataset_jsonl(content, strict)
                                      : load_dataset_csv(content, strict);
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  for (const auto& c : dataset.all_captions()) {
    json obj = json::object();
    obj["image_id"] = c.image_id;
    obj["describer_id"] = c.describer_id;
    obj["group"] = std::string(group_name(c.group));
    obj["tokens"] = c.tokens;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string dataset_fingerprint(const Dataset& dataset) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : serialize_dataset(dataset)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace capvar
