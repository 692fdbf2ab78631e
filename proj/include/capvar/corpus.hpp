#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capvar {

enum class Group { Human, Model };

std::string_view group_name(Group g);  // "human" / "model"
std::optional<Group> parse_group(std::string_view s);

struct RawCaption {
  std::string image_id;
  std::string describer_id;
  Group group = Group::Human;
  std::string text;
};

struct TokenizedCaption {
  std::string image_id;
  std::string describer_id;
  Group group = Group::Human;
  std::vector<std::string> tokens;
};

struct ImageCaptions {
  std::vector<TokenizedCaption> human;
  std::vector<TokenizedCaption> model;

  std::size_t size() const { return human.size() + model.size(); }
};

struct DatasetMetadata {
  std::size_t n_images = 0;
  std::size_t n_human = 0;
  std::size_t n_model = 0;
};

// Immutable after construction. Images are kept sorted by id and each group's
// captions sorted by describer id, so iteration order never depends on the
// input file order.
class Dataset {
 public:
  Dataset() = default;

  // Validates the structural invariants (non-empty ids, unique
  // (image, describer) keys, every image has each group present in the
  // dataset). With strict=true every image must hold exactly 5 human and 5
  // model captions.
  static Dataset from_captions(std::vector<TokenizedCaption> captions, bool strict);

  const std::map<std::string, ImageCaptions>& images() const { return images_; }
  const DatasetMetadata& metadata() const { return meta_; }
  std::size_t n_captions() const { return meta_.n_human + meta_.n_model; }

  // All captions ordered by (image_id, describer_id).
  std::vector<TokenizedCaption> all_captions() const;

  const TokenizedCaption* find(std::string_view image_id, std::string_view describer_id) const;

 private:
  std::map<std::string, ImageCaptions> images_;
  DatasetMetadata meta_;
};

inline constexpr std::size_t kProtocolCaptionsPerGroup = 5;

enum class InputFormat { Jsonl, Csv };

struct DroppedRecord {
  std::size_t line = 0;
  std::string image_id;
  std::string describer_id;
  std::string reason;
};

struct LoadReport {
  std::size_t records_read = 0;
  std::size_t records_dropped = 0;
  std::vector<DroppedRecord> dropped;

  std::string summary() const;  // "30 read, 0 dropped"
};

struct LoadedDataset {
  Dataset dataset;
  LoadReport report;
};

// Keeps ASCII letters, digits, the punctuation set .,;:!?'"()-/&%$#@ and
// spaces. Any run of whitespace becomes one space; leading and trailing
// space is stripped; every other byte (including all non-ASCII) is removed.
std::string clean_text(std::string_view text);

// Lowercases, splits on spaces, detaches edge punctuation and English
// clitics ('s n't 're 've 'll 'd 'm), then drops tokens made only of
// punctuation. Throws EMPTY_AFTER_TOKENIZATION when nothing is left.
std::vector<std::string> tokenize(std::string_view cleaned);

// Lowercase + validation path for externally tokenized input.
std::vector<std::string> normalize_pretokenized(const std::vector<std::string>& tokens);

bool is_valid_token(std::string_view token);

LoadedDataset load_dataset(const std::filesystem::path& path, InputFormat format, bool strict);
LoadedDataset load_dataset_jsonl(std::string_view content, bool strict);
LoadedDataset load_dataset_csv(std::string_view content, bool strict);

// Canonical JSONL form (tokens field, sorted). Two equal datasets serialize
// to identical bytes.
std::string serialize_dataset(const Dataset& dataset);

// FNV-1a 64 of serialize_dataset, hex encoded.
std::string dataset_fingerprint(const Dataset& dataset);

}  // namespace capvar
